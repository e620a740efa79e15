#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>

#include "stylemix/error.hpp"

namespace stylemix::core {

using EigenMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Row-major dense matrix of doubles.
///
/// Storage is an Eigen row-major matrix, so `data()` is a contiguous
/// rows*cols array in row-major order. Vectors are stored as 1 x n.
class DenseMatrix {
public:
    DenseMatrix() = default;

    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : m_(EigenMatrix::Constant(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols), fill)) {}

    explicit DenseMatrix(EigenMatrix m) : m_(std::move(m)) {}

    template <typename Derived>
    static DenseMatrix from_eigen(const Eigen::MatrixBase<Derived>& expr) {
        return DenseMatrix(EigenMatrix(expr));
    }

    static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
        const std::size_t r = rows.size();
        const std::size_t c = r == 0 ? 0 : rows.begin()->size();
        DenseMatrix out(r, c);
        std::size_t i = 0;
        for (const auto& row : rows) {
            if (row.size() != c) {
                throw DomainError("DenseMatrix::from_rows: ragged rows");
            }
            std::size_t j = 0;
            for (double v : row) {
                out(i, j++) = v;
            }
            ++i;
        }
        return out;
    }

    static DenseMatrix row_vector(std::span<const double> values) {
        DenseMatrix out(1, values.size());
        std::copy(values.begin(), values.end(), out.data().begin());
        return out;
    }

    std::size_t rows() const noexcept { return static_cast<std::size_t>(m_.rows()); }
    std::size_t cols() const noexcept { return static_cast<std::size_t>(m_.cols()); }
    std::size_t size() const noexcept { return static_cast<std::size_t>(m_.size()); }
    bool empty() const noexcept { return m_.size() == 0; }

    double& operator()(std::size_t r, std::size_t c) {
        return m_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    }
    double operator()(std::size_t r, std::size_t c) const {
        return m_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    }

    std::span<double> data() noexcept { return {m_.data(), size()}; }
    std::span<const double> data() const noexcept { return {m_.data(), size()}; }

    std::span<double> row(std::size_t r) noexcept { return {m_.data() + r * cols(), cols()}; }
    std::span<const double> row(std::size_t r) const noexcept { return {m_.data() + r * cols(), cols()}; }

    EigenMatrix& eigen() noexcept { return m_; }
    const EigenMatrix& eigen() const noexcept { return m_; }

    void fill(double v) { m_.setConstant(v); }
    void set_zero() { m_.setZero(); }

    bool same_shape(const DenseMatrix& other) const noexcept {
        return rows() == other.rows() && cols() == other.cols();
    }

    bool all_finite() const noexcept {
        for (double v : data()) {
            if (!std::isfinite(v)) {
                return false;
            }
        }
        return true;
    }

    DenseMatrix& operator+=(const DenseMatrix& other) {
        require_same_shape(other, "+=");
        m_ += other.m_;
        return *this;
    }
    DenseMatrix& operator-=(const DenseMatrix& other) {
        require_same_shape(other, "-=");
        m_ -= other.m_;
        return *this;
    }
    DenseMatrix& operator*=(double s) {
        m_ *= s;
        return *this;
    }

    // this += s * other
    void add_scaled(const DenseMatrix& other, double s) {
        require_same_shape(other, "add_scaled");
        m_ += s * other.m_;
    }

    friend DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b) { return a += b; }
    friend DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b) { return a -= b; }
    friend DenseMatrix operator*(DenseMatrix a, double s) { return a *= s; }
    friend DenseMatrix operator*(double s, DenseMatrix a) { return a *= s; }

    // Exact element-wise equality (== on doubles, so +0 == -0).
    friend bool operator==(const DenseMatrix& a, const DenseMatrix& b) {
        return a.same_shape(b) && a.m_ == b.m_;
    }

private:
    void require_same_shape(const DenseMatrix& other, const char* op) const {
        if (!same_shape(other)) {
            throw DomainError(std::string("DenseMatrix ") + op + ": shape mismatch");
        }
    }

    EigenMatrix m_;
};

inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows()) {
        throw DomainError("matmul: inner dimensions differ");
    }
    EigenMatrix out(a.eigen().rows(), b.eigen().cols());
    out.noalias() = a.eigen() * b.eigen();
    return DenseMatrix(std::move(out));
}

// a * b^T
inline DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.cols()) {
        throw DomainError("matmul_nt: inner dimensions differ");
    }
    EigenMatrix out(a.eigen().rows(), b.eigen().rows());
    out.noalias() = a.eigen() * b.eigen().transpose();
    return DenseMatrix(std::move(out));
}

inline DenseMatrix transpose(const DenseMatrix& a) {
    return DenseMatrix(EigenMatrix(a.eigen().transpose()));
}

/// Sum of element-wise products.
inline double frobenius_dot(const DenseMatrix& a, const DenseMatrix& b) {
    if (!a.same_shape(b)) {
        throw DomainError("frobenius_dot: shape mismatch");
    }
    return a.eigen().cwiseProduct(b.eigen()).sum();
}

inline double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
    if (!a.same_shape(b)) {
        throw DomainError("max_abs_diff: shape mismatch");
    }
    if (a.empty()) {
        return 0.0;
    }
    return (a.eigen() - b.eigen()).cwiseAbs().maxCoeff();
}

} // namespace stylemix::core
