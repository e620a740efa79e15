#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "stylemix/error.hpp"

namespace stylemix::core {

inline double dot(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) {
        throw DomainError("dot: length mismatch");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        s += u[i] * v[i];
    }
    return s;
}

inline double l2_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) {
        s += x * x;
    }
    return std::sqrt(s);
}

namespace detail {

inline double checked_squared_norm(std::span<const double> v, const char* op) {
    double s = 0.0;
    for (double x : v) {
        if (!std::isfinite(x)) {
            throw DomainError(std::string(op) + ": non-finite entry");
        }
        s += x * x;
    }
    if (!(s > 0.0)) {
        throw DomainError(std::string(op) + ": zero-norm vector");
    }
    return s;
}

} // namespace detail

inline std::vector<double> l2_normalize(std::span<const double> v) {
    const double n = std::sqrt(detail::checked_squared_norm(v, "l2_normalize"));
    std::vector<double> out(v.begin(), v.end());
    for (double& x : out) {
        x /= n;
    }
    return out;
}

/// Cosine of the angle between u and v, in [-1, 1].
inline double cosine_similarity(std::span<const double> u, std::span<const double> v) {
    // All three sums share one loop body, so (u, u) and (u, -u) come out
    // exact even when the compiler contracts into FMAs.
    if (u.size() != v.size()) {
        throw DomainError("cosine_similarity: length mismatch");
    }
    double uv = 0.0;
    double uu = 0.0;
    double vv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (!std::isfinite(u[i]) || !std::isfinite(v[i])) {
            throw DomainError("cosine_similarity: non-finite entry");
        }
        uv += u[i] * v[i];
        uu += u[i] * u[i];
        vv += v[i] * v[i];
    }
    if (!(uu > 0.0) || !(vv > 0.0)) {
        throw DomainError("cosine_similarity: zero-norm vector");
    }
    return std::clamp(uv / std::sqrt(uu * vv), -1.0, 1.0);
}

/// 1 - angle(u, v) / pi, in [0, 1].
inline double angular_similarity(std::span<const double> u, std::span<const double> v) {
    const double c = cosine_similarity(u, v);
    return 1.0 - std::acos(c) / std::numbers::pi;
}

} // namespace stylemix::core
