#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "stylemix/core/matrix.hpp"
#include "stylemix/error.hpp"
#include "stylemix/lm/model.hpp"

namespace stylemix::lm {

using core::EigenMatrix;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

inline constexpr double kLayerNormEps = 1e-5;

namespace detail {

struct NormCache {
    EigenMatrix xhat;
    Eigen::VectorXd rstd;
};

inline EigenMatrix layer_norm(const EigenMatrix& x, const DenseMatrix& g, const DenseMatrix& b, NormCache& cache) {
    const Eigen::Index n = x.rows();
    const Eigen::Index d = x.cols();
    cache.xhat.resize(n, d);
    cache.rstd.resize(n);
    EigenMatrix y(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double mean = x.row(i).mean();
        const double var = (x.row(i).array() - mean).square().mean();
        const double rstd = 1.0 / std::sqrt(var + kLayerNormEps);
        cache.rstd(i) = rstd;
        cache.xhat.row(i) = (x.row(i).array() - mean) * rstd;
        y.row(i) = cache.xhat.row(i).cwiseProduct(g.eigen().row(0)) + b.eigen().row(0);
    }
    return y;
}

inline RowVector layer_norm_row(const RowVector& x, const DenseMatrix& g, const DenseMatrix& b) {
    const double mean = x.mean();
    const double var = (x.array() - mean).square().mean();
    const double rstd = 1.0 / std::sqrt(var + kLayerNormEps);
    RowVector xhat = (x.array() - mean) * rstd;
    return xhat.cwiseProduct(g.eigen().row(0)) + b.eigen().row(0);
}

// Returns dx; accumulates dg, db when given.
inline EigenMatrix layer_norm_backward(const EigenMatrix& dy, const DenseMatrix& g, const NormCache& cache,
                                       DenseMatrix* dg, DenseMatrix* db) {
    const Eigen::Index n = dy.rows();
    const Eigen::Index d = dy.cols();
    if (dg != nullptr) {
        dg->eigen().row(0) += dy.cwiseProduct(cache.xhat).colwise().sum();
        db->eigen().row(0) += dy.colwise().sum();
    }
    EigenMatrix dx(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const RowVector dxhat = dy.row(i).cwiseProduct(g.eigen().row(0));
        const double m1 = dxhat.mean();
        const double m2 = dxhat.cwiseProduct(cache.xhat.row(i)).mean();
        dx.row(i) = cache.rstd(i) * (dxhat.array() - m1 - cache.xhat.row(i).array() * m2);
    }
    return dx;
}

inline constexpr double kGeluC = 0.7978845608028654; // sqrt(2/pi)

// tanh(c (u + 0.044715 u^3)) written through exp so Eigen vectorizes it.
template <typename Derived>
inline auto gelu_tanh(const Eigen::ArrayBase<Derived>& u) {
    const auto z = kGeluC * (u + 0.044715 * u.cube());
    return 1.0 - 2.0 / ((2.0 * z).exp() + 1.0);
}

inline double gelu(double x) {
    return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + 0.044715 * x * x * x)));
}

inline void check_tokens(const ModelConfig& cfg, std::span<const int> tokens) {
    if (tokens.empty()) {
        throw DomainError("forward: empty token sequence");
    }
    if (tokens.size() > static_cast<std::size_t>(cfg.context_len)) {
        throw DomainError("forward: sequence longer than the context");
    }
    for (int t : tokens) {
        if (t < 0 || t >= cfg.vocab_size) {
            throw VocabError("forward: token id outside vocabulary");
        }
    }
}

} // namespace detail

struct LayerCache {
    EigenMatrix x_in;
    detail::NormCache ln1;
    EigenMatrix h1, q, k, v;
    std::vector<EigenMatrix> probs; // per head, causal attention weights
    EigenMatrix att;                // concatenated heads before W_o
    EigenMatrix x_mid;
    detail::NormCache ln2;
    EigenMatrix h2, up, act;
    EigenMatrix tanh_up; // tanh term of the GELU, reused by backward
};

/// Activations of one full-sequence forward pass, kept for backward().
struct ForwardCache {
    std::vector<int> tokens;
    std::vector<LayerCache> layers;
    EigenMatrix x_out;
    detail::NormCache lnf;
    EigenMatrix hf;
    EigenMatrix logits; // T x vocab
    bool dynamic_adapters = false;
};

/// Full-sequence causal forward pass. Adapters are applied dynamically:
/// q += s * (alpha/r) * (h A^T) B^T, likewise for v.
inline void forward(const ModelConfig& cfg, const ModelParams& p, std::span<const int> tokens, ForwardCache& cache,
                    std::span<const ScaledAdapter> adapters = {}) {
    detail::check_tokens(cfg, tokens);
    for (const auto& sa : adapters) {
        sa.adapter->validate(cfg);
        if (sa.scales.size() != static_cast<std::size_t>(cfg.n_layers)) {
            throw ConfigError("forward: adapter scale count does not match the layer count");
        }
    }
    const auto T = static_cast<Eigen::Index>(tokens.size());
    const int d = cfg.d_model;
    const int hd = cfg.head_dim();
    const double att_scale = 1.0 / std::sqrt(static_cast<double>(hd));

    cache.tokens.assign(tokens.begin(), tokens.end());
    cache.dynamic_adapters = !adapters.empty();
    cache.layers.resize(static_cast<std::size_t>(cfg.n_layers));

    EigenMatrix x(T, d);
    for (Eigen::Index t = 0; t < T; ++t) {
        x.row(t) = p.tok_emb.eigen().row(tokens[static_cast<std::size_t>(t)]) + p.pos_emb.eigen().row(t);
    }

    for (int l = 0; l < cfg.n_layers; ++l) {
        const LayerParams& lp = p.layers[static_cast<std::size_t>(l)];
        LayerCache& c = cache.layers[static_cast<std::size_t>(l)];
        c.x_in = x;
        c.h1 = detail::layer_norm(x, lp.ln1_g, lp.ln1_b, c.ln1);
        c.q.noalias() = c.h1 * lp.wq.eigen().transpose();
        c.k.noalias() = c.h1 * lp.wk.eigen().transpose();
        c.v.noalias() = c.h1 * lp.wv.eigen().transpose();
        for (const auto& sa : adapters) {
            const double s = sa.scales[static_cast<std::size_t>(l)];
            if (s == 0.0) {
                continue;
            }
            const LayerAdapter& la = sa.adapter->layers[static_cast<std::size_t>(l)];
            const EigenMatrix hq = c.h1 * la.q.a.eigen().transpose();
            c.q.noalias() += (s * la.q.scaling()) * (hq * la.q.b.eigen().transpose());
            const EigenMatrix hv = c.h1 * la.v.a.eigen().transpose();
            c.v.noalias() += (s * la.v.scaling()) * (hv * la.v.b.eigen().transpose());
        }

        c.att.setZero(T, d);
        c.probs.resize(static_cast<std::size_t>(cfg.n_heads));
        for (int h = 0; h < cfg.n_heads; ++h) {
            const auto qh = c.q.middleCols(h * hd, hd);
            const auto kh = c.k.middleCols(h * hd, hd);
            const auto vh = c.v.middleCols(h * hd, hd);
            EigenMatrix& P = c.probs[static_cast<std::size_t>(h)];
            P.noalias() = (qh * kh.transpose()) * att_scale;
            for (Eigen::Index i = 0; i < T; ++i) {
                auto live = P.row(i).head(i + 1).array();
                live = (live - live.maxCoeff()).exp();
                live /= live.sum();
                P.row(i).tail(T - i - 1).setZero();
            }
            c.att.middleCols(h * hd, hd).noalias() = P * vh;
        }
        c.x_mid = x;
        c.x_mid.noalias() += c.att * lp.wo.eigen().transpose();

        c.h2 = detail::layer_norm(c.x_mid, lp.ln2_g, lp.ln2_b, c.ln2);
        c.up.noalias() = c.h2 * lp.w_up.eigen().transpose();
        c.up.rowwise() += lp.b_up.eigen().row(0);
        c.tanh_up = detail::gelu_tanh(c.up.array()).matrix();
        c.act = (0.5 * c.up.array() * (1.0 + c.tanh_up.array())).matrix();
        x = c.x_mid;
        x.noalias() += c.act * lp.w_down.eigen().transpose();
        x.rowwise() += lp.b_down.eigen().row(0);
    }
    cache.x_out = x;
    cache.hf = detail::layer_norm(x, p.lnf_g, p.lnf_b, cache.lnf);
    cache.logits.noalias() = cache.hf * p.w_head.eigen().transpose();
    cache.logits.rowwise() += p.b_head.eigen().row(0);
}

/// Gradients of the effective W_q and W_v of every layer.
struct QvGrads {
    std::vector<DenseMatrix> wq;
    std::vector<DenseMatrix> wv;

    static QvGrads zeros(const ModelConfig& cfg) {
        const auto d = static_cast<std::size_t>(cfg.d_model);
        QvGrads g;
        g.wq.assign(static_cast<std::size_t>(cfg.n_layers), DenseMatrix(d, d));
        g.wv.assign(static_cast<std::size_t>(cfg.n_layers), DenseMatrix(d, d));
        return g;
    }

    QvGrads& operator+=(const QvGrads& o) {
        for (std::size_t l = 0; l < wq.size(); ++l) {
            wq[l] += o.wq[l];
            wv[l] += o.wv[l];
        }
        return *this;
    }
};

namespace detail {

inline void backward_impl(const ModelConfig& cfg, const ModelParams& p, const ForwardCache& cache,
                          const EigenMatrix& dlogits, ModelParams* full, QvGrads* qv) {
    if (cache.dynamic_adapters) {
        throw DomainError("backward: forward pass used dynamic adapters; merge them into the parameters first");
    }
    if (dlogits.rows() != cache.logits.rows() || dlogits.cols() != cache.logits.cols()) {
        throw DomainError("backward: dlogits shape does not match the forward pass");
    }
    const Eigen::Index T = dlogits.rows();
    const int hd = cfg.head_dim();
    const double att_scale = 1.0 / std::sqrt(static_cast<double>(hd));

    if (full != nullptr) {
        full->w_head.eigen().noalias() += dlogits.transpose() * cache.hf;
        full->b_head.eigen().row(0) += dlogits.colwise().sum();
    }
    const EigenMatrix dhf = dlogits * p.w_head.eigen();
    EigenMatrix dx = layer_norm_backward(dhf, p.lnf_g, cache.lnf, full ? &full->lnf_g : nullptr,
                                         full ? &full->lnf_b : nullptr);

    for (int l = cfg.n_layers - 1; l >= 0; --l) {
        const auto li = static_cast<std::size_t>(l);
        const LayerParams& lp = p.layers[li];
        const LayerCache& c = cache.layers[li];
        LayerParams* g = full ? &full->layers[li] : nullptr;

        // MLP branch
        if (g != nullptr) {
            g->w_down.eigen().noalias() += dx.transpose() * c.act;
            g->b_down.eigen().row(0) += dx.colwise().sum();
        }
        EigenMatrix dup = dx * lp.w_down.eigen();
        {
            const auto u = c.up.array();
            const auto t = c.tanh_up.array();
            dup.array() *= 0.5 * (1.0 + t) + 0.5 * u * (1.0 - t.square()) * kGeluC * (1.0 + 3.0 * 0.044715 * u.square());
        }
        if (g != nullptr) {
            g->w_up.eigen().noalias() += dup.transpose() * c.h2;
            g->b_up.eigen().row(0) += dup.colwise().sum();
        }
        const EigenMatrix dh2 = dup * lp.w_up.eigen();
        EigenMatrix dx_mid = dx + layer_norm_backward(dh2, lp.ln2_g, c.ln2, g ? &g->ln2_g : nullptr,
                                                      g ? &g->ln2_b : nullptr);

        // attention branch
        if (g != nullptr) {
            g->wo.eigen().noalias() += dx_mid.transpose() * c.att;
        }
        const EigenMatrix datt = dx_mid * lp.wo.eigen();
        EigenMatrix dq(T, cfg.d_model), dk(T, cfg.d_model), dv(T, cfg.d_model);
        for (int h = 0; h < cfg.n_heads; ++h) {
            const EigenMatrix& P = c.probs[static_cast<std::size_t>(h)];
            const auto dO = datt.middleCols(h * hd, hd);
            const auto qh = c.q.middleCols(h * hd, hd);
            const auto kh = c.k.middleCols(h * hd, hd);
            const auto vh = c.v.middleCols(h * hd, hd);
            EigenMatrix dP = dO * vh.transpose();
            dv.middleCols(h * hd, hd).noalias() = P.transpose() * dO;
            for (Eigen::Index i = 0; i < T; ++i) {
                const double rd = P.row(i).dot(dP.row(i));
                dP.row(i) = P.row(i).cwiseProduct((dP.row(i).array() - rd).matrix());
            }
            dq.middleCols(h * hd, hd).noalias() = (dP * kh) * att_scale;
            dk.middleCols(h * hd, hd).noalias() = (dP.transpose() * qh) * att_scale;
        }
        if (g != nullptr) {
            g->wq.eigen().noalias() += dq.transpose() * c.h1;
            g->wk.eigen().noalias() += dk.transpose() * c.h1;
            g->wv.eigen().noalias() += dv.transpose() * c.h1;
        }
        if (qv != nullptr) {
            qv->wq[li].eigen().noalias() += dq.transpose() * c.h1;
            qv->wv[li].eigen().noalias() += dv.transpose() * c.h1;
            if (l == 0 && full == nullptr) {
                return;
            }
        }
        EigenMatrix dh1 = dq * lp.wq.eigen();
        dh1.noalias() += dk * lp.wk.eigen();
        dh1.noalias() += dv * lp.wv.eigen();
        dx = dx_mid + layer_norm_backward(dh1, lp.ln1_g, c.ln1, g ? &g->ln1_g : nullptr, g ? &g->ln1_b : nullptr);
    }

    if (full != nullptr) {
        for (Eigen::Index t = 0; t < T; ++t) {
            full->tok_emb.eigen().row(cache.tokens[static_cast<std::size_t>(t)]) += dx.row(t);
            full->pos_emb.eigen().row(t) += dx.row(t);
        }
    }
}

} // namespace detail

/// Reverse pass for a loss whose gradient w.r.t. the logits is `dlogits`.
/// Gradients are added to `grads`.
inline void backward(const ModelConfig& cfg, const ModelParams& p, const ForwardCache& cache,
                     const EigenMatrix& dlogits, ModelParams& grads) {
    detail::backward_impl(cfg, p, cache, dlogits, &grads, nullptr);
}

/// As backward(), restricted to the W_q and W_v gradients.
inline void backward_qv(const ModelConfig& cfg, const ModelParams& p, const ForwardCache& cache,
                        const EigenMatrix& dlogits, QvGrads& grads) {
    detail::backward_impl(cfg, p, cache, dlogits, nullptr, &grads);
}

/// Next-token negative log-likelihood of seq[first_target..] given the
/// logits of a forward pass over seq[0..n-1), scaled by `weight`.
/// When `dlogits` is given it receives the gradient of the scaled loss.
inline double next_token_nll(const EigenMatrix& logits, std::span<const int> seq, std::size_t first_target,
                             double weight, EigenMatrix* dlogits) {
    if (first_target < 1 || first_target >= seq.size() || static_cast<std::size_t>(logits.rows()) + 1 != seq.size()) {
        throw DomainError("next_token_nll: targets do not line up with the logits");
    }
    if (dlogits != nullptr) {
        dlogits->setZero(logits.rows(), logits.cols());
    }
    double loss = 0.0;
    for (std::size_t t = first_target; t < seq.size(); ++t) {
        const auto row = static_cast<Eigen::Index>(t - 1);
        const double m = logits.row(row).maxCoeff();
        const double lse = m + std::log((logits.row(row).array() - m).exp().sum());
        loss -= logits(row, seq[t]) - lse;
        if (dlogits != nullptr) {
            dlogits->row(row) = weight * (logits.row(row).array() - lse).exp();
            (*dlogits)(row, seq[t]) -= weight;
        }
    }
    return weight * loss;
}

/// Single-token decoding with cached keys and values. Parameters must
/// already contain any adapter deltas.
class IncrementalDecoder {
public:
    IncrementalDecoder(const ModelConfig& cfg, const ModelParams& p) : cfg_(cfg), p_(p) {
        const auto layers = static_cast<std::size_t>(cfg.n_layers);
        keys_.assign(layers, EigenMatrix(cfg.context_len, cfg.d_model));
        values_.assign(layers, EigenMatrix(cfg.context_len, cfg.d_model));
    }

    int position() const noexcept { return pos_; }
    bool full() const noexcept { return pos_ >= cfg_.context_len; }

    /// Consumes one token and returns the logits for the next one.
    const RowVector& push(int token) {
        if (token < 0 || token >= cfg_.vocab_size) {
            throw VocabError("decoder: token id outside vocabulary");
        }
        if (full()) {
            throw DomainError("decoder: context is full");
        }
        const int d = cfg_.d_model;
        const int hd = cfg_.head_dim();
        const double att_scale = 1.0 / std::sqrt(static_cast<double>(hd));
        RowVector x = p_.tok_emb.eigen().row(token) + p_.pos_emb.eigen().row(pos_);
        RowVector att(d);
        for (int l = 0; l < cfg_.n_layers; ++l) {
            const LayerParams& lp = p_.layers[static_cast<std::size_t>(l)];
            EigenMatrix& K = keys_[static_cast<std::size_t>(l)];
            EigenMatrix& V = values_[static_cast<std::size_t>(l)];
            const RowVector h1 = detail::layer_norm_row(x, lp.ln1_g, lp.ln1_b);
            const RowVector q = h1 * lp.wq.eigen().transpose();
            K.row(pos_).noalias() = h1 * lp.wk.eigen().transpose();
            V.row(pos_).noalias() = h1 * lp.wv.eigen().transpose();
            for (int h = 0; h < cfg_.n_heads; ++h) {
                const auto kh = K.block(0, h * hd, pos_ + 1, hd);
                const auto vh = V.block(0, h * hd, pos_ + 1, hd);
                Eigen::VectorXd s = (kh * q.segment(h * hd, hd).transpose()) * att_scale;
                const double m = s.maxCoeff();
                s = (s.array() - m).exp();
                s /= s.sum();
                att.segment(h * hd, hd).noalias() = s.transpose() * vh;
            }
            x.noalias() += att * lp.wo.eigen().transpose();
            const RowVector h2 = detail::layer_norm_row(x, lp.ln2_g, lp.ln2_b);
            RowVector up = h2 * lp.w_up.eigen().transpose() + lp.b_up.eigen().row(0);
            up = (0.5 * up.array() * (1.0 + detail::gelu_tanh(up.array()))).matrix();
            x.noalias() += up * lp.w_down.eigen().transpose();
            x += lp.b_down.eigen().row(0);
        }
        const RowVector hf = detail::layer_norm_row(x, p_.lnf_g, p_.lnf_b);
        logits_.noalias() = hf * p_.w_head.eigen().transpose();
        logits_ += p_.b_head.eigen().row(0);
        ++pos_;
        return logits_;
    }

private:
    const ModelConfig& cfg_;
    const ModelParams& p_;
    std::vector<EigenMatrix> keys_;
    std::vector<EigenMatrix> values_;
    RowVector logits_;
    int pos_ = 0;
};

} // namespace stylemix::lm
