#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "stylemix/core/matrix.hpp"
#include "stylemix/core/rng.hpp"
#include "stylemix/error.hpp"

namespace stylemix::lm {

using core::DenseMatrix;

struct ModelConfig {
    int vocab_size = 101;
    int d_model = 64;
    int n_layers = 8;
    int n_heads = 4;
    int d_ff = 128;
    int context_len = 128;

    int head_dim() const { return d_model / n_heads; }

    void validate() const {
        if (vocab_size < 2 || vocab_size > 128) {
            throw ConfigError("ModelConfig: vocab_size must be in [2, 128]");
        }
        if (d_model < 1 || n_heads < 1 || d_model % n_heads != 0) {
            throw ConfigError("ModelConfig: d_model must be a positive multiple of n_heads");
        }
        if (n_layers < 2) {
            throw ConfigError("ModelConfig: n_layers must be >= 2");
        }
        if (d_ff < 1 || context_len < 2) {
            throw ConfigError("ModelConfig: d_ff >= 1 and context_len >= 2 required");
        }
    }

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// One pre-norm transformer block. Linear weights are stored d_out x d_in.
struct LayerParams {
    DenseMatrix ln1_g, ln1_b;
    DenseMatrix wq, wk, wv, wo;
    DenseMatrix ln2_g, ln2_b;
    DenseMatrix w_up, b_up;
    DenseMatrix w_down, b_down;

    template <typename Self, typename F>
    static void visit(Self& self, const std::string& prefix, F&& f) {
        f(prefix + "ln1_g", self.ln1_g);
        f(prefix + "ln1_b", self.ln1_b);
        f(prefix + "wq", self.wq);
        f(prefix + "wk", self.wk);
        f(prefix + "wv", self.wv);
        f(prefix + "wo", self.wo);
        f(prefix + "ln2_g", self.ln2_g);
        f(prefix + "ln2_b", self.ln2_b);
        f(prefix + "w_up", self.w_up);
        f(prefix + "b_up", self.b_up);
        f(prefix + "w_down", self.w_down);
        f(prefix + "b_down", self.b_down);
    }
};

struct ModelParams {
    DenseMatrix tok_emb; // vocab x d
    DenseMatrix pos_emb; // context x d
    std::vector<LayerParams> layers;
    DenseMatrix lnf_g, lnf_b;
    DenseMatrix w_head; // vocab x d
    DenseMatrix b_head; // 1 x vocab

    /// All tensors shaped for `cfg`; layer-norm gains are one, everything else zero.
    static ModelParams zeros(const ModelConfig& cfg) {
        const auto v = static_cast<std::size_t>(cfg.vocab_size);
        const auto d = static_cast<std::size_t>(cfg.d_model);
        const auto f = static_cast<std::size_t>(cfg.d_ff);
        ModelParams p;
        p.tok_emb = DenseMatrix(v, d);
        p.pos_emb = DenseMatrix(static_cast<std::size_t>(cfg.context_len), d);
        for (int l = 0; l < cfg.n_layers; ++l) {
            LayerParams lp;
            lp.ln1_g = DenseMatrix(1, d, 1.0);
            lp.ln1_b = DenseMatrix(1, d);
            lp.wq = DenseMatrix(d, d);
            lp.wk = DenseMatrix(d, d);
            lp.wv = DenseMatrix(d, d);
            lp.wo = DenseMatrix(d, d);
            lp.ln2_g = DenseMatrix(1, d, 1.0);
            lp.ln2_b = DenseMatrix(1, d);
            lp.w_up = DenseMatrix(f, d);
            lp.b_up = DenseMatrix(1, f);
            lp.w_down = DenseMatrix(d, f);
            lp.b_down = DenseMatrix(1, d);
            p.layers.push_back(std::move(lp));
        }
        p.lnf_g = DenseMatrix(1, d, 1.0);
        p.lnf_b = DenseMatrix(1, d);
        p.w_head = DenseMatrix(v, d);
        p.b_head = DenseMatrix(1, v);
        return p;
    }

    /// Same shapes, every entry zero (gradient buffers).
    static ModelParams zeros_like(const ModelParams& other) {
        ModelParams p = other;
        visit(p, [](const std::string&, DenseMatrix& m) { m.set_zero(); });
        return p;
    }

    /// Calls f(name, tensor) for every tensor in a fixed order.
    template <typename Self, typename F>
    static void visit(Self& self, F&& f) {
        f(std::string("tok_emb"), self.tok_emb);
        f(std::string("pos_emb"), self.pos_emb);
        for (std::size_t l = 0; l < self.layers.size(); ++l) {
            LayerParams::visit(self.layers[l], "layers." + std::to_string(l) + ".", f);
        }
        f(std::string("lnf_g"), self.lnf_g);
        f(std::string("lnf_b"), self.lnf_b);
        f(std::string("w_head"), self.w_head);
        f(std::string("b_head"), self.b_head);
    }

    std::vector<DenseMatrix*> tensors() {
        std::vector<DenseMatrix*> out;
        visit(*this, [&](const std::string&, DenseMatrix& m) { out.push_back(&m); });
        return out;
    }
    std::vector<const DenseMatrix*> tensors() const {
        std::vector<const DenseMatrix*> out;
        visit(*this, [&](const std::string&, const DenseMatrix& m) { out.push_back(&m); });
        return out;
    }

    bool all_finite() const {
        bool ok = true;
        visit(*this, [&](const std::string&, const DenseMatrix& m) { ok = ok && m.all_finite(); });
        return ok;
    }

    friend bool operator==(const ModelParams& a, const ModelParams& b) {
        const auto ta = a.tensors();
        const auto tb = b.tensors();
        if (ta.size() != tb.size()) {
            return false;
        }
        for (std::size_t i = 0; i < ta.size(); ++i) {
            if (!(*ta[i] == *tb[i])) {
                return false;
            }
        }
        return true;
    }
};

namespace detail {

inline void hash_bytes(std::uint64_t& h, const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
}

inline void hash_u64(std::uint64_t& h, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) {
        b[i] = static_cast<unsigned char>(v >> (8 * i));
    }
    hash_bytes(h, b, 8);
}

inline void hash_doubles(std::uint64_t& h, std::span<const double> xs) {
    for (double x : xs) {
        hash_u64(h, std::bit_cast<std::uint64_t>(x));
    }
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

} // namespace detail

inline void init_normal(DenseMatrix& m, double stddev, core::SeededRng& rng) {
    for (double& x : m.data()) {
        x = stddev * rng.normal();
    }
}

struct BaseModel {
    ModelConfig config;
    ModelParams params;

    /// Linear weights and embeddings drawn from N(0, 0.02); biases zero, gains one.
    static BaseModel init(const ModelConfig& cfg, core::SeededRng& rng, double stddev = 0.02) {
        cfg.validate();
        BaseModel m{cfg, ModelParams::zeros(cfg)};
        ModelParams::visit(m.params, [&](const std::string& name, DenseMatrix& t) {
            const bool is_norm = name.find("ln") != std::string::npos;
            const bool is_bias = name.starts_with("b_") || name.find(".b_") != std::string::npos;
            if (!is_norm && !is_bias) {
                init_normal(t, stddev, rng);
            }
        });
        return m;
    }

    /// FNV-1a over the config and the little-endian bytes of every parameter.
    std::string hash() const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (int v : {config.vocab_size, config.d_model, config.n_layers, config.n_heads, config.d_ff,
                      config.context_len}) {
            detail::hash_u64(h, static_cast<std::uint64_t>(v));
        }
        ModelParams::visit(params, [&](const std::string&, const DenseMatrix& t) {
            detail::hash_u64(h, t.rows());
            detail::hash_u64(h, t.cols());
            detail::hash_doubles(h, t.data());
        });
        return detail::hex64(h);
    }
};

/// Low-rank update (alpha / rank) * B * A for one d_out x d_in weight.
struct LowRankDelta {
    DenseMatrix a; // rank x d_in
    DenseMatrix b; // d_out x rank
    int rank = 8;
    double alpha = 16.0;
    std::string target; // "wq" or "wv"

    double scaling() const { return alpha / static_cast<double>(rank); }

    DenseMatrix expanded() const {
        DenseMatrix d = core::matmul(b, a);
        d *= scaling();
        return d;
    }

    void validate(std::size_t d_out, std::size_t d_in) const {
        if (rank < 1 || a.rows() != static_cast<std::size_t>(rank) || b.cols() != static_cast<std::size_t>(rank) ||
            a.cols() != d_in || b.rows() != d_out) {
            throw ConfigError("LowRankDelta(" + target + "): shape does not match the target module");
        }
    }

    friend bool operator==(const LowRankDelta&, const LowRankDelta&) = default;
};

struct LayerAdapter {
    LowRankDelta q;
    LowRankDelta v;
    friend bool operator==(const LayerAdapter&, const LayerAdapter&) = default;
};

struct AuthorAdapter {
    std::string author_id;
    std::string base_hash;
    std::vector<LayerAdapter> layers;

    /// A ~ N(0, 0.02), B = 0, so the fresh adapter is an exact no-op.
    static AuthorAdapter init(const BaseModel& base, std::string author_id, core::SeededRng& rng, int rank = 8,
                              double alpha = 16.0) {
        const auto d = static_cast<std::size_t>(base.config.d_model);
        AuthorAdapter ad{std::move(author_id), base.hash(), {}};
        auto make = [&](const char* target) {
            LowRankDelta delta{DenseMatrix(static_cast<std::size_t>(rank), d), DenseMatrix(d, static_cast<std::size_t>(rank)),
                               rank, alpha, target};
            init_normal(delta.a, 0.02, rng);
            return delta;
        };
        for (int l = 0; l < base.config.n_layers; ++l) {
            LowRankDelta q = make("wq");
            LowRankDelta v = make("wv");
            ad.layers.push_back({std::move(q), std::move(v)});
        }
        return ad;
    }

    void validate(const ModelConfig& cfg) const {
        if (layers.size() != static_cast<std::size_t>(cfg.n_layers)) {
            throw ConfigError("AuthorAdapter " + author_id + ": layer count does not match the model");
        }
        const auto d = static_cast<std::size_t>(cfg.d_model);
        for (const auto& l : layers) {
            l.q.validate(d, d);
            l.v.validate(d, d);
        }
    }

    /// Rejects adapters trained against a different base.
    void check_base(const BaseModel& base) const {
        validate(base.config);
        if (base_hash != base.hash()) {
            throw CompatibilityError("adapter " + author_id + " was trained for base " + base_hash + ", not " +
                                     base.hash());
        }
    }

    friend bool operator==(const AuthorAdapter&, const AuthorAdapter&) = default;
};

/// An adapter applied with one scale per layer.
struct ScaledAdapter {
    const AuthorAdapter* adapter = nullptr;
    std::vector<double> scales;
};

} // namespace stylemix::lm
