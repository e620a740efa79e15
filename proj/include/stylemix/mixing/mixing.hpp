#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stylemix/core/matrix.hpp"
#include "stylemix/error.hpp"
#include "stylemix/lm/model.hpp"

namespace stylemix::mixing {

using core::DenseMatrix;

enum class Granularity { layer, adapter };

inline std::string_view to_string(Granularity g) {
    return g == Granularity::layer ? "layer" : "adapter";
}

inline Granularity granularity_from_string(std::string_view s) {
    if (s == "layer") {
        return Granularity::layer;
    }
    if (s == "adapter") {
        return Granularity::adapter;
    }
    throw ConfigError("unknown granularity: " + std::string(s));
}

/// n x L matrix of mixing scalars, one per (adapter, block).
struct MixWeights {
    Granularity granularity = Granularity::layer;
    std::vector<std::string> adapter_ids;
    DenseMatrix w;
    double lower = -1.5;
    double upper = 1.5;

    static MixWeights zeros(std::vector<std::string> ids, std::size_t layers, Granularity g = Granularity::layer) {
        MixWeights m;
        m.granularity = g;
        m.w = DenseMatrix(ids.size(), layers);
        m.adapter_ids = std::move(ids);
        return m;
    }

    /// Adapter-wise weights broadcast across layers.
    static MixWeights broadcast(std::vector<std::string> ids, std::span<const double> per_adapter, std::size_t layers) {
        if (per_adapter.size() != ids.size()) {
            throw LibraryError("MixWeights: one weight per adapter required");
        }
        MixWeights m = zeros(std::move(ids), layers, Granularity::adapter);
        for (std::size_t i = 0; i < per_adapter.size(); ++i) {
            for (std::size_t j = 0; j < layers; ++j) {
                m.w(i, j) = per_adapter[i];
            }
        }
        return m;
    }

    std::size_t n() const { return w.rows(); }
    std::size_t layers() const { return w.cols(); }

    double l1_norm() const {
        double s = 0.0;
        for (double x : w.data()) {
            s += std::abs(x);
        }
        return s;
    }

    void clip() {
        for (double& x : w.data()) {
            x = std::clamp(x, lower, upper);
        }
    }

    bool rows_constant() const {
        for (std::size_t i = 0; i < n(); ++i) {
            for (std::size_t j = 1; j < layers(); ++j) {
                if (w(i, j) != w(i, 0)) {
                    return false;
                }
            }
        }
        return true;
    }

    void validate() const {
        if (adapter_ids.size() != w.rows()) {
            throw LibraryError("MixWeights: id count does not match the weight rows");
        }
        if (!(lower <= upper)) {
            throw ConfigError("MixWeights: empty bounds");
        }
        for (double x : w.data()) {
            if (!(x >= lower && x <= upper)) {
                throw ConfigError("MixWeights: weight outside bounds");
            }
        }
        if (granularity == Granularity::adapter && !rows_constant()) {
            throw ConfigError("MixWeights: adapter-wise weights must be constant across layers");
        }
    }

    friend bool operator==(const MixWeights&, const MixWeights&) = default;
};

/// Per-layer effective deltas for W_q and W_v.
struct MixedAdapter {
    std::vector<DenseMatrix> dq;
    std::vector<DenseMatrix> dv;

    friend bool operator==(const MixedAdapter&, const MixedAdapter&) = default;
};

/// Expanded (alpha/r) B A deltas of a set of adapters, computed once.
struct ExpandedLibrary {
    std::vector<std::string> ids;
    std::vector<MixedAdapter> deltas; // one per adapter, same order as ids

    static ExpandedLibrary from(std::span<const lm::AuthorAdapter> adapters) {
        if (adapters.empty()) {
            throw LibraryError("mixing needs at least one adapter");
        }
        ExpandedLibrary lib;
        const std::size_t L = adapters.front().layers.size();
        std::set<std::string> seen;
        for (const auto& a : adapters) {
            if (!seen.insert(a.author_id).second) {
                throw LibraryError("duplicate adapter id " + a.author_id);
            }
            if (a.layers.size() != L) {
                throw LibraryError("adapter " + a.author_id + " has a different layer count");
            }
            MixedAdapter m;
            for (std::size_t l = 0; l < L; ++l) {
                const auto& ref = adapters.front().layers[l];
                const auto& la = a.layers[l];
                if (!la.q.a.same_shape(ref.q.a) || !la.q.b.same_shape(ref.q.b) || !la.v.a.same_shape(ref.v.a) ||
                    !la.v.b.same_shape(ref.v.b) || la.q.target != ref.q.target || la.v.target != ref.v.target) {
                    throw LibraryError("adapter " + a.author_id + " differs in module structure");
                }
                m.dq.push_back(la.q.expanded());
                m.dv.push_back(la.v.expanded());
            }
            lib.ids.push_back(a.author_id);
            lib.deltas.push_back(std::move(m));
        }
        return lib;
    }

    std::size_t layers() const { return deltas.front().dq.size(); }

    /// theta_j = sum_i W(i,j) theta_j^(i), summed in ascending author-id order
    /// starting from the first nonzero term, so one-hot weights reproduce an
    /// adapter exactly and row permutations do not change the result.
    MixedAdapter mix(const MixWeights& W) const {
        if (W.n() != ids.size() || W.layers() != layers()) {
            throw LibraryError("MixWeights shape does not match the adapter library");
        }
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (W.adapter_ids[i] != ids[i]) {
                throw LibraryError("MixWeights row " + std::to_string(i) + " names " + W.adapter_ids[i] +
                                   ", expected " + ids[i]);
            }
        }
        std::vector<std::size_t> order(ids.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });

        MixedAdapter out;
        const DenseMatrix& shape = deltas.front().dq.front();
        for (std::size_t j = 0; j < layers(); ++j) {
            DenseMatrix q(shape.rows(), shape.cols());
            DenseMatrix v(shape.rows(), shape.cols());
            bool started = false;
            for (std::size_t i : order) {
                const double s = W.w(i, j);
                if (s == 0.0) {
                    continue;
                }
                if (!started) {
                    q = deltas[i].dq[j];
                    q *= s;
                    v = deltas[i].dv[j];
                    v *= s;
                    started = true;
                } else {
                    q.add_scaled(deltas[i].dq[j], s);
                    v.add_scaled(deltas[i].dv[j], s);
                }
            }
            out.dq.push_back(std::move(q));
            out.dv.push_back(std::move(v));
        }
        return out;
    }
};

inline MixedAdapter mix_layerwise(std::span<const lm::AuthorAdapter> adapters, const MixWeights& W) {
    return ExpandedLibrary::from(adapters).mix(W);
}

inline MixedAdapter mix_adapterwise(std::span<const lm::AuthorAdapter> adapters, std::span<const double> w) {
    if (adapters.empty()) {
        throw LibraryError("mixing needs at least one adapter");
    }
    std::vector<std::string> ids;
    for (const auto& a : adapters) {
        ids.push_back(a.author_id);
    }
    return mix_layerwise(adapters, MixWeights::broadcast(std::move(ids), w, adapters.front().layers.size()));
}

/// W_eff = W_base + delta for W_q and W_v of every layer. Layers with an
/// all-zero delta are left untouched.
inline lm::ModelParams merged_params(const lm::BaseModel& model, const MixedAdapter& mixed) {
    if (mixed.dq.size() != model.params.layers.size() || mixed.dv.size() != mixed.dq.size()) {
        throw LibraryError("mixed adapter layer count does not match the model");
    }
    lm::ModelParams p = model.params;
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        if (!mixed.dq[l].same_shape(p.layers[l].wq) || !mixed.dv[l].same_shape(p.layers[l].wv)) {
            throw LibraryError("mixed adapter shape does not match the model");
        }
        if (!mixed.dq[l].eigen().isZero(0.0)) {
            p.layers[l].wq += mixed.dq[l];
        }
        if (!mixed.dv[l].eigen().isZero(0.0)) {
            p.layers[l].wv += mixed.dv[l];
        }
    }
    return p;
}

inline lm::BaseModel merge_into_base(const lm::BaseModel& model, const MixedAdapter& mixed) {
    return {model.config, merged_params(model, mixed)};
}

/// Scaled-adapter view of W for dynamic application in forward passes.
inline std::vector<lm::ScaledAdapter> scaled_adapters(std::span<const lm::AuthorAdapter> adapters, const MixWeights& W) {
    if (W.n() != adapters.size()) {
        throw LibraryError("MixWeights shape does not match the adapter list");
    }
    std::vector<lm::ScaledAdapter> out;
    for (std::size_t i = 0; i < adapters.size(); ++i) {
        lm::ScaledAdapter sa{&adapters[i], {}};
        for (std::size_t j = 0; j < W.layers(); ++j) {
            sa.scales.push_back(W.w(i, j));
        }
        out.push_back(std::move(sa));
    }
    return out;
}

} // namespace stylemix::mixing
