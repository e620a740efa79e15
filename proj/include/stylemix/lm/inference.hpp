#pragma once

#include <span>
#include <string>
#include <vector>

#include "stylemix/core/rng.hpp"
#include "stylemix/core/sampling.hpp"
#include "stylemix/lm/model.hpp"
#include "stylemix/lm/tokenizer.hpp"
#include "stylemix/lm/transformer.hpp"

namespace stylemix::lm {

/// Base parameters with every scaled adapter delta added to W_q and W_v.
inline ModelParams effective_params(const BaseModel& model, std::span<const ScaledAdapter> adapters) {
    ModelParams p = model.params;
    for (const auto& sa : adapters) {
        sa.adapter->validate(model.config);
        if (sa.scales.size() != static_cast<std::size_t>(model.config.n_layers)) {
            throw ConfigError("adapter scale count does not match the layer count");
        }
        for (std::size_t l = 0; l < p.layers.size(); ++l) {
            const double s = sa.scales[l];
            if (s == 0.0) {
                continue;
            }
            p.layers[l].wq.add_scaled(sa.adapter->layers[l].q.expanded(), s);
            p.layers[l].wv.add_scaled(sa.adapter->layers[l].v.expanded(), s);
        }
    }
    return p;
}

/// Logit rows (one per input position) with adapters applied on the fly.
inline DenseMatrix forward_logits(const BaseModel& model, std::span<const ScaledAdapter> adapters,
                                  std::span<const int> tokens) {
    ForwardCache cache;
    forward(model.config, model.params, tokens, cache, adapters);
    return DenseMatrix(std::move(cache.logits));
}

namespace detail {

inline std::vector<int> concat(std::span<const int> a, std::span<const int> b) {
    std::vector<int> out(a.begin(), a.end());
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

inline void check_pair(const ModelConfig& cfg, std::span<const int> prompt, std::span<const int> completion) {
    if (completion.empty()) {
        throw DomainError("empty completion");
    }
    if (prompt.empty()) {
        throw DomainError("empty prompt");
    }
    if (prompt.size() + completion.size() > static_cast<std::size_t>(cfg.context_len)) {
        throw DomainError("prompt plus completion exceeds the context");
    }
}

} // namespace detail

/// Sum over completion tokens of log p(token | prompt, earlier completion).
inline double sequence_log_prob_params(const ModelConfig& cfg, const ModelParams& params, std::span<const int> prompt,
                                       std::span<const int> completion) {
    detail::check_pair(cfg, prompt, completion);
    const auto seq = detail::concat(prompt, completion);
    ForwardCache cache;
    forward(cfg, params, std::span<const int>(seq).first(seq.size() - 1), cache);
    return -next_token_nll(cache.logits, seq, prompt.size(), 1.0, nullptr);
}

inline double sequence_log_prob(const BaseModel& model, std::span<const ScaledAdapter> adapters,
                                 std::span<const int> prompt, std::span<const int> completion) {
    detail::check_pair(model.config, prompt, completion);
    const auto seq = detail::concat(prompt, completion);
    ForwardCache cache;
    forward(model.config, model.params, std::span<const int>(seq).first(seq.size() - 1), cache, adapters);
    return -next_token_nll(cache.logits, seq, prompt.size(), 1.0, nullptr);
}

/// Gradient of -log p(completion | prompt) w.r.t. every effective parameter.
inline ModelParams param_gradients(const BaseModel& model, std::span<const ScaledAdapter> adapters,
                                   std::span<const int> prompt, std::span<const int> completion) {
    detail::check_pair(model.config, prompt, completion);
    const ModelParams p = effective_params(model, adapters);
    const auto seq = detail::concat(prompt, completion);
    ForwardCache cache;
    forward(model.config, p, std::span<const int>(seq).first(seq.size() - 1), cache);
    EigenMatrix dlogits;
    next_token_nll(cache.logits, seq, prompt.size(), 1.0, &dlogits);
    ModelParams grads = ModelParams::zeros_like(p);
    backward(model.config, p, cache, dlogits, grads);
    return grads;
}

struct GenerationConfig {
    double temperature = 1.0;
    double top_p = 0.95;
    int max_len = 64;
    bool greedy = false;
};

/// Autoregressive decoding from already-merged parameters. The returned
/// completion excludes the end-of-text token; `ended` reports whether one
/// was produced. Prompt, completion and end token always fit the context.
inline std::vector<int> generate_tokens(const ModelConfig& cfg, const ModelParams& params, std::span<const int> prompt,
                                        const GenerationConfig& gen, core::SeededRng* rng, bool* ended = nullptr) {
    if (ended != nullptr) {
        *ended = false;
    }
    if (prompt.empty()) {
        throw DomainError("generate: empty prompt");
    }
    if (prompt.size() >= static_cast<std::size_t>(cfg.context_len)) {
        throw DomainError("generate: prompt leaves no room in the context");
    }
    if (!gen.greedy && rng == nullptr) {
        throw DomainError("generate: sampling requires an rng");
    }
    std::vector<int> out;
    if (gen.max_len <= 0) {
        return out;
    }
    IncrementalDecoder dec(cfg, params);
    const RowVector* logits = nullptr;
    for (int t : prompt) {
        logits = &dec.push(t);
    }
    for (;;) {
        const std::span<const double> row(logits->data(), static_cast<std::size_t>(logits->size()));
        const int next = static_cast<int>(gen.greedy ? core::argmax(row)
                                                     : core::top_p_sample(row, gen.temperature, gen.top_p, *rng));
        if (next == Tokenizer::kEot) {
            if (ended != nullptr) {
                *ended = true;
            }
            break;
        }
        out.push_back(next);
        if (static_cast<int>(out.size()) >= gen.max_len ||
            prompt.size() + out.size() + 1 >= static_cast<std::size_t>(cfg.context_len)) {
            break;
        }
        logits = &dec.push(next);
    }
    return out;
}

inline std::string generate(const BaseModel& model, std::span<const ScaledAdapter> adapters,
                            std::span<const int> prompt, const GenerationConfig& gen, core::SeededRng* rng,
                            const Tokenizer& tok = Tokenizer::standard()) {
    const ModelParams p = adapters.empty() ? ModelParams{} : effective_params(model, adapters);
    const auto ids = generate_tokens(model.config, adapters.empty() ? model.params : p, prompt, gen, rng);
    return tok.decode(ids);
}

} // namespace stylemix::lm
