#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "stylemix/core/matrix.hpp"
#include "stylemix/core/parallel.hpp"
#include "stylemix/core/rng.hpp"
#include "stylemix/error.hpp"
#include "stylemix/lm/inference.hpp"
#include "stylemix/lm/transformer.hpp"
#include "stylemix/mixing/mixing.hpp"
#include "stylemix/optim/es.hpp"
#include "stylemix/optim/reward.hpp"

namespace stylemix::optim {

struct GrpoConfig {
    double lr = 0.02;
    int steps = 300;
    int group_size = 8;
    double init = 0.0;
    double beta_kl = 0.0;
    double lower = -1.5;
    double upper = 1.5;
    double top_p = 0.95;
    double temperature = 1.0;
    double eps_std = 1e-8;
    std::uint64_t seed = 42;
    bool length_normalize = false; // divide each sample's log-prob by its length
    mixing::Granularity granularity = mixing::Granularity::layer;
    bool timings = false;

    void validate() const {
        if (group_size < 2) {
            throw ConfigError("GrpoConfig: group_size must be >= 2");
        }
        if (!(lr >= 0.0) || steps < 0) {
            throw ConfigError("GrpoConfig: lr >= 0 and steps >= 0 required");
        }
        if (beta_kl != 0.0) {
            throw ConfigError("GrpoConfig: only beta_kl = 0 is supported");
        }
        if (!(lower <= init && init <= upper)) {
            throw ConfigError("GrpoConfig: bounds must contain the initial point");
        }
    }
};

/// (r_i - mean) / (population std + eps).
inline std::vector<double> grpo_advantages(std::span<const double> rewards, double eps = 1e-8) {
    if (rewards.size() < 2) {
        throw DomainError("grpo_advantages: at least two rewards required");
    }
    const auto n = static_cast<double>(rewards.size());
    double mean = 0.0;
    for (double r : rewards) {
        mean += r;
    }
    mean /= n;
    double var = 0.0;
    for (double r : rewards) {
        var += (r - mean) * (r - mean);
    }
    const double sd = std::sqrt(var / n);
    std::vector<double> adv;
    for (double r : rewards) {
        adv.push_back((r - mean) / (sd + eps));
    }
    return adv;
}

/// One sampled completion: generated tokens plus the end token when produced.
struct Sample {
    std::vector<int> completion;
    std::string text;
};

/// Gradient w.r.t. W of (1/G) sum_i A_i log pi_W(o_i | prompt), divided by
/// |o_i| per sample when `length_normalize` is set. The effective-weight
/// gradients are contracted with each adapter's expanded deltas.
inline core::DenseMatrix grpo_weight_gradient(const RewardContext& ctx, const mixing::MixWeights& W,
                                              std::span<const int> prompt, std::span<const Sample> outputs,
                                              std::span<const double> advantages, bool length_normalize = false) {
    if (outputs.size() != advantages.size() || outputs.empty()) {
        throw DomainError("grpo_weight_gradient: one advantage per output required");
    }
    const auto& cfg = ctx.base->config;
    const lm::ModelParams p = ctx.merged(W);
    const auto G = static_cast<double>(outputs.size());
    std::vector<lm::QvGrads> per(outputs.size());
    core::parallel_for(outputs.size(), ctx.threads, [&](std::size_t i, unsigned) {
        per[i] = lm::QvGrads::zeros(cfg);
        if (advantages[i] == 0.0 || outputs[i].completion.empty()) {
            return;
        }
        const auto seq = lm::detail::concat(prompt, outputs[i].completion);
        lm::ForwardCache cache;
        lm::forward(cfg, p, std::span<const int>(seq).first(seq.size() - 1), cache);
        double weight = -advantages[i] / G;
        if (length_normalize) {
            weight /= static_cast<double>(outputs[i].completion.size());
        }
        lm::EigenMatrix dlogits;
        lm::next_token_nll(cache.logits, seq, prompt.size(), weight, &dlogits);
        lm::backward_qv(cfg, p, cache, dlogits, per[i]);
    });
    lm::QvGrads total = lm::QvGrads::zeros(cfg);
    for (const auto& g : per) {
        total += g;
    }
    core::DenseMatrix grad(W.n(), W.layers());
    for (std::size_t i = 0; i < W.n(); ++i) {
        for (std::size_t j = 0; j < W.layers(); ++j) {
            grad(i, j) = core::frobenius_dot(total.wq[j], ctx.expanded.deltas[i].dq[j]) +
                         core::frobenius_dot(total.wv[j], ctx.expanded.deltas[i].dv[j]);
        }
    }
    return grad;
}

/// The surrogate objective whose gradient grpo_weight_gradient returns.
inline double grpo_surrogate(const RewardContext& ctx, const mixing::MixWeights& W, std::span<const int> prompt,
                             std::span<const Sample> outputs, std::span<const double> advantages,
                             bool length_normalize = false) {
    const lm::ModelParams p = ctx.merged(W);
    double j = 0.0;
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        if (outputs[i].completion.empty()) {
            continue;
        }
        double lp = lm::sequence_log_prob_params(ctx.base->config, p, prompt, outputs[i].completion);
        if (length_normalize) {
            lp /= static_cast<double>(outputs[i].completion.size());
        }
        j += advantages[i] * lp;
    }
    return j / static_cast<double>(outputs.size());
}

/// Samples `G` completions of the paraphrase prompt for x_s from merged parameters.
inline std::vector<Sample> sample_group(const RewardContext& ctx, const lm::ModelParams& p,
                                        std::span<const int> prompt, int G, const core::SeededRng& rng) {
    std::vector<Sample> out(static_cast<std::size_t>(G));
    core::parallel_for(out.size(), ctx.threads, [&](std::size_t g, unsigned) {
        auto r = rng.derive("sample", g);
        bool ended = false;
        auto toks = lm::generate_tokens(ctx.base->config, p, prompt, ctx.gen, &r, &ended);
        out[g].text = ctx.tok->decode(toks);
        if (ended) {
            toks.push_back(lm::Tokenizer::kEot);
        }
        out[g].completion = std::move(toks);
    });
    return out;
}

/// Policy-gradient learning of W with group-relative advantages. One
/// source text per step, taken round-robin from the context's sources.
inline OptimizeResult grpo_optimize(const RewardContext& ctx, const GrpoConfig& cfg) {
    cfg.validate();
    RewardContext local = ctx;
    local.gen.temperature = cfg.temperature;
    local.gen.top_p = cfg.top_p;
    const core::SeededRng master(cfg.seed);
    mixing::MixWeights W = mixing::MixWeights::zeros(local.adapter_ids(), local.n_layers(), cfg.granularity);
    W.lower = cfg.lower;
    W.upper = cfg.upper;
    for (double& x : W.w.data()) {
        x = cfg.init;
    }
    OptimizeResult res{W, {}, 0};
    const auto start = std::chrono::steady_clock::now();

    for (int step = 0; step < cfg.steps; ++step) {
        const SourceText& src = local.sources[static_cast<std::size_t>(step) % local.sources.size()];
        const auto prompt = local.tok->paraphrase_prompt(src.text);
        const lm::ModelParams p = local.merged(W);
        const auto group = sample_group(local, p, prompt, cfg.group_size,
                                        master.derive("grpo/step", static_cast<std::uint64_t>(step)));
        std::vector<double> rewards;
        for (const auto& s : group) {
            rewards.push_back(reward_with_embedding(local, src.embedding, src.text, s.text));
            res.generated_tokens += s.completion.size();
        }
        const auto adv = grpo_advantages(rewards, cfg.eps_std);
        core::DenseMatrix grad = grpo_weight_gradient(local, W, prompt, group, adv, cfg.length_normalize);
        if (!grad.all_finite()) {
            throw TrainingError("GRPO gradient is not finite at step " + std::to_string(step) + " (source " +
                                src.id + ")");
        }
        if (cfg.granularity == mixing::Granularity::adapter) {
            for (std::size_t i = 0; i < grad.rows(); ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j < grad.cols(); ++j) {
                    s += grad(i, j);
                }
                for (std::size_t j = 0; j < grad.cols(); ++j) {
                    grad(i, j) = s;
                }
            }
        }
        W.w.add_scaled(grad, cfg.lr);
        W.clip();

        double mean = 0.0;
        for (double r : rewards) {
            mean += r;
        }
        TracePoint tp{step, mean / static_cast<double>(rewards.size()), W.l1_norm(),
                      std::numeric_limits<double>::quiet_NaN()};
        if (cfg.timings) {
            tp.wallclock_ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        }
        res.trace.push_back(tp);
    }
    res.weights = W;
    return res;
}

} // namespace stylemix::optim
