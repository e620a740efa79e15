#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "stylemix/core/rng.hpp"
#include "stylemix/error.hpp"
#include "stylemix/mixing/mixing.hpp"
#include "stylemix/optim/reward.hpp"

namespace stylemix::optim {

struct EsConfig {
    int steps = 250; // generations after the initial population
    double lower = -1.5;
    double upper = 1.5;
    double init = 0.0;
    double lambda_l1 = 0.05;
    int population = 20;
    double diff_weight = 0.5;
    double crossover = 0.9;
    double top_p = 0.95;
    double temperature = 1.0;
    std::uint64_t seed = 42;
    int batch_size = 8;                   // source texts per objective evaluation
    std::size_t max_generated_tokens = 0; // 0 = no token budget
    mixing::Granularity granularity = mixing::Granularity::layer;
    bool timings = false;

    void validate() const {
        if (steps < 0 || population < 4 || batch_size < 1) {
            throw ConfigError("EsConfig: steps >= 0, population >= 4 and batch_size >= 1 required");
        }
        if (!(lower <= init && init <= upper)) {
            throw ConfigError("EsConfig: bounds must contain the initial point");
        }
        if (!(diff_weight > 0.0) || !(crossover >= 0.0 && crossover <= 1.0)) {
            throw ConfigError("EsConfig: F > 0 and CR in [0, 1] required");
        }
    }
};

/// One row per optimizer step.
struct TracePoint {
    int step = 0;
    double value = 0.0; // best objective (ES) or mean group reward (GRPO)
    double l1_norm = 0.0;
    double wallclock_ms = std::numeric_limits<double>::quiet_NaN(); // NaN unless timings are on
};

struct DeResult {
    std::vector<double> best;
    double best_value = -std::numeric_limits<double>::infinity();
    std::vector<TracePoint> trace; // step 0 is the initial population
    int generations = 0;
};

/// Maximizes a batch-evaluated objective with DE/rand/1/bin inside box bounds.
/// Member 0 of the initial population is the all-`init` point. `evaluate`
/// receives every candidate of one generation at once; `stop` is checked
/// before each new generation.
inline DeResult differential_evolution(
    std::size_t dim, const EsConfig& cfg,
    const std::function<std::vector<double>(const std::vector<std::vector<double>>&, int)>& evaluate,
    const std::function<bool()>& stop = [] { return false; },
    const std::function<double(const std::vector<double>&)>& l1 = nullptr) {
    cfg.validate();
    if (dim == 0) {
        throw ConfigError("differential_evolution: zero-dimensional search space");
    }
    const auto np = static_cast<std::size_t>(cfg.population);
    core::SeededRng rng = core::SeededRng(cfg.seed).derive("es/population");
    const auto start = std::chrono::steady_clock::now();
    auto stamp = [&](int step, const DeResult& r) {
        TracePoint tp{step, r.best_value, 0.0, std::numeric_limits<double>::quiet_NaN()};
        if (l1) {
            tp.l1_norm = l1(r.best);
        } else {
            for (double x : r.best) {
                tp.l1_norm += std::abs(x);
            }
        }
        if (cfg.timings) {
            tp.wallclock_ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        }
        return tp;
    };

    std::vector<std::vector<double>> pop(np, std::vector<double>(dim, cfg.init));
    for (std::size_t i = 1; i < np; ++i) {
        for (double& x : pop[i]) {
            x = rng.uniform(cfg.lower, cfg.upper);
        }
    }
    std::vector<double> fit = evaluate(pop, 0);
    DeResult res;
    for (std::size_t i = 0; i < np; ++i) {
        if (fit[i] > res.best_value || res.best.empty()) {
            res.best_value = fit[i];
            res.best = pop[i];
        }
    }
    res.trace.push_back(stamp(0, res));

    for (int g = 1; g <= cfg.steps; ++g) {
        if (stop()) {
            break;
        }
        std::vector<std::vector<double>> trials(np, std::vector<double>(dim));
        for (std::size_t i = 0; i < np; ++i) {
            std::size_t r1 = 0, r2 = 0, r3 = 0;
            do {
                r1 = rng.uniform_index(np);
            } while (r1 == i);
            do {
                r2 = rng.uniform_index(np);
            } while (r2 == i || r2 == r1);
            do {
                r3 = rng.uniform_index(np);
            } while (r3 == i || r3 == r1 || r3 == r2);
            const std::size_t jrand = rng.uniform_index(dim);
            for (std::size_t j = 0; j < dim; ++j) {
                const bool take = rng.uniform() < cfg.crossover || j == jrand;
                const double mutant = pop[r1][j] + cfg.diff_weight * (pop[r2][j] - pop[r3][j]);
                trials[i][j] = take ? std::clamp(mutant, cfg.lower, cfg.upper) : pop[i][j];
            }
        }
        const std::vector<double> tfit = evaluate(trials, g);
        for (std::size_t i = 0; i < np; ++i) {
            if (tfit[i] >= fit[i]) {
                pop[i] = std::move(trials[i]);
                fit[i] = tfit[i];
                if (fit[i] > res.best_value) {
                    res.best_value = fit[i];
                    res.best = pop[i];
                }
            }
        }
        res.generations = g;
        res.trace.push_back(stamp(g, res));
    }
    return res;
}

struct OptimizeResult {
    mixing::MixWeights weights;
    std::vector<TracePoint> trace;
    std::size_t generated_tokens = 0;
};

namespace detail {

inline mixing::MixWeights weights_from_vector(const RewardContext& ctx, mixing::Granularity g,
                                              std::span<const double> x, double lower, double upper) {
    const std::size_t n = ctx.n_adapters();
    const std::size_t L = ctx.n_layers();
    mixing::MixWeights W = mixing::MixWeights::zeros(ctx.adapter_ids(), L, g);
    W.lower = lower;
    W.upper = upper;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < L; ++j) {
            W.w(i, j) = g == mixing::Granularity::layer ? x[i * L + j] : x[i];
        }
    }
    return W;
}

} // namespace detail

/// Gradient-free weight learning on the L1-penalized mean-reward objective.
/// Generation g scores every candidate on the same source batch with the same
/// sampling stream.
inline OptimizeResult es_optimize(const RewardContext& ctx, const EsConfig& cfg) {
    cfg.validate();
    const std::size_t n = ctx.n_adapters();
    const std::size_t L = ctx.n_layers();
    const std::size_t dim = cfg.granularity == mixing::Granularity::layer ? n * L : n;
    const core::SeededRng master(cfg.seed);
    RewardContext local = ctx;
    local.gen.temperature = cfg.temperature;
    local.gen.top_p = cfg.top_p;
    std::size_t tokens = 0;

    auto evaluate = [&](const std::vector<std::vector<double>>& cands, int g) {
        std::vector<SourceText> batch;
        for (int b = 0; b < cfg.batch_size; ++b) {
            const auto idx = (static_cast<std::size_t>(g) * static_cast<std::size_t>(cfg.batch_size) +
                              static_cast<std::size_t>(b)) %
                             local.sources.size();
            batch.push_back(local.sources[idx]);
        }
        const auto rng = master.derive("es/generation", static_cast<std::uint64_t>(g));
        std::vector<double> values;
        for (const auto& x : cands) {
            const auto W = detail::weights_from_vector(local, cfg.granularity, x, cfg.lower, cfg.upper);
            const auto v = objective_lh(local, W, batch, rng, cfg.lambda_l1);
            tokens += v.generated_tokens;
            values.push_back(v.objective);
        }
        return values;
    };
    auto stop = [&] { return cfg.max_generated_tokens > 0 && tokens >= cfg.max_generated_tokens; };
    auto l1 = [&](const std::vector<double>& x) {
        return detail::weights_from_vector(local, cfg.granularity, x, cfg.lower, cfg.upper).l1_norm();
    };
    DeResult de = differential_evolution(dim, cfg, evaluate, stop, l1);
    return {detail::weights_from_vector(local, cfg.granularity, de.best, cfg.lower, cfg.upper), std::move(de.trace),
            tokens};
}

} // namespace stylemix::optim
