#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "stylemix/core/rng.hpp"
#include "stylemix/error.hpp"

namespace stylemix::core {

/// softmax(logits / temperature); -inf entries get probability 0.
inline std::vector<double> softmax(std::span<const double> logits, double temperature = 1.0) {
    if (!(temperature > 0.0)) {
        throw DomainError("softmax: temperature must be positive");
    }
    double peak = -std::numeric_limits<double>::infinity();
    for (double l : logits) {
        if (std::isnan(l)) {
            throw SamplingError("softmax: NaN logit");
        }
        peak = std::max(peak, l);
    }
    if (!std::isfinite(peak)) {
        throw SamplingError("softmax: no finite logit");
    }
    std::vector<double> p(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp((logits[i] - peak) / temperature);
        total += p[i];
    }
    for (double& x : p) {
        x /= total;
    }
    return p;
}

/// Probability each token receives under nucleus sampling.
///
/// The nucleus is the shortest prefix of tokens sorted by descending
/// probability (ties by ascending index) whose cumulative mass reaches p.
/// Tokens outside it get exactly 0; inside, mass is renormalized.
inline std::vector<double> top_p_distribution(std::span<const double> logits, double temperature, double p) {
    if (!(p > 0.0 && p <= 1.0)) {
        throw DomainError("top_p: p must lie in (0, 1]");
    }
    const std::vector<double> probs = softmax(logits, temperature);
    std::vector<std::size_t> order(probs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });

    std::vector<double> out(probs.size(), 0.0);
    double mass = 0.0;
    std::size_t kept = 0;
    for (std::size_t idx : order) {
        if (probs[idx] <= 0.0) {
            break;
        }
        mass += probs[idx];
        ++kept;
        if (mass >= p) {
            break;
        }
    }
    for (std::size_t r = 0; r < kept; ++r) {
        out[order[r]] = probs[order[r]] / mass;
    }
    return out;
}

/// Draws a token index from the temperature-scaled nucleus of `logits`.
inline std::size_t top_p_sample(std::span<const double> logits, double temperature, double p, SeededRng& rng) {
    const std::vector<double> dist = top_p_distribution(logits, temperature, p);
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t last_nonzero = 0;
    for (std::size_t i = 0; i < dist.size(); ++i) {
        if (dist[i] <= 0.0) {
            continue;
        }
        acc += dist[i];
        last_nonzero = i;
        if (u < acc) {
            return i;
        }
    }
    // Rounding left acc a hair below 1.
    return last_nonzero;
}

/// Index of the largest logit; ties go to the smallest index.
inline std::size_t argmax(std::span<const double> logits) {
    if (logits.empty()) {
        throw SamplingError("argmax: empty logits");
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < logits.size(); ++i) {
        if (logits[i] > logits[best]) {
            best = i;
        }
    }
    return best;
}

} // namespace stylemix::core
