#pragma once

#include <cmath>
#include <cstdint>
#include <iostream>
#include <span>
#include <string>
#include <vector>

#include "stylemix/core/parallel.hpp"
#include "stylemix/core/rng.hpp"
#include "stylemix/corpus/dataset.hpp"
#include "stylemix/error.hpp"
#include "stylemix/lm/inference.hpp"
#include "stylemix/lm/model.hpp"
#include "stylemix/lm/tokenizer.hpp"
#include "stylemix/metrics/scores.hpp"
#include "stylemix/metrics/style_embedding.hpp"
#include "stylemix/mixing/mixing.hpp"

namespace stylemix::optim {

/// A source training text with its precomputed style embedding.
struct SourceText {
    std::string id;
    std::string text;
    metrics::StyleEmbedding embedding;
};

/// Everything the reward and the optimizers read. Holds only training-side
/// texts: the target's texts and the source authors' train splits.
struct RewardContext {
    const lm::BaseModel* base = nullptr;
    const lm::Tokenizer* tok = &lm::Tokenizer::standard();
    std::vector<lm::AuthorAdapter> adapters;
    mixing::ExpandedLibrary expanded;
    std::vector<std::string> target_texts;
    metrics::StyleEmbedding e_t;
    std::vector<SourceText> sources;
    std::size_t skipped_degenerate = 0;
    lm::GenerationConfig gen{.temperature = 1.0, .top_p = 0.95, .max_len = 80, .greedy = false};
    unsigned threads = 1;

    static RewardContext make(const lm::BaseModel& base, std::vector<lm::AuthorAdapter> adapters,
                              std::vector<std::string> target_texts, std::span<const corpus::TextItem> source_train) {
        if (adapters.empty()) {
            throw ConfigError("RewardContext: no adapters selected");
        }
        if (target_texts.empty() || source_train.empty()) {
            throw ConfigError("RewardContext: target and source texts are required");
        }
        for (const auto& a : adapters) {
            a.check_base(base);
        }
        RewardContext ctx;
        ctx.base = &base;
        ctx.expanded = mixing::ExpandedLibrary::from(adapters);
        ctx.adapters = std::move(adapters);
        ctx.target_texts = std::move(target_texts);
        ctx.e_t = metrics::prototype_embed(ctx.target_texts);
        for (const auto& item : source_train) {
            auto e_s = metrics::style_embed(item.text);
            if (1.0 - core::angular_similarity(e_s, ctx.e_t) <= metrics::kDegenerateTol) {
                std::cerr << "warning: skipping " << item.id << ": its style equals the target prototype\n";
                ++ctx.skipped_degenerate;
                continue;
            }
            ctx.sources.push_back({item.id, item.text, std::move(e_s)});
        }
        if (ctx.sources.empty()) {
            throw ConfigError("RewardContext: every source text is degenerate with the target");
        }
        return ctx;
    }

    std::vector<std::string> adapter_ids() const { return expanded.ids; }
    std::size_t n_adapters() const { return adapters.size(); }
    std::size_t n_layers() const { return static_cast<std::size_t>(base->config.n_layers); }

    lm::ModelParams merged(const mixing::MixWeights& W) const {
        return mixing::merged_params(*base, expanded.mix(W));
    }
};

/// Joint score of a rewrite given the source embedding.
inline double reward_with_embedding(const RewardContext& ctx, std::span<const double> e_s, std::string_view x_s,
                                    std::string_view x_out) {
    const double meaning = metrics::meaning_score(x_s, x_out);
    double toward = 0.0;
    if (!metrics::words_of(x_out).empty()) {
        toward = metrics::toward(e_s, ctx.e_t, metrics::style_embed(x_out));
    }
    return metrics::joint(toward, meaning);
}

/// S(x_s, x_out) = sqrt(toward * meaning).
inline double reward(const RewardContext& ctx, std::string_view x_s, std::string_view x_out) {
    if (x_s.empty()) {
        throw DomainError("reward: empty source text");
    }
    const auto e_s = metrics::style_embed(x_s);
    return reward_with_embedding(ctx, e_s, x_s, x_out);
}

struct ObjectiveValue {
    double objective = 0.0;
    double mean_reward = 0.0;
    std::size_t generated_tokens = 0;
};

/// Mean reward of one sampled rewrite per batch text minus lambda * |W|_1.
/// Sample b uses the stream rng.derive("rewrite", b), so every candidate
/// evaluated with the same rng sees the same random numbers.
inline ObjectiveValue objective_lh(const RewardContext& ctx, const mixing::MixWeights& W,
                                   std::span<const SourceText> batch, const core::SeededRng& rng, double lambda_l1) {
    W.validate();
    if (batch.empty()) {
        throw DomainError("objective_lh: empty batch");
    }
    const lm::ModelParams p = ctx.merged(W);
    std::vector<double> rewards(batch.size());
    std::vector<std::size_t> lengths(batch.size());
    core::parallel_for(batch.size(), ctx.threads, [&](std::size_t b, unsigned) {
        auto r = rng.derive("rewrite", b);
        const auto prompt = ctx.tok->paraphrase_prompt(batch[b].text);
        const auto out = lm::generate_tokens(ctx.base->config, p, prompt, ctx.gen, &r);
        lengths[b] = out.size() + 1;
        rewards[b] = reward_with_embedding(ctx, batch[b].embedding, batch[b].text, ctx.tok->decode(out));
    });
    ObjectiveValue v;
    for (std::size_t b = 0; b < batch.size(); ++b) {
        v.mean_reward += rewards[b];
        v.generated_tokens += lengths[b];
    }
    v.mean_reward /= static_cast<double>(batch.size());
    v.objective = v.mean_reward - lambda_l1 * W.l1_norm();
    return v;
}

} // namespace stylemix::optim
