#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <string_view>

#include "stylemix/core/similarity.hpp"
#include "stylemix/corpus/lexicon.hpp"
#include "stylemix/error.hpp"
#include "stylemix/lm/model.hpp"
#include "stylemix/lm/tokenizer.hpp"
#include "stylemix/lm/training.hpp"
#include "stylemix/metrics/style_embedding.hpp"

namespace stylemix::metrics {

inline constexpr double kDegenerateTol = 1e-12;

namespace detail {

inline double checked_gap(double sim_s_t) {
    const double gap = 1.0 - sim_s_t;
    if (!(gap > kDegenerateTol)) {
        throw DomainError("degenerate source/target pair: styles are identical");
    }
    return gap;
}

} // namespace detail

/// Movement toward the target as a fraction of the maximum possible movement.
inline double toward_from_sims(double sim_out_t, double sim_s_t) {
    const double gap = detail::checked_gap(sim_s_t);
    return std::clamp(std::max(sim_out_t - sim_s_t, 0.0) / gap, 0.0, 1.0);
}

/// Movement away from the source as a fraction of the source-target distance.
inline double away_from_sims(double sim_out_s, double sim_s_t) {
    const double gap = detail::checked_gap(sim_s_t);
    return std::clamp((1.0 - sim_out_s) / gap, 0.0, 1.0);
}

// Embedding versions use angular similarity.
inline double toward(std::span<const double> e_s, std::span<const double> e_t, std::span<const double> e_out) {
    return toward_from_sims(core::angular_similarity(e_out, e_t), core::angular_similarity(e_s, e_t));
}

inline double away(std::span<const double> e_s, std::span<const double> e_t, std::span<const double> e_out) {
    return away_from_sims(core::angular_similarity(e_out, e_s), core::angular_similarity(e_s, e_t));
}

/// Content-word term frequencies: synonyms and archaic forms mapped to their
/// canonical word; function words and interjections dropped.
inline std::map<std::string, double> content_bag(std::string_view text) {
    const auto& lex = corpus::Lexicon::instance();
    std::map<std::string, double> bag;
    for (const auto& w : words_of(text)) {
        if (lex.is_interjection(w)) {
            continue;
        }
        const std::string c = lex.canonical_form(w);
        if (lex.is_function_word(c)) {
            continue;
        }
        bag[c] += 1.0;
    }
    return bag;
}

/// Cosine of content-word bags, in [0, 1]; 0 when either text has no content words.
inline double meaning_score(std::string_view source, std::string_view rewrite) {
    const auto a = content_bag(source);
    const auto b = content_bag(rewrite);
    if (a.empty() || b.empty()) {
        return 0.0;
    }
    double ab = 0.0;
    double aa = 0.0;
    double bb = 0.0;
    for (const auto& [w, x] : a) {
        aa += x * x;
        if (auto it = b.find(w); it != b.end()) {
            ab += x * it->second;
        }
    }
    for (const auto& [w, y] : b) {
        bb += y * y;
    }
    return std::clamp(ab / std::sqrt(aa * bb), 0.0, 1.0);
}

inline double joint(double toward_val, double meaning_val) {
    if (!(toward_val >= 0.0 && toward_val <= 1.0 && meaning_val >= 0.0 && meaning_val <= 1.0)) {
        throw DomainError("joint: arguments must lie in [0, 1]");
    }
    return std::sqrt(toward_val * meaning_val);
}

namespace detail {

inline double plain_fluency(const lm::BaseModel& base, std::string_view text, const lm::Tokenizer& tok) {
    lm::Sequence s = lm::plain_sequence(tok, text);
    if (s.tokens.size() - 1 > static_cast<std::size_t>(base.config.context_len)) {
        s.tokens.resize(static_cast<std::size_t>(base.config.context_len) + 1);
    }
    lm::ForwardCache cache;
    const double ce = lm::detail::sequence_mean_nll(base.config, base.params, s, 1.0, cache, nullptr);
    return std::exp(-ce);
}

} // namespace detail

/// exp(-mean per-character cross-entropy) of the text under the base model,
/// read as a plain sequence (the end-of-text token counts as a character).
inline double fluency(const lm::BaseModel& base, std::string_view text,
                      const lm::Tokenizer& tok = lm::Tokenizer::standard()) {
    if (text.empty()) {
        throw DomainError("fluency of an empty text");
    }
    return detail::plain_fluency(base, text, tok);
}

struct ScoreReport {
    double toward = 0.0;
    double away = 0.0;
    double meaning = 0.0;
    double joint = 0.0;
    double fluency = 0.0;
};

/// Scores one rewrite; e_s is the source text's own embedding.
inline ScoreReport score_rewrite(std::span<const double> e_t, std::string_view source, std::string_view rewrite,
                                 const lm::BaseModel* base) {
    ScoreReport r;
    const auto e_s = style_embed(source);
    r.meaning = meaning_score(source, rewrite);
    if (rewrite.empty() || words_of(rewrite).empty()) {
        // Nothing stylistic to embed; the rewrite made no movement.
        r.toward = 0.0;
        r.away = 0.0;
    } else {
        const auto e_out = style_embed(rewrite);
        r.toward = toward(e_s, e_t, e_out);
        r.away = away(e_s, e_t, e_out);
    }
    r.joint = joint(r.toward, r.meaning);
    r.fluency = base != nullptr ? detail::plain_fluency(*base, rewrite, lm::Tokenizer::standard()) : 0.0;
    return r;
}

} // namespace stylemix::metrics
