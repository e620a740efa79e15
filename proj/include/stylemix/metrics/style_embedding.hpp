#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stylemix/core/rng.hpp"
#include "stylemix/core/similarity.hpp"
#include "stylemix/corpus/grammar.hpp"
#include "stylemix/corpus/lexicon.hpp"
#include "stylemix/corpus/profile.hpp"
#include "stylemix/error.hpp"
#include "stylemix/lm/tokenizer.hpp"

namespace stylemix::metrics {

inline constexpr std::size_t kEmbeddingDim = 64;

using StyleEmbedding = std::vector<double>;

// Character classes counted per non-space character.
inline const std::array<char32_t, 14>& punctuation_marks() {
    static const std::array<char32_t, 14> marks = {U'.', U',', U'!', U'?', U';', U':', U'\'',
                                                   U'"', U'«', U'»', U'—', U'-', U'(', U')'};
    return marks;
}

/// Feature layout:
///   [0, 14)   punctuation rates, one per mark
///   14, 15    uppercase and digit rates
///   [16, 56)  function-word rates, in function_words() order
///   56..58    mean word length, mean sentence length, type-token ratio
///   59..61    interjection, archaic-form and pooled-synonym rates (per word)
///   62, 63    long-word (>= 7 letters) and short-word (<= 3 letters) rates
/// Rates divide a count by the number of non-space characters or words, so
/// they do not change when a text is repeated.
struct FeatureIndex {
    static constexpr std::size_t punct = 0;
    static constexpr std::size_t upper = 14;
    static constexpr std::size_t digit = 15;
    static constexpr std::size_t function_words = 16;
    static constexpr std::size_t mean_word_len = 56;
    static constexpr std::size_t mean_sentence_len = 57;
    static constexpr std::size_t type_token = 58;
    static constexpr std::size_t interjection = 59;
    static constexpr std::size_t archaic = 60;
    static constexpr std::size_t synonym = 61;
    static constexpr std::size_t long_word = 62;
    static constexpr std::size_t short_word = 63;

    static constexpr bool is_rate(std::size_t i) {
        return i != mean_word_len && i != mean_sentence_len && i != type_token;
    }
};

inline std::size_t punct_index(char32_t c) {
    const auto& marks = punctuation_marks();
    for (std::size_t i = 0; i < marks.size(); ++i) {
        if (marks[i] == c) {
            return FeatureIndex::punct + i;
        }
    }
    return kEmbeddingDim;
}

/// Lowercased maximal runs of ASCII letters.
inline std::vector<std::string> words_of(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) {
            cur += static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c);
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) {
        out.push_back(std::move(cur));
    }
    return out;
}

/// Raw stylometric features before the log1p transform.
inline std::vector<double> raw_features(std::string_view text) {
    if (text.empty()) {
        throw DomainError("style features of an empty text");
    }
    const auto& lex = corpus::Lexicon::instance();
    std::vector<double> f(kEmbeddingDim, 0.0);

    double chars = 0.0;
    double sentences = 0.0;
    bool in_terminal = false;
    for (char32_t c : lm::utf8::decode(text)) {
        const bool terminal = c == U'.' || c == U'!' || c == U'?' || c == U'—';
        if (terminal && !in_terminal) {
            sentences += 1.0;
        }
        in_terminal = terminal;
        if (c == U' ' || c == U'\t' || c == U'\n') {
            continue;
        }
        chars += 1.0;
        if (const std::size_t pi = punct_index(c); pi < kEmbeddingDim) {
            f[pi] += 1.0;
        } else if (c >= U'A' && c <= U'Z') {
            f[FeatureIndex::upper] += 1.0;
        } else if (c >= U'0' && c <= U'9') {
            f[FeatureIndex::digit] += 1.0;
        }
    }
    if (chars > 0.0) {
        for (std::size_t i = FeatureIndex::punct; i <= FeatureIndex::digit; ++i) {
            f[i] /= chars;
        }
    }

    const auto ws = words_of(text);
    const auto& fw = corpus::function_words();
    if (!ws.empty()) {
        const auto n = static_cast<double>(ws.size());
        double letters = 0.0;
        std::set<std::string> types;
        for (const auto& w : ws) {
            letters += static_cast<double>(w.size());
            types.insert(w);
            for (std::size_t k = 0; k < fw.size(); ++k) {
                if (fw[k] == w) {
                    f[FeatureIndex::function_words + k] += 1.0;
                }
            }
            if (lex.is_interjection(w)) {
                f[FeatureIndex::interjection] += 1.0;
            }
            if (lex.is_archaic_form(w)) {
                f[FeatureIndex::archaic] += 1.0;
            }
            if (lex.canonical_of_synonym(w) != nullptr) {
                f[FeatureIndex::synonym] += 1.0;
            }
            if (w.size() >= 7) {
                f[FeatureIndex::long_word] += 1.0;
            }
            if (w.size() <= 3) {
                f[FeatureIndex::short_word] += 1.0;
            }
        }
        for (std::size_t k = 0; k < fw.size(); ++k) {
            f[FeatureIndex::function_words + k] /= n;
        }
        for (std::size_t i : {FeatureIndex::interjection, FeatureIndex::archaic, FeatureIndex::synonym,
                              FeatureIndex::long_word, FeatureIndex::short_word}) {
            f[i] /= n;
        }
        f[FeatureIndex::mean_word_len] = letters / n;
        f[FeatureIndex::mean_sentence_len] = n / std::max(sentences, 1.0);
        f[FeatureIndex::type_token] = static_cast<double>(types.size()) / n;
    }
    return f;
}

/// log1p of every raw feature.
inline std::vector<double> log_features(std::string_view text) {
    auto f = raw_features(text);
    for (double& x : f) {
        x = std::log1p(x);
    }
    return f;
}

/// Per-feature mean and standard deviation used for z-scoring.
struct ReferenceStats {
    std::vector<double> mean;
    std::vector<double> stddev;

    static constexpr double kStdFloor = 0.05;

    static ReferenceStats from_texts(std::span<const std::string> texts) {
        if (texts.empty()) {
            throw DomainError("reference statistics need at least one text");
        }
        ReferenceStats r{std::vector<double>(kEmbeddingDim, 0.0), std::vector<double>(kEmbeddingDim, 0.0)};
        std::vector<std::vector<double>> feats;
        feats.reserve(texts.size());
        for (const auto& t : texts) {
            feats.push_back(log_features(t));
        }
        const auto n = static_cast<double>(texts.size());
        for (const auto& f : feats) {
            for (std::size_t i = 0; i < kEmbeddingDim; ++i) {
                r.mean[i] += f[i];
            }
        }
        for (double& m : r.mean) {
            m /= n;
        }
        for (const auto& f : feats) {
            for (std::size_t i = 0; i < kEmbeddingDim; ++i) {
                r.stddev[i] += (f[i] - r.mean[i]) * (f[i] - r.mean[i]);
            }
        }
        for (double& s : r.stddev) {
            s = std::max(std::sqrt(s / n), kStdFloor);
        }
        return r;
    }

    /// Built once from a fixed-seed sample of neutral sentences and their
    /// stylizations under a fixed panel of random profiles. Independent of
    /// any dataset, so embeddings are comparable across runs.
    static const ReferenceStats& standard() {
        static const ReferenceStats stats = [] {
            const core::SeededRng master(0x5eed0fa11ULL);
            std::vector<corpus::StyleProfile> panel;
            for (int i = 0; i < 32; ++i) {
                auto prng = master.derive("reference/profile", static_cast<std::uint64_t>(i));
                panel.push_back(corpus::draw_profile("ref" + std::to_string(i), prng));
            }
            auto rng = master.derive("reference/text");
            std::vector<std::string> texts;
            for (int i = 0; i < 2048; ++i) {
                const int bias = static_cast<int>(rng.uniform_index(3)) - 1;
                const std::string x = corpus::gen_neutral_sentence(rng, bias);
                if (i % 4 == 0) {
                    texts.push_back(x);
                } else {
                    texts.push_back(corpus::stylize(panel[rng.uniform_index(panel.size())], x, rng));
                }
            }
            return from_texts(texts);
        }();
        return stats;
    }
};

/// Unit-norm 64-dimensional style vector: log1p features, z-scored against
/// the reference statistics, then L2-normalized.
inline StyleEmbedding style_embed(std::string_view text, const ReferenceStats& ref = ReferenceStats::standard()) {
    auto f = log_features(text);
    for (std::size_t i = 0; i < kEmbeddingDim; ++i) {
        f[i] = (f[i] - ref.mean[i]) / ref.stddev[i];
    }
    return core::l2_normalize(f);
}

/// Normalized mean of the member embeddings.
inline StyleEmbedding prototype_embed(std::span<const std::string> texts,
                                      const ReferenceStats& ref = ReferenceStats::standard()) {
    if (texts.empty()) {
        throw DomainError("prototype of an empty text list");
    }
    std::vector<double> sum(kEmbeddingDim, 0.0);
    for (const auto& t : texts) {
        const auto e = style_embed(t, ref);
        for (std::size_t i = 0; i < kEmbeddingDim; ++i) {
            sum[i] += e[i];
        }
    }
    for (double& x : sum) {
        x /= static_cast<double>(texts.size());
    }
    return core::l2_normalize(sum);
}

} // namespace stylemix::metrics
