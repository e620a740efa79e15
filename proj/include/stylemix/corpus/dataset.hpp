#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "stylemix/core/rng.hpp"
#include "stylemix/corpus/grammar.hpp"
#include "stylemix/corpus/profile.hpp"
#include "stylemix/error.hpp"

namespace stylemix::corpus {

struct CorpusSpec {
    int n_high_resource = 8;
    int pairs_per_author = 512;
    int n_targets = 4;
    int texts_per_target = 16;
    int n_sources = 4;
    int source_train = 50;
    int source_test = 16;
    std::uint64_t seed = 42;

    void validate() const {
        auto positive = [](int v, const char* name) {
            if (v < 1) {
                throw ConfigError(std::string("CorpusSpec.") + name + " must be >= 1");
            }
        };
        positive(n_high_resource, "n_high_resource");
        positive(pairs_per_author, "pairs_per_author");
        positive(n_targets, "n_targets");
        positive(texts_per_target, "texts_per_target");
        positive(n_sources, "n_sources");
        positive(source_train, "source_train");
        positive(source_test, "source_test");
    }

    friend bool operator==(const CorpusSpec&, const CorpusSpec&) = default;
};

/// Pseudo-parallel example: neutral input and the author's styled original.
struct TrainPair {
    std::string neutral;
    std::string styled;
    std::string author_id;

    friend bool operator==(const TrainPair&, const TrainPair&) = default;
};

struct TextItem {
    std::string id; // "<author>/<split>/<index>", unique across a dataset
    std::string text;

    friend bool operator==(const TextItem&, const TextItem&) = default;
};

struct LibraryAuthor {
    StyleProfile profile;
    std::vector<TrainPair> pairs;
    friend bool operator==(const LibraryAuthor&, const LibraryAuthor&) = default;
};

struct TargetAuthor {
    StyleProfile profile;
    std::vector<TextItem> texts;
    friend bool operator==(const TargetAuthor&, const TargetAuthor&) = default;
};

struct SourceAuthor {
    StyleProfile profile;
    std::vector<TextItem> train;
    std::vector<TextItem> test;
    friend bool operator==(const SourceAuthor&, const SourceAuthor&) = default;
};

/// Three disjoint author sets, each ordered by author id.
struct Dataset {
    CorpusSpec spec;
    std::vector<LibraryAuthor> library;
    std::vector<TargetAuthor> targets;
    std::vector<SourceAuthor> sources;

    const LibraryAuthor& library_author(const std::string& id) const {
        for (const auto& a : library) {
            if (a.profile.author_id == id) {
                return a;
            }
        }
        throw ConfigError("unknown library author: " + id);
    }

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

inline std::string author_id(const char* prefix, int index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%02d", prefix, index);
    return buf;
}

namespace detail {

inline std::vector<TextItem> styled_texts(const StyleProfile& profile, const std::string& split, int count,
                                          core::SeededRng& rng) {
    std::vector<TextItem> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const std::string neutral = gen_neutral_sentence(rng, profile.length_bias);
        out.push_back({profile.author_id + "/" + split + "/" + std::to_string(i), stylize(profile, neutral, rng)});
    }
    return out;
}

} // namespace detail

/// Deterministic synthetic corpus: library authors with pseudo-parallel
/// pairs, low-resource targets, and sources with disjoint train/test splits.
inline Dataset build_dataset(const CorpusSpec& spec) {
    spec.validate();
    const core::SeededRng master(spec.seed);
    Dataset ds;
    ds.spec = spec;

    for (int a = 0; a < spec.n_high_resource; ++a) {
        auto prng = master.derive("profile/high_resource", static_cast<std::uint64_t>(a));
        LibraryAuthor author{draw_profile(author_id("hr", a), prng), {}};
        auto trng = master.derive("text/high_resource", static_cast<std::uint64_t>(a));
        author.pairs.reserve(static_cast<std::size_t>(spec.pairs_per_author));
        for (int i = 0; i < spec.pairs_per_author; ++i) {
            std::string neutral = gen_neutral_sentence(trng, author.profile.length_bias);
            std::string styled = stylize(author.profile, neutral, trng);
            author.pairs.push_back({std::move(neutral), std::move(styled), author.profile.author_id});
        }
        ds.library.push_back(std::move(author));
    }
    for (int t = 0; t < spec.n_targets; ++t) {
        auto prng = master.derive("profile/target", static_cast<std::uint64_t>(t));
        TargetAuthor author{draw_profile(author_id("tgt", t), prng), {}};
        auto trng = master.derive("text/target", static_cast<std::uint64_t>(t));
        author.texts = detail::styled_texts(author.profile, "text", spec.texts_per_target, trng);
        ds.targets.push_back(std::move(author));
    }
    for (int s = 0; s < spec.n_sources; ++s) {
        auto prng = master.derive("profile/source", static_cast<std::uint64_t>(s));
        SourceAuthor author{draw_profile(author_id("src", s), prng), {}, {}};
        auto trng = master.derive("text/source", static_cast<std::uint64_t>(s));
        author.train = detail::styled_texts(author.profile, "train", spec.source_train, trng);
        author.test = detail::styled_texts(author.profile, "test", spec.source_test, trng);
        ds.sources.push_back(std::move(author));
    }
    return ds;
}

} // namespace stylemix::corpus
