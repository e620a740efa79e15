#pragma once

#include <algorithm>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stylemix/core/rng.hpp"
#include "stylemix/core/similarity.hpp"
#include "stylemix/corpus/dataset.hpp"
#include "stylemix/error.hpp"
#include "stylemix/lm/model.hpp"
#include "stylemix/metrics/style_embedding.hpp"

namespace stylemix::selection {

inline constexpr int kPrototypeSampleSize = 64;

struct LibraryEntry {
    std::string author_id;
    lm::AuthorAdapter adapter;
    metrics::StyleEmbedding prototype;
    int sample_size = 0;
};

struct AdapterLibrary {
    std::vector<LibraryEntry> entries;

    void validate() const {
        std::set<std::string> ids;
        for (const auto& e : entries) {
            if (!ids.insert(e.author_id).second) {
                throw LibraryError("duplicate library id " + e.author_id);
            }
            if (e.adapter.author_id != e.author_id) {
                throw LibraryError("library entry " + e.author_id + " holds another author's adapter");
            }
        }
    }

    std::vector<lm::AuthorAdapter> adapters() const {
        std::vector<lm::AuthorAdapter> out;
        for (const auto& e : entries) {
            out.push_back(e.adapter);
        }
        return out;
    }

    std::vector<std::string> ids() const {
        std::vector<std::string> out;
        for (const auto& e : entries) {
            out.push_back(e.author_id);
        }
        return out;
    }
};

/// Prototype from a random sample of an author's styled texts.
inline metrics::StyleEmbedding sample_prototype(std::span<const corpus::TrainPair> pairs, core::SeededRng& rng,
                                                int sample_size = kPrototypeSampleSize) {
    if (pairs.empty()) {
        throw DomainError("prototype of an author with no texts");
    }
    std::vector<std::size_t> idx(pairs.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        idx[i] = i;
    }
    rng.shuffle(idx);
    idx.resize(std::min(idx.size(), static_cast<std::size_t>(sample_size)));
    std::sort(idx.begin(), idx.end());
    std::vector<std::string> texts;
    for (std::size_t i : idx) {
        texts.push_back(pairs[i].styled);
    }
    return metrics::prototype_embed(texts);
}

/// One entry per library author, adapters matched by author id.
inline AdapterLibrary build_library(const corpus::Dataset& ds, std::span<const lm::AuthorAdapter> adapters,
                                    int sample_size = kPrototypeSampleSize) {
    AdapterLibrary lib;
    const core::SeededRng master(ds.spec.seed);
    for (std::size_t a = 0; a < ds.library.size(); ++a) {
        const auto& author = ds.library[a];
        auto it = std::find_if(adapters.begin(), adapters.end(),
                               [&](const lm::AuthorAdapter& ad) { return ad.author_id == author.profile.author_id; });
        if (it == adapters.end()) {
            throw LibraryError("no adapter for library author " + author.profile.author_id);
        }
        auto rng = master.derive("selection/prototype", a);
        LibraryEntry e{author.profile.author_id, *it, sample_prototype(author.pairs, rng, sample_size),
                       std::min(sample_size, static_cast<int>(author.pairs.size()))};
        lib.entries.push_back(std::move(e));
    }
    lib.validate();
    return lib;
}

using Ranking = std::vector<std::pair<std::string, double>>;

/// Descending cosine similarity to e_t; ties go to the smaller author id.
inline Ranking rank_adapters(std::span<const double> e_t, const AdapterLibrary& library) {
    if (library.entries.empty()) {
        throw DomainError("rank_adapters: empty library");
    }
    Ranking r;
    for (const auto& e : library.entries) {
        r.emplace_back(e.author_id, core::cosine_similarity(e_t, e.prototype));
    }
    std::sort(r.begin(), r.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) {
            return a.second > b.second;
        }
        return a.first < b.first;
    });
    return r;
}

/// The first k ranked entries, in ranking order.
inline AdapterLibrary select_top_k(const AdapterLibrary& library, const Ranking& ranking, int k) {
    if (k < 1 || static_cast<std::size_t>(k) > ranking.size()) {
        throw ConfigError("select_top_k: k must lie in [1, " + std::to_string(ranking.size()) + "]");
    }
    AdapterLibrary out;
    for (int i = 0; i < k; ++i) {
        const auto& id = ranking[static_cast<std::size_t>(i)].first;
        auto it = std::find_if(library.entries.begin(), library.entries.end(),
                               [&](const LibraryEntry& e) { return e.author_id == id; });
        if (it == library.entries.end()) {
            throw LibraryError("ranking names an author missing from the library: " + id);
        }
        out.entries.push_back(*it);
    }
    return out;
}

} // namespace stylemix::selection
