#pragma once

#include <chrono>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "stylemix/core/rng.hpp"
#include "stylemix/corpus/dataset.hpp"
#include "stylemix/experiment/config.hpp"
#include "stylemix/io/csv.hpp"
#include "stylemix/io/json_io.hpp"
#include "stylemix/lm/model.hpp"
#include "stylemix/lm/training.hpp"

namespace stylemix::experiment {

namespace fs = std::filesystem;

inline void log(const std::string& msg) {
    std::clog << "[stylemix] " << msg << std::endl;
}

/// File layout of one output directory.
struct Workspace {
    fs::path root;

    fs::path dataset_dir() const { return root / "dataset"; }
    fs::path dataset_manifest() const { return dataset_dir() / "manifest.json"; }
    fs::path base_file() const { return root / "base" / "model.json"; }
    fs::path base_trace() const { return root / "base" / "trace.csv"; }
    fs::path adapter_file(const std::string& id) const { return root / "adapters" / (id + ".json"); }
    fs::path selection_file(const std::string& target) const { return root / "selection" / (target + ".json"); }
    fs::path run_dir(Method m, mixing::Granularity g, int k, std::uint64_t seed) const {
        return root / "runs" / (std::string(to_string(m)) + "_" + std::string(mixing::to_string(g)) + "_k" +
                                std::to_string(k)) /
               ("seed" + std::to_string(seed));
    }
};

/// True when `path` holds an artifact of `kind` produced from the same config.
inline bool cached(const fs::path& path, const std::string& kind, const std::string& hash) {
    if (!fs::exists(path)) {
        return false;
    }
    try {
        return io::header_of(io::read_artifact(path, kind)).config_hash == hash;
    } catch (const Error&) {
        return false;
    }
}

// ---- dataset ----

inline void save_dataset(const Workspace& ws, const corpus::Dataset& ds, const std::string& hash) {
    json library = json::array();
    json targets = json::array();
    json sources = json::array();
    for (const auto& a : ds.library) {
        io::write_artifact(ws.dataset_dir() / "library" / (a.profile.author_id + ".json"),
                           {"library_author", hash, ds.spec.seed}, io::to_json(a));
        library.push_back(a.profile.author_id);
    }
    for (const auto& a : ds.targets) {
        io::write_artifact(ws.dataset_dir() / "targets" / (a.profile.author_id + ".json"),
                           {"target_author", hash, ds.spec.seed}, io::to_json(a));
        targets.push_back(a.profile.author_id);
    }
    for (const auto& a : ds.sources) {
        io::write_artifact(ws.dataset_dir() / "sources" / (a.profile.author_id + ".json"),
                           {"source_author", hash, ds.spec.seed}, io::to_json(a));
        sources.push_back(a.profile.author_id);
    }
    // Manifest last: its presence marks a complete dataset.
    io::write_artifact(ws.dataset_manifest(), {"dataset", hash, ds.spec.seed},
                       {{"spec", io::to_json(ds.spec)}, {"library", library}, {"targets", targets}, {"sources", sources}});
}

inline corpus::Dataset load_dataset(const Workspace& ws) {
    const json doc = io::read_artifact(ws.dataset_manifest(), "dataset");
    const json& p = doc.at("payload");
    corpus::Dataset ds;
    ds.spec = io::corpus_spec_from_json(p.at("spec"));
    for (const auto& id : p.at("library")) {
        const auto a = io::read_artifact(ws.dataset_dir() / "library" / (id.get<std::string>() + ".json"), "library_author");
        ds.library.push_back(io::library_author_from_json(a.at("payload")));
    }
    for (const auto& id : p.at("targets")) {
        const auto a = io::read_artifact(ws.dataset_dir() / "targets" / (id.get<std::string>() + ".json"), "target_author");
        ds.targets.push_back(io::target_author_from_json(a.at("payload")));
    }
    for (const auto& id : p.at("sources")) {
        const auto a = io::read_artifact(ws.dataset_dir() / "sources" / (id.get<std::string>() + ".json"), "source_author");
        ds.sources.push_back(io::source_author_from_json(a.at("payload")));
    }
    return ds;
}

inline corpus::Dataset ensure_dataset(const RunConfig& cfg, const Workspace& ws) {
    const std::string hash = io::config_hash(corpus_key(cfg));
    if (cached(ws.dataset_manifest(), "dataset", hash)) {
        return load_dataset(ws);
    }
    log("generating corpus (seed " + std::to_string(cfg.corpus.seed) + ")");
    corpus::Dataset ds = corpus::build_dataset(cfg.corpus);
    save_dataset(ws, ds, hash);
    return ds;
}

// ---- base model ----

inline lm::BaseModel load_base(const Workspace& ws) {
    return io::base_model_from_json(io::read_artifact(ws.base_file(), "base_model").at("payload").at("model"));
}

inline lm::BaseModel ensure_base(const RunConfig& cfg, const Workspace& ws, const corpus::Dataset& ds) {
    const std::string hash = io::config_hash(base_key(cfg));
    if (cached(ws.base_file(), "base_model", hash)) {
        return load_base(ws);
    }
    log("training base model for " + std::to_string(cfg.base_train.steps) + " steps");
    const auto& tok = lm::Tokenizer::standard();
    if (tok.vocab_size() != cfg.model.vocab_size) {
        throw ConfigError("model.vocab_size must equal the tokenizer vocabulary (" +
                          std::to_string(tok.vocab_size()) + ")");
    }
    auto init_rng = core::SeededRng(cfg.base_train.seed).derive("base/init");
    lm::BaseModel model = lm::BaseModel::init(cfg.model, init_rng);
    const auto heldout = lm::base_heldout_texts(ds);
    const double ce_before = lm::plain_cross_entropy(model.config, model.params, heldout, tok, cfg.thread_count());
    lm::TrainConfig tc = cfg.base_train;
    tc.threads = cfg.thread_count();
    const auto trace = lm::train_base(model, lm::make_base_corpus(ds, cfg.base_aux_styles), tc, tok);
    const double ce_after = lm::plain_cross_entropy(model.config, model.params, heldout, tok, cfg.thread_count());
    log("base held-out cross-entropy " + io::fmt(ce_before) + " -> " + io::fmt(ce_after));

    io::CsvWriter csv({"step", "loss", "lr", "artifact_version", "config_hash", "seed"});
    for (std::size_t s = 0; s < trace.loss.size(); ++s) {
        csv.row({std::to_string(s), io::fmt(trace.loss[s]), io::fmt(tc.lr_at(static_cast<int>(s))),
                 std::to_string(io::kArtifactVersion), hash, std::to_string(tc.seed)});
    }
    io::write_file(ws.base_trace(), csv.str());
    io::write_artifact(ws.base_file(), {"base_model", hash, tc.seed},
                       {{"model", io::to_json(model)},
                        {"heldout_cross_entropy_init", ce_before},
                        {"heldout_cross_entropy", ce_after},
                        {"final_batch_loss", trace.loss.empty() ? 0.0 : trace.loss.back()}});
    return model;
}

// ---- adapters ----

/// Fresh pairs in an author's style that the adapter never trains on.
inline std::vector<corpus::TrainPair> adapter_heldout_pairs(const corpus::Dataset& ds, std::size_t author_index,
                                                            int count = 64) {
    const auto& profile = ds.library.at(author_index).profile;
    auto rng = core::SeededRng(ds.spec.seed).derive("text/adapter_heldout", author_index);
    std::vector<corpus::TrainPair> out;
    for (int i = 0; i < count; ++i) {
        std::string neutral = corpus::gen_neutral_sentence(rng, profile.length_bias);
        std::string styled = corpus::stylize(profile, neutral, rng);
        out.push_back({std::move(neutral), std::move(styled), profile.author_id});
    }
    return out;
}

struct AdapterRecord {
    lm::AuthorAdapter adapter;
    double heldout_loss_base = 0.0;
    double heldout_loss_adapter = 0.0;
};

inline AdapterRecord load_adapter_record(const fs::path& path) {
    const json doc = io::read_artifact(path, "adapter");
    const json& p = doc.at("payload");
    return {io::adapter_from_json(p.at("adapter")), p.at("heldout_loss_base").get<double>(),
            p.at("heldout_loss_adapter").get<double>()};
}

inline std::vector<AdapterRecord> ensure_adapters(const RunConfig& cfg, const Workspace& ws, const corpus::Dataset& ds,
                                                  const lm::BaseModel& base) {
    const std::string hash = io::config_hash(adapters_key(cfg));
    std::vector<AdapterRecord> out;
    for (std::size_t a = 0; a < ds.library.size(); ++a) {
        const auto& author = ds.library[a];
        const auto path = ws.adapter_file(author.profile.author_id);
        if (cached(path, "adapter", hash)) {
            AdapterRecord rec = load_adapter_record(path);
            rec.adapter.check_base(base);
            out.push_back(std::move(rec));
            continue;
        }
        log("training adapter " + author.profile.author_id);
        lm::SftConfig sc = cfg.sft;
        sc.train.threads = cfg.thread_count();
        sc.train.seed = core::SeededRng(cfg.sft.train.seed).derive("adapter/seed", a).next_u64();
        AdapterRecord rec;
        rec.adapter = lm::sft_train_adapter(base, author.pairs, sc, author.profile.author_id);
        const auto heldout = adapter_heldout_pairs(ds, a);
        rec.heldout_loss_base = lm::sft_loss(base, nullptr, heldout, cfg.thread_count());
        rec.heldout_loss_adapter = lm::sft_loss(base, &rec.adapter, heldout, cfg.thread_count());
        log("  held-out reconstruction loss " + io::fmt(rec.heldout_loss_base) + " -> " +
            io::fmt(rec.heldout_loss_adapter));
        io::write_artifact(path, {"adapter", hash, sc.train.seed},
                           {{"adapter", io::to_json(rec.adapter)},
                            {"heldout_loss_base", rec.heldout_loss_base},
                            {"heldout_loss_adapter", rec.heldout_loss_adapter}});
        out.push_back(std::move(rec));
    }
    return out;
}

inline std::vector<lm::AuthorAdapter> adapters_of(const std::vector<AdapterRecord>& recs) {
    std::vector<lm::AuthorAdapter> out;
    for (const auto& r : recs) {
        out.push_back(r.adapter);
    }
    return out;
}

} // namespace stylemix::experiment
