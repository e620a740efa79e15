#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stylemix/core/matrix.hpp"
#include "stylemix/core/rng.hpp"
#include "stylemix/corpus/dataset.hpp"
#include "stylemix/corpus/profile.hpp"
#include "stylemix/error.hpp"
#include "stylemix/io/base64.hpp"
#include "stylemix/lm/model.hpp"
#include "stylemix/lm/training.hpp"
#include "stylemix/mixing/mixing.hpp"

namespace stylemix::io {

using nlohmann::json;

inline constexpr int kArtifactVersion = 1;

// ---- files ----

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Writes through a temporary sibling and renames, so readers never see a
/// half-written file.
inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::error_code ec;
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) {
            throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
        }
    }
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot write " + path.string());
        }
        out << content;
        if (!out) {
            throw IoError("short write to " + path.string());
        }
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        throw IoError("cannot rename into " + path.string() + ": " + ec.message());
    }
}

inline json parse_json(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError(what + ": " + e.what());
    }
}

/// Canonical text of a JSON value: sorted keys, two-space indent, trailing newline.
inline std::string dump(const json& j) {
    return j.dump(2) + "\n";
}

/// FNV-1a of the canonical compact dump.
inline std::string config_hash(const json& config) {
    return lm::detail::hex64(core::fnv1a64(config.dump()));
}

// ---- envelope ----

struct ArtifactHeader {
    std::string kind;
    std::string config_hash;
    std::uint64_t seed = 0;
};

inline json make_artifact(const ArtifactHeader& h, json payload) {
    json j;
    j["artifact_version"] = kArtifactVersion;
    j["kind"] = h.kind;
    j["config_hash"] = h.config_hash;
    j["seed"] = h.seed;
    j["payload"] = std::move(payload);
    return j;
}

inline void write_artifact(const std::filesystem::path& path, const ArtifactHeader& h, json payload) {
    write_file(path, dump(make_artifact(h, std::move(payload))));
}

/// Loads an artifact and checks its version and kind. Returns the whole document.
inline json read_artifact(const std::filesystem::path& path, const std::string& kind) {
    json j = parse_json(read_file(path), path.string());
    try {
        if (j.at("artifact_version").get<int>() != kArtifactVersion) {
            throw FormatError(path.string() + ": unsupported artifact version " + j.at("artifact_version").dump());
        }
        if (j.at("kind").get<std::string>() != kind) {
            throw FormatError(path.string() + ": expected a " + kind + " artifact, found " +
                              j.at("kind").get<std::string>());
        }
        (void)j.at("payload");
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    return j;
}

inline ArtifactHeader header_of(const json& doc) {
    return {doc.at("kind").get<std::string>(), doc.at("config_hash").get<std::string>(),
            doc.at("seed").get<std::uint64_t>()};
}

// ---- tensors ----

inline json to_json(const core::DenseMatrix& m) {
    return {{"shape", {m.rows(), m.cols()}}, {"f64le", encode_f64(m.data())}};
}

inline core::DenseMatrix matrix_from_json(const json& j) {
    const auto shape = j.at("shape").get<std::vector<std::size_t>>();
    if (shape.size() != 2) {
        throw FormatError("matrix shape must have two entries");
    }
    core::DenseMatrix m(shape[0], shape[1]);
    const auto xs = decode_f64(j.at("f64le").get<std::string>(), m.size());
    std::copy(xs.begin(), xs.end(), m.data().begin());
    return m;
}

inline json vector_to_json(std::span<const double> v) {
    return {{"shape", {v.size()}}, {"f64le", encode_f64(v)}};
}

inline std::vector<double> vector_from_json(const json& j) {
    const auto shape = j.at("shape").get<std::vector<std::size_t>>();
    if (shape.size() != 1) {
        throw FormatError("vector shape must have one entry");
    }
    return decode_f64(j.at("f64le").get<std::string>(), shape[0]);
}

// ---- corpus ----

inline json to_json(const corpus::CorpusSpec& s) {
    return {{"n_high_resource", s.n_high_resource}, {"pairs_per_author", s.pairs_per_author},
            {"n_targets", s.n_targets},             {"texts_per_target", s.texts_per_target},
            {"n_sources", s.n_sources},             {"source_train", s.source_train},
            {"source_test", s.source_test},         {"seed", s.seed}};
}

/// Missing keys keep their defaults.
inline corpus::CorpusSpec corpus_spec_from_json(const json& j) {
    corpus::CorpusSpec s;
    s.n_high_resource = j.value("n_high_resource", s.n_high_resource);
    s.pairs_per_author = j.value("pairs_per_author", s.pairs_per_author);
    s.n_targets = j.value("n_targets", s.n_targets);
    s.texts_per_target = j.value("texts_per_target", s.texts_per_target);
    s.n_sources = j.value("n_sources", s.n_sources);
    s.source_train = j.value("source_train", s.source_train);
    s.source_test = j.value("source_test", s.source_test);
    s.seed = j.value("seed", s.seed);
    return s;
}

inline json to_json(const corpus::StyleProfile& p) {
    json j{{"author_id", p.author_id},
           {"synonym_table", p.synonym_table},
           {"terminal_punct", p.terminal_punct},
           {"terminal_rate", p.terminal_rate},
           {"quote_style", std::string(corpus::to_string(p.quote_style))},
           {"interjection_rate", p.interjection_rate},
           {"length_bias", p.length_bias},
           {"archaic_spelling", p.archaic_spelling}};
    j["interjection"] = p.interjection ? json(*p.interjection) : json(nullptr);
    return j;
}

inline corpus::StyleProfile profile_from_json(const json& j) {
    corpus::StyleProfile p;
    p.author_id = j.at("author_id").get<std::string>();
    p.synonym_table = j.at("synonym_table").get<std::map<std::string, std::string>>();
    p.terminal_punct = j.at("terminal_punct").get<std::string>();
    p.terminal_rate = j.at("terminal_rate").get<double>();
    p.quote_style = corpus::quote_style_from_string(j.at("quote_style").get<std::string>());
    if (!j.at("interjection").is_null()) {
        p.interjection = j.at("interjection").get<std::string>();
    }
    p.interjection_rate = j.at("interjection_rate").get<double>();
    p.length_bias = j.at("length_bias").get<int>();
    p.archaic_spelling = j.at("archaic_spelling").get<bool>();
    p.validate();
    return p;
}

inline json to_json(const corpus::TextItem& t) {
    return {{"id", t.id}, {"text", t.text}};
}

inline std::vector<corpus::TextItem> items_from_json(const json& j) {
    std::vector<corpus::TextItem> out;
    for (const auto& x : j) {
        out.push_back({x.at("id").get<std::string>(), x.at("text").get<std::string>()});
    }
    return out;
}

inline json items_to_json(std::span<const corpus::TextItem> items) {
    json a = json::array();
    for (const auto& t : items) {
        a.push_back(to_json(t));
    }
    return a;
}

inline json to_json(const corpus::LibraryAuthor& a) {
    json pairs = json::array();
    for (const auto& p : a.pairs) {
        pairs.push_back({{"neutral", p.neutral}, {"styled", p.styled}});
    }
    return {{"author_id", a.profile.author_id}, {"role", "high_resource"}, {"profile", to_json(a.profile)},
            {"pairs", std::move(pairs)}};
}

inline corpus::LibraryAuthor library_author_from_json(const json& j) {
    corpus::LibraryAuthor a{profile_from_json(j.at("profile")), {}};
    for (const auto& p : j.at("pairs")) {
        a.pairs.push_back({p.at("neutral").get<std::string>(), p.at("styled").get<std::string>(), a.profile.author_id});
    }
    return a;
}

inline json to_json(const corpus::TargetAuthor& a) {
    return {{"author_id", a.profile.author_id}, {"role", "target"}, {"profile", to_json(a.profile)},
            {"texts", items_to_json(a.texts)}};
}

inline corpus::TargetAuthor target_author_from_json(const json& j) {
    return {profile_from_json(j.at("profile")), items_from_json(j.at("texts"))};
}

inline json to_json(const corpus::SourceAuthor& a) {
    return {{"author_id", a.profile.author_id}, {"role", "source"},           {"profile", to_json(a.profile)},
            {"train", items_to_json(a.train)},  {"test", items_to_json(a.test)}};
}

inline corpus::SourceAuthor source_author_from_json(const json& j) {
    return {profile_from_json(j.at("profile")), items_from_json(j.at("train")), items_from_json(j.at("test"))};
}

// ---- model ----

inline json to_json(const lm::ModelConfig& c) {
    return {{"vocab_size", c.vocab_size}, {"d_model", c.d_model}, {"n_layers", c.n_layers},
            {"n_heads", c.n_heads},       {"d_ff", c.d_ff},       {"context_len", c.context_len}};
}

inline lm::ModelConfig model_config_from_json(const json& j) {
    lm::ModelConfig c;
    c.vocab_size = j.value("vocab_size", c.vocab_size);
    c.d_model = j.value("d_model", c.d_model);
    c.n_layers = j.value("n_layers", c.n_layers);
    c.n_heads = j.value("n_heads", c.n_heads);
    c.d_ff = j.value("d_ff", c.d_ff);
    c.context_len = j.value("context_len", c.context_len);
    c.validate();
    return c;
}

inline json to_json(const lm::BaseModel& m) {
    json tensors = json::object();
    lm::ModelParams::visit(m.params, [&](const std::string& name, const core::DenseMatrix& t) { tensors[name] = to_json(t); });
    return {{"config", to_json(m.config)}, {"hash", m.hash()}, {"tensors", std::move(tensors)}};
}

/// Rebuilds a base model and verifies the stored hash.
inline lm::BaseModel base_model_from_json(const json& j) {
    lm::BaseModel m{model_config_from_json(j.at("config")), {}};
    m.params = lm::ModelParams::zeros(m.config);
    const json& tensors = j.at("tensors");
    lm::ModelParams::visit(m.params, [&](const std::string& name, core::DenseMatrix& t) {
        if (!tensors.contains(name)) {
            throw FormatError("base model is missing tensor " + name);
        }
        core::DenseMatrix loaded = matrix_from_json(tensors.at(name));
        if (!loaded.same_shape(t)) {
            throw FormatError("tensor " + name + " has the wrong shape");
        }
        t = std::move(loaded);
    });
    if (m.hash() != j.at("hash").get<std::string>()) {
        throw CompatibilityError("base model contents do not match the stored hash");
    }
    return m;
}

inline json to_json(const lm::LowRankDelta& d) {
    return {{"a", to_json(d.a)}, {"b", to_json(d.b)}, {"rank", d.rank}, {"alpha", d.alpha}, {"target", d.target}};
}

inline lm::LowRankDelta delta_from_json(const json& j) {
    return {matrix_from_json(j.at("a")), matrix_from_json(j.at("b")), j.at("rank").get<int>(),
            j.at("alpha").get<double>(), j.at("target").get<std::string>()};
}

inline json to_json(const lm::AuthorAdapter& a) {
    json layers = json::array();
    for (const auto& l : a.layers) {
        layers.push_back({{"q", to_json(l.q)}, {"v", to_json(l.v)}});
    }
    return {{"author_id", a.author_id}, {"base_hash", a.base_hash}, {"layers", std::move(layers)}};
}

inline lm::AuthorAdapter adapter_from_json(const json& j) {
    lm::AuthorAdapter a{j.at("author_id").get<std::string>(), j.at("base_hash").get<std::string>(), {}};
    for (const auto& l : j.at("layers")) {
        a.layers.push_back({delta_from_json(l.at("q")), delta_from_json(l.at("v"))});
    }
    return a;
}

// ---- mixing weights ----

inline json to_json(const mixing::MixWeights& W) {
    return {{"granularity", std::string(mixing::to_string(W.granularity))},
            {"adapter_ids", W.adapter_ids},
            {"layers", W.layers()},
            {"bounds", {W.lower, W.upper}},
            {"weights", to_json(W.w)}};
}

inline mixing::MixWeights mix_weights_from_json(const json& j) {
    mixing::MixWeights W;
    W.granularity = mixing::granularity_from_string(j.at("granularity").get<std::string>());
    W.adapter_ids = j.at("adapter_ids").get<std::vector<std::string>>();
    W.w = matrix_from_json(j.at("weights"));
    const auto bounds = j.at("bounds").get<std::vector<double>>();
    if (bounds.size() != 2) {
        throw FormatError("weights bounds must have two entries");
    }
    W.lower = bounds[0];
    W.upper = bounds[1];
    if (W.layers() != j.at("layers").get<std::size_t>()) {
        throw FormatError("weights layer count does not match the matrix");
    }
    W.validate();
    return W;
}

// ---- training configs ----

inline json to_json(const lm::TrainConfig& t) {
    return {{"steps", t.steps},
            {"batch", t.batch},
            {"lr", t.adam.lr},
            {"beta1", t.adam.beta1},
            {"beta2", t.adam.beta2},
            {"adam_eps", t.adam.eps},
            {"warmup", t.warmup},
            {"min_lr_ratio", t.min_lr_ratio},
            {"grad_clip", t.grad_clip},
            {"seed", t.seed}};
}

/// Thread count is a runtime choice and never persisted.
inline lm::TrainConfig train_config_from_json(const json& j, lm::TrainConfig t = {}) {
    t.steps = j.value("steps", t.steps);
    t.batch = j.value("batch", t.batch);
    t.adam.lr = j.value("lr", t.adam.lr);
    t.adam.beta1 = j.value("beta1", t.adam.beta1);
    t.adam.beta2 = j.value("beta2", t.adam.beta2);
    t.adam.eps = j.value("adam_eps", t.adam.eps);
    t.warmup = j.value("warmup", t.warmup);
    t.min_lr_ratio = j.value("min_lr_ratio", t.min_lr_ratio);
    t.grad_clip = j.value("grad_clip", t.grad_clip);
    t.seed = j.value("seed", t.seed);
    t.validate();
    return t;
}

inline json to_json(const lm::SftConfig& s) {
    return {{"train", to_json(s.train)}, {"rank", s.rank}, {"alpha", s.alpha}};
}

inline lm::SftConfig sft_config_from_json(const json& j) {
    lm::SftConfig s;
    if (j.contains("train")) {
        s.train = train_config_from_json(j.at("train"), s.train);
    }
    s.rank = j.value("rank", s.rank);
    s.alpha = j.value("alpha", s.alpha);
    return s;
}

} // namespace stylemix::io
