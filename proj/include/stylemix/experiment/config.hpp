#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "stylemix/corpus/dataset.hpp"
#include "stylemix/error.hpp"
#include "stylemix/io/json_io.hpp"
#include "stylemix/lm/inference.hpp"
#include "stylemix/lm/model.hpp"
#include "stylemix/lm/training.hpp"
#include "stylemix/mixing/mixing.hpp"
#include "stylemix/optim/es.hpp"
#include "stylemix/optim/grpo.hpp"

namespace stylemix::experiment {

using io::json;

enum class Method { es, grpo };

inline std::string_view to_string(Method m) {
    return m == Method::es ? "es" : "grpo";
}

inline Method method_from_string(std::string_view s) {
    if (s == "es") {
        return Method::es;
    }
    if (s == "grpo") {
        return Method::grpo;
    }
    throw ConfigError("unknown method: " + std::string(s));
}

struct RunConfig {
    corpus::CorpusSpec corpus;
    lm::ModelConfig model;
    lm::TrainConfig base_train;
    lm::SftConfig sft;
    int base_aux_styles = 16;
    int k = 2;
    mixing::Granularity granularity = mixing::Granularity::layer;
    Method method = Method::grpo;
    optim::EsConfig es;
    optim::GrpoConfig grpo;
    bool es_match_grpo_tokens = true; // ES token budget = GRPO's nominal budget
    lm::GenerationConfig rewrite{.temperature = 1.0, .top_p = 0.95, .max_len = 80, .greedy = false};
    std::vector<std::uint64_t> seeds{41, 42, 43};
    std::filesystem::path out = "stylemix-run";
    unsigned threads = 0; // 0 = hardware concurrency; never affects results
    bool timings = false;

    void validate() const {
        corpus.validate();
        model.validate();
        base_train.validate();
        sft.train.validate();
        es.validate();
        grpo.validate();
        if (k < 1 || k > corpus.n_high_resource) {
            throw ConfigError("k must lie in [1, " + std::to_string(corpus.n_high_resource) + "]");
        }
        if (seeds.empty()) {
            throw ConfigError("at least one seed is required");
        }
        if (rewrite.max_len < 1) {
            throw ConfigError("rewrite.max_len must be >= 1");
        }
    }

    unsigned thread_count() const { return threads == 0 ? core::default_thread_count() : threads; }
};

inline json to_json(const optim::EsConfig& c) {
    return {{"steps", c.steps},
            {"bounds", {c.lower, c.upper}},
            {"init", c.init},
            {"lambda_l1", c.lambda_l1},
            {"population", c.population},
            {"diff_weight", c.diff_weight},
            {"crossover", c.crossover},
            {"top_p", c.top_p},
            {"temperature", c.temperature},
            {"batch_size", c.batch_size},
            {"max_generated_tokens", c.max_generated_tokens}};
}

inline optim::EsConfig es_config_from_json(const json& j) {
    optim::EsConfig c;
    c.steps = j.value("steps", c.steps);
    if (j.contains("bounds")) {
        const auto b = j.at("bounds").get<std::vector<double>>();
        if (b.size() != 2) {
            throw ConfigError("es.bounds must have two entries");
        }
        c.lower = b[0];
        c.upper = b[1];
    }
    c.init = j.value("init", c.init);
    c.lambda_l1 = j.value("lambda_l1", c.lambda_l1);
    c.population = j.value("population", c.population);
    c.diff_weight = j.value("diff_weight", c.diff_weight);
    c.crossover = j.value("crossover", c.crossover);
    c.top_p = j.value("top_p", c.top_p);
    c.temperature = j.value("temperature", c.temperature);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.max_generated_tokens = j.value("max_generated_tokens", c.max_generated_tokens);
    return c;
}

inline json to_json(const optim::GrpoConfig& c) {
    return {{"lr", c.lr},
            {"steps", c.steps},
            {"group_size", c.group_size},
            {"init", c.init},
            {"beta_kl", c.beta_kl},
            {"bounds", {c.lower, c.upper}},
            {"top_p", c.top_p},
            {"temperature", c.temperature},
            {"eps_std", c.eps_std},
            {"length_normalize", c.length_normalize}};
}

inline optim::GrpoConfig grpo_config_from_json(const json& j) {
    optim::GrpoConfig c;
    c.lr = j.value("lr", c.lr);
    c.steps = j.value("steps", c.steps);
    c.group_size = j.value("group_size", c.group_size);
    c.init = j.value("init", c.init);
    c.beta_kl = j.value("beta_kl", c.beta_kl);
    if (j.contains("bounds")) {
        const auto b = j.at("bounds").get<std::vector<double>>();
        if (b.size() != 2) {
            throw ConfigError("grpo.bounds must have two entries");
        }
        c.lower = b[0];
        c.upper = b[1];
    }
    c.top_p = j.value("top_p", c.top_p);
    c.temperature = j.value("temperature", c.temperature);
    c.eps_std = j.value("eps_std", c.eps_std);
    c.length_normalize = j.value("length_normalize", c.length_normalize);
    return c;
}

inline json generation_to_json(const lm::GenerationConfig& g) {
    return {{"temperature", g.temperature}, {"top_p", g.top_p}, {"max_len", g.max_len}, {"greedy", g.greedy}};
}

inline lm::GenerationConfig generation_from_json(const json& j, lm::GenerationConfig g) {
    g.temperature = j.value("temperature", g.temperature);
    g.top_p = j.value("top_p", g.top_p);
    g.max_len = j.value("max_len", g.max_len);
    g.greedy = j.value("greedy", g.greedy);
    return g;
}

/// Everything that can change results. Output directory, threads and
/// timing flags are left out so they never perturb hashes.
inline json to_json(const RunConfig& c) {
    return {{"corpus", io::to_json(c.corpus)},
            {"model", io::to_json(c.model)},
            {"base_train", io::to_json(c.base_train)},
            {"base_aux_styles", c.base_aux_styles},
            {"sft", io::to_json(c.sft)},
            {"k", c.k},
            {"granularity", std::string(mixing::to_string(c.granularity))},
            {"method", std::string(to_string(c.method))},
            {"es", to_json(c.es)},
            {"grpo", to_json(c.grpo)},
            {"es_match_grpo_tokens", c.es_match_grpo_tokens},
            {"rewrite", generation_to_json(c.rewrite)},
            {"seeds", c.seeds}};
}

/// Unknown top-level keys are rejected so typos do not pass silently.
inline RunConfig run_config_from_json(const json& j) {
    static const std::vector<std::string> known = {
        "corpus", "model", "base_train", "base_aux_styles", "sft", "k", "granularity", "method", "es", "grpo",
        "es_match_grpo_tokens", "rewrite", "seeds", "out", "threads", "timings"};
    if (!j.is_object()) {
        throw ConfigError("config must be a JSON object");
    }
    for (const auto& [key, _] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw ConfigError("unknown config key: " + key);
        }
    }
    RunConfig c;
    try {
        if (j.contains("corpus")) {
            c.corpus = io::corpus_spec_from_json(j.at("corpus"));
        }
        if (j.contains("model")) {
            c.model = io::model_config_from_json(j.at("model"));
        }
        if (j.contains("base_train")) {
            c.base_train = io::train_config_from_json(j.at("base_train"), c.base_train);
        }
        c.base_aux_styles = j.value("base_aux_styles", c.base_aux_styles);
        if (j.contains("sft")) {
            c.sft = io::sft_config_from_json(j.at("sft"));
        }
        c.k = j.value("k", c.k);
        if (j.contains("granularity")) {
            c.granularity = mixing::granularity_from_string(j.at("granularity").get<std::string>());
        }
        if (j.contains("method")) {
            c.method = method_from_string(j.at("method").get<std::string>());
        }
        if (j.contains("es")) {
            c.es = es_config_from_json(j.at("es"));
        }
        if (j.contains("grpo")) {
            c.grpo = grpo_config_from_json(j.at("grpo"));
        }
        c.es_match_grpo_tokens = j.value("es_match_grpo_tokens", c.es_match_grpo_tokens);
        if (j.contains("rewrite")) {
            c.rewrite = generation_from_json(j.at("rewrite"), c.rewrite);
        }
        if (j.contains("seeds")) {
            c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        }
        if (j.contains("out")) {
            c.out = j.at("out").get<std::string>();
        }
        c.threads = j.value("threads", c.threads);
        c.timings = j.value("timings", c.timings);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config: ") + e.what());
    }
    c.validate();
    return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
    return run_config_from_json(io::parse_json(io::read_file(path), path.string()));
}

// Stage keys: each hashes exactly the inputs of one stage and its upstream.

inline json corpus_key(const RunConfig& c) {
    return {{"corpus", io::to_json(c.corpus)}};
}

inline json base_key(const RunConfig& c) {
    json j = corpus_key(c);
    j["model"] = io::to_json(c.model);
    j["base_train"] = io::to_json(c.base_train);
    j["base_aux_styles"] = c.base_aux_styles;
    return j;
}

inline json adapters_key(const RunConfig& c) {
    json j = base_key(c);
    j["sft"] = io::to_json(c.sft);
    return j;
}

inline json optimize_key(const RunConfig& c, Method m, mixing::Granularity g, int k) {
    json j = adapters_key(c);
    j["method"] = std::string(to_string(m));
    j["granularity"] = std::string(mixing::to_string(g));
    j["k"] = k;
    if (m == Method::es) {
        j["es"] = to_json(c.es);
        j["es_match_grpo_tokens"] = c.es_match_grpo_tokens;
        if (c.es_match_grpo_tokens) {
            j["grpo"] = to_json(c.grpo);
        }
    } else {
        j["grpo"] = to_json(c.grpo);
    }
    return j;
}

inline json rewrite_key(const RunConfig& c, Method m, mixing::Granularity g, int k) {
    json j = optimize_key(c, m, g, k);
    j["rewrite"] = generation_to_json(c.rewrite);
    return j;
}

} // namespace stylemix::experiment
