#pragma once

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "stylemix/core/parallel.hpp"
#include "stylemix/core/rng.hpp"
#include "stylemix/experiment/config.hpp"
#include "stylemix/experiment/report.hpp"
#include "stylemix/experiment/store.hpp"
#include "stylemix/io/csv.hpp"
#include "stylemix/io/json_io.hpp"
#include "stylemix/lm/inference.hpp"
#include "stylemix/metrics/scores.hpp"
#include "stylemix/metrics/style_embedding.hpp"
#include "stylemix/mixing/mixing.hpp"
#include "stylemix/optim/es.hpp"
#include "stylemix/optim/grpo.hpp"
#include "stylemix/optim/reward.hpp"
#include "stylemix/selection/selection.hpp"

namespace stylemix::experiment {

/// Upstream artifacts shared by every run in one workspace.
struct Prepared {
    corpus::Dataset dataset;
    lm::BaseModel base;
    std::vector<AdapterRecord> adapters;
    selection::AdapterLibrary library;
    std::map<std::string, selection::Ranking> rankings; // per target id
};

inline json ranking_to_json(const selection::Ranking& r) {
    json a = json::array();
    for (const auto& [id, cos] : r) {
        a.push_back({{"author_id", id}, {"cosine", cos}});
    }
    return a;
}

inline selection::Ranking ranking_from_json(const json& j) {
    selection::Ranking r;
    for (const auto& e : j) {
        r.emplace_back(e.at("author_id").get<std::string>(), e.at("cosine").get<double>());
    }
    return r;
}

/// UTC wall-clock time; only written when timings are requested.
inline std::string now_iso8601() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline Prepared prepare(const RunConfig& cfg, const Workspace& ws) {
    Prepared p;
    p.dataset = ensure_dataset(cfg, ws);
    p.base = ensure_base(cfg, ws, p.dataset);
    p.adapters = ensure_adapters(cfg, ws, p.dataset, p.base);
    const auto adapters = adapters_of(p.adapters);
    p.library = selection::build_library(p.dataset, adapters);
    json key = adapters_key(cfg);
    key["k"] = cfg.k;
    const std::string hash = io::config_hash(key);
    for (const auto& t : p.dataset.targets) {
        const auto& id = t.profile.author_id;
        std::vector<std::string> texts;
        for (const auto& x : t.texts) {
            texts.push_back(x.text);
        }
        auto ranking = selection::rank_adapters(metrics::prototype_embed(texts), p.library);
        const auto path = ws.selection_file(id);
        if (!cached(path, "selection", hash)) {
            const selection::Ranking top(ranking.begin(), ranking.begin() + cfg.k);
            json payload{{"target_id", id},
                         {"k", cfg.k},
                         {"selected", ranking_to_json(top)},
                         {"ranking", ranking_to_json(ranking)},
                         {"prototype_sample_size", selection::kPrototypeSampleSize}};
            if (cfg.timings) {
                payload["timestamp"] = now_iso8601();
            }
            io::write_artifact(path, {"selection", hash, cfg.corpus.seed}, std::move(payload));
        }
        p.rankings.emplace(id, std::move(ranking));
    }
    return p;
}

inline const corpus::TargetAuthor& find_target(const corpus::Dataset& ds, const std::string& id) {
    for (const auto& t : ds.targets) {
        if (t.profile.author_id == id) {
            return t;
        }
    }
    throw ConfigError("unknown target author: " + id);
}

/// Top-k adapters for a target, in ranking order.
inline std::vector<lm::AuthorAdapter> selected_adapters(const Prepared& p, const std::string& target, int k) {
    return selection::select_top_k(p.library, p.rankings.at(target), k).adapters();
}

/// Source training texts interleaved by author (a0/0, a1/0, ..., a0/1, ...),
/// so any window of consecutive GRPO steps covers every source author evenly.
inline std::vector<corpus::TextItem> interleaved_source_train(const corpus::Dataset& ds) {
    std::vector<corpus::TextItem> train;
    std::size_t longest = 0;
    for (const auto& s : ds.sources) {
        longest = std::max(longest, s.train.size());
    }
    for (std::size_t i = 0; i < longest; ++i) {
        for (const auto& s : ds.sources) {
            if (i < s.train.size()) {
                train.push_back(s.train[i]);
            }
        }
    }
    return train;
}

inline optim::RewardContext reward_context(const RunConfig& cfg, const Prepared& p, const std::string& target, int k) {
    const auto& t = find_target(p.dataset, target);
    std::vector<std::string> texts;
    for (const auto& x : t.texts) {
        texts.push_back(x.text);
    }
    const auto train = interleaved_source_train(p.dataset);
    auto ctx = optim::RewardContext::make(p.base, selected_adapters(p, target, k), std::move(texts), train);
    ctx.threads = cfg.thread_count();
    return ctx;
}

/// ES token budget equal to GRPO's nominal one: steps * G * (mean source length + 1).
inline std::size_t grpo_token_budget(const RunConfig& cfg, const optim::RewardContext& ctx) {
    double len = 0.0;
    for (const auto& s : ctx.sources) {
        len += static_cast<double>(ctx.tok->encode(s.text).size()) + 1.0;
    }
    len /= static_cast<double>(ctx.sources.size());
    return static_cast<std::size_t>(std::llround(static_cast<double>(cfg.grpo.steps) *
                                                  static_cast<double>(cfg.grpo.group_size) * len));
}

struct WeightsRecord {
    std::string target;
    Method method = Method::grpo;
    mixing::Granularity granularity = mixing::Granularity::layer;
    int k = 0;
    std::uint64_t seed = 0;
    mixing::MixWeights weights;
    std::size_t generated_tokens = 0;
    std::vector<std::string> optimizer_text_ids;
    std::vector<optim::TracePoint> trace;
    double seconds = std::numeric_limits<double>::quiet_NaN(); // set only with timings
};

inline json to_json(const WeightsRecord& r) {
    std::vector<double> steps, values, l1, wall;
    for (const auto& t : r.trace) {
        steps.push_back(t.step);
        values.push_back(t.value);
        l1.push_back(t.l1_norm);
        wall.push_back(t.wallclock_ms);
    }
    json j{{"target", r.target},
           {"method", std::string(to_string(r.method))},
           {"granularity", std::string(mixing::to_string(r.granularity))},
           {"k", r.k},
           {"seed", r.seed},
           {"weights", io::to_json(r.weights)},
           {"generated_tokens", r.generated_tokens},
           {"optimizer_text_ids", r.optimizer_text_ids},
           {"trace", {{"step", io::vector_to_json(steps)},
                      {"value", io::vector_to_json(values)},
                      {"l1_norm", io::vector_to_json(l1)},
                      {"wallclock_ms", io::vector_to_json(wall)}}}};
    return j;
}

inline WeightsRecord weights_record_from_json(const json& j) {
    WeightsRecord r;
    r.target = j.at("target").get<std::string>();
    r.method = method_from_string(j.at("method").get<std::string>());
    r.granularity = mixing::granularity_from_string(j.at("granularity").get<std::string>());
    r.k = j.at("k").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.weights = io::mix_weights_from_json(j.at("weights"));
    r.generated_tokens = j.at("generated_tokens").get<std::size_t>();
    r.optimizer_text_ids = j.at("optimizer_text_ids").get<std::vector<std::string>>();
    const json& t = j.at("trace");
    const auto steps = io::vector_from_json(t.at("step"));
    const auto values = io::vector_from_json(t.at("value"));
    const auto l1 = io::vector_from_json(t.at("l1_norm"));
    const auto wall = io::vector_from_json(t.at("wallclock_ms"));
    if (values.size() != steps.size() || l1.size() != steps.size() || wall.size() != steps.size()) {
        throw FormatError("weights trace columns differ in length");
    }
    for (std::size_t i = 0; i < steps.size(); ++i) {
        r.trace.push_back({static_cast<int>(steps[i]), values[i], l1[i], wall[i]});
    }
    return r;
}

inline WeightsRecord load_weights(const fs::path& path) {
    return weights_record_from_json(io::read_artifact(path, "mix_weights").at("payload"));
}

inline json seeded(json key, std::uint64_t seed) {
    key["seed"] = seed;
    return key;
}

/// Learns W for one target, reusing a matching weights file when present.
inline WeightsRecord ensure_weights(const RunConfig& cfg, const Workspace& ws, const Prepared& p,
                                    const std::string& target, Method m, mixing::Granularity g, int k,
                                    std::uint64_t seed) {
    const fs::path dir = ws.run_dir(m, g, k, seed);
    const fs::path path = dir / "weights" / (target + ".json");
    const std::string hash = io::config_hash(seeded(optimize_key(cfg, m, g, k), seed));
    if (cached(path, "mix_weights", hash)) {
        return load_weights(path);
    }
    log("learning weights: " + std::string(to_string(m)) + " " + std::string(mixing::to_string(g)) + " k=" +
        std::to_string(k) + " seed=" + std::to_string(seed) + " target=" + target);
    const auto ctx = reward_context(cfg, p, target, k);
    WeightsRecord rec;
    rec.target = target;
    rec.method = m;
    rec.granularity = g;
    rec.k = k;
    rec.seed = seed;
    for (const auto& s : ctx.sources) {
        rec.optimizer_text_ids.push_back(s.id);
    }
    for (const auto& x : find_target(p.dataset, target).texts) {
        rec.optimizer_text_ids.push_back(x.id);
    }
    const auto start = std::chrono::steady_clock::now();
    optim::OptimizeResult res;
    if (m == Method::es) {
        optim::EsConfig ec = cfg.es;
        ec.seed = seed;
        ec.granularity = g;
        ec.timings = cfg.timings;
        if (cfg.es_match_grpo_tokens) {
            ec.max_generated_tokens = grpo_token_budget(cfg, ctx);
        }
        res = optim::es_optimize(ctx, ec);
    } else {
        optim::GrpoConfig gc = cfg.grpo;
        gc.seed = seed;
        gc.granularity = g;
        gc.timings = cfg.timings;
        res = optim::grpo_optimize(ctx, gc);
    }
    if (cfg.timings) {
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    rec.weights = std::move(res.weights);
    rec.trace = std::move(res.trace);
    rec.generated_tokens = res.generated_tokens;

    io::CsvWriter csv({"step", "objective_or_mean_reward", "l1_norm", "wallclock_ms", "artifact_version", "config_hash", "seed"});
    for (const auto& t : rec.trace) {
        csv.row({std::to_string(t.step), io::fmt(t.value), io::fmt(t.l1_norm), io::fmt(t.wallclock_ms),
                 std::to_string(io::kArtifactVersion), hash, std::to_string(seed)});
    }
    io::write_file(dir / "traces" / (target + ".csv"), csv.str());
    io::write_artifact(path, {"mix_weights", hash, seed}, to_json(rec));
    return rec;
}

/// Rewrites every source test text with the merged model of one target.
inline std::vector<InstanceRow> rewrite_for_target(const RunConfig& cfg, const Prepared& p, const WeightsRecord& w) {
    const auto adapters = selected_adapters(p, w.target, w.k);
    const lm::ModelParams params =
        mixing::merged_params(p.base, mixing::ExpandedLibrary::from(adapters).mix(w.weights));
    const auto& tok = lm::Tokenizer::standard();
    std::vector<InstanceRow> rows;
    for (const auto& s : p.dataset.sources) {
        for (const auto& item : s.test) {
            rows.push_back({w.target, s.profile.author_id, item.id, item.text, {}, {}});
        }
    }
    const core::SeededRng master(w.seed);
    core::parallel_for(rows.size(), cfg.thread_count(), [&](std::size_t i, unsigned) {
        auto rng = master.derive("rewrite/" + w.target + "/" + rows[i].source_id);
        const auto prompt = tok.paraphrase_prompt(rows[i].source_text);
        rows[i].rewrite = tok.decode(lm::generate_tokens(p.base.config, params, prompt, cfg.rewrite, &rng));
    });
    return rows;
}

/// Scores rows in place. Rows whose source style coincides with the target
/// prototype have no defined toward score and are dropped with a warning.
inline std::vector<InstanceRow> score_rows(const RunConfig& cfg, const Prepared& p, std::vector<InstanceRow> rows) {
    std::map<std::string, metrics::StyleEmbedding> e_t;
    for (const auto& t : p.dataset.targets) {
        std::vector<std::string> texts;
        for (const auto& x : t.texts) {
            texts.push_back(x.text);
        }
        e_t[t.profile.author_id] = metrics::prototype_embed(texts);
    }
    std::vector<char> ok(rows.size(), 1);
    core::parallel_for(rows.size(), cfg.thread_count(), [&](std::size_t i, unsigned) {
        try {
            rows[i].scores = metrics::score_rewrite(e_t.at(rows[i].target), rows[i].source_text, rows[i].rewrite, &p.base);
        } catch (const DomainError&) {
            ok[i] = 0;
        }
    });
    std::vector<InstanceRow> kept;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (ok[i] != 0) {
            kept.push_back(std::move(rows[i]));
        } else {
            log("warning: dropping " + rows[i].source_id + " for " + rows[i].target +
                ": source style equals the target prototype");
        }
    }
    return kept;
}

struct RunOutcome {
    GridReport report;
    std::vector<WeightsRecord> weights; // one per target
    std::string config_hash;
};

/// Rewrites file of one run (unscored rows).
inline json rows_to_json(const std::vector<InstanceRow>& rows) {
    json a = json::array();
    for (const auto& r : rows) {
        a.push_back({{"target", r.target},
                     {"source_author", r.source_author},
                     {"source_id", r.source_id},
                     {"source_text", r.source_text},
                     {"rewrite", r.rewrite}});
    }
    return a;
}

inline std::vector<InstanceRow> rows_from_json(const json& j) {
    std::vector<InstanceRow> out;
    for (const auto& r : j) {
        out.push_back({r.at("target").get<std::string>(), r.at("source_author").get<std::string>(),
                       r.at("source_id").get<std::string>(), r.at("source_text").get<std::string>(),
                       r.at("rewrite").get<std::string>(), {}});
    }
    return out;
}

/// Learned weights for every target of one run configuration.
inline std::vector<WeightsRecord> optimize_all(const RunConfig& cfg, const Workspace& ws, const Prepared& p, Method m,
                                               mixing::Granularity g, int k, std::uint64_t seed) {
    std::vector<WeightsRecord> out;
    for (const auto& t : p.dataset.targets) {
        out.push_back(ensure_weights(cfg, ws, p, t.profile.author_id, m, g, k, seed));
    }
    return out;
}

/// Rewrites of every source test text for every target; cached in rewrites.json.
inline std::vector<InstanceRow> ensure_rewrites(const RunConfig& cfg, const Workspace& ws, const Prepared& p,
                                                const std::vector<WeightsRecord>& weights, Method m,
                                                mixing::Granularity g, int k, std::uint64_t seed) {
    const fs::path path = ws.run_dir(m, g, k, seed) / "rewrites.json";
    const std::string hash = io::config_hash(seeded(rewrite_key(cfg, m, g, k), seed));
    if (cached(path, "rewrites", hash)) {
        return rows_from_json(io::read_artifact(path, "rewrites").at("payload").at("rows"));
    }
    std::vector<InstanceRow> rows;
    for (const auto& w : weights) {
        auto r = rewrite_for_target(cfg, p, w);
        rows.insert(rows.end(), std::make_move_iterator(r.begin()), std::make_move_iterator(r.end()));
    }
    io::write_artifact(path, {"rewrites", hash, seed}, {{"rows", rows_to_json(rows)}});
    return rows;
}

/// Scores rewrites, checks hygiene and writes report.json, grid.csv and instances.csv.
inline GridReport evaluate_run(const RunConfig& cfg, const Workspace& ws, const Prepared& p,
                               const std::vector<WeightsRecord>& weights, std::vector<InstanceRow> rows, Method m,
                               mixing::Granularity g, int k, std::uint64_t seed) {
    const fs::path dir = ws.run_dir(m, g, k, seed);
    const std::string hash = io::config_hash(seeded(rewrite_key(cfg, m, g, k), seed));
    GridReport report;
    report.method = m;
    report.granularity = g;
    report.k = k;
    report.seed = seed;
    report.rows = score_rows(cfg, p, std::move(rows));
    report.recompute();
    for (const auto& w : weights) {
        GridReport own;
        for (const auto& r : report.rows) {
            if (r.target == w.target) {
                own.rows.push_back(r);
            }
        }
        check_hygiene({w.optimizer_text_ids.begin(), w.optimizer_text_ids.end()}, own);
    }
    io::write_artifact(dir / "report.json", {"grid_report", hash, seed}, to_json(report));
    io::write_file(dir / "grid.csv", grid_csv(report, hash));
    io::write_file(dir / "instances.csv", instances_csv(report, hash));
    return report;
}

inline GridReport load_report(const fs::path& path) {
    return grid_report_from_json(io::read_artifact(path, "grid_report").at("payload"));
}

/// Select, learn W, rewrite and evaluate for one (method, granularity, k, seed).
inline RunOutcome run_pipeline(const RunConfig& cfg, const Workspace& ws, const Prepared& p, Method m,
                               mixing::Granularity g, int k, std::uint64_t seed) {
    RunOutcome out;
    out.config_hash = io::config_hash(seeded(rewrite_key(cfg, m, g, k), seed));
    const fs::path report_path = ws.run_dir(m, g, k, seed) / "report.json";
    out.weights = optimize_all(cfg, ws, p, m, g, k, seed);
    if (cached(report_path, "grid_report", out.config_hash)) {
        out.report = load_report(report_path);
        return out;
    }
    auto rows = ensure_rewrites(cfg, ws, p, out.weights, m, g, k, seed);
    out.report = evaluate_run(cfg, ws, p, out.weights, std::move(rows), m, g, k, seed);
    if (cfg.timings) {
        json t = json::object();
        for (const auto& w : out.weights) {
            t[w.target] = w.seconds;
        }
        io::write_file(ws.run_dir(m, g, k, seed) / "timings.json", io::dump({{"optimize_seconds", t}}));
    }
    return out;
}

// ---- k sweep ----

struct SweepRow {
    Method method = Method::grpo;
    mixing::Granularity granularity = mixing::Granularity::layer;
    int k = 0;
    double joint = 0.0; // median over seeds of the mean per-instance joint
    double toward = 0.0;
    double meaning = 0.0;
    double wallclock_s = std::numeric_limits<double>::quiet_NaN();
    std::vector<GridReport> reports; // one per seed
};

inline std::vector<SweepRow> k_sweep(const RunConfig& cfg, const Workspace& ws, const Prepared& p,
                                     const std::vector<Method>& methods,
                                     const std::vector<mixing::Granularity>& grans, const std::vector<int>& ks) {
    std::vector<SweepRow> rows;
    for (Method m : methods) {
        for (mixing::Granularity g : grans) {
            for (int k : ks) {
                SweepRow row{m, g, k, 0.0, 0.0, 0.0, std::numeric_limits<double>::quiet_NaN(), {}};
                std::vector<double> j, t, mn;
                double secs = 0.0;
                for (std::uint64_t seed : cfg.seeds) {
                    auto out = run_pipeline(cfg, ws, p, m, g, k, seed);
                    j.push_back(out.report.overall.joint);
                    t.push_back(out.report.overall.toward);
                    mn.push_back(out.report.overall.meaning);
                    for (const auto& w : out.weights) {
                        secs += w.seconds;
                    }
                    row.reports.push_back(std::move(out.report));
                }
                row.joint = median(j);
                row.toward = median(t);
                row.meaning = median(mn);
                if (cfg.timings) {
                    row.wallclock_s = secs;
                }
                rows.push_back(std::move(row));
            }
        }
    }
    return rows;
}

inline std::string sweep_csv(const RunConfig& cfg, const std::vector<SweepRow>& rows) {
    std::string seeds;
    for (std::uint64_t s : cfg.seeds) {
        seeds += (seeds.empty() ? "" : ";") + std::to_string(s);
    }
    io::CsvWriter csv({"method", "granularity", "k", "joint", "toward", "meaning", "wallclock_s", "artifact_version",
                       "config_hash", "seed"});
    for (const auto& r : rows) {
        csv.row({std::string(to_string(r.method)), std::string(mixing::to_string(r.granularity)), std::to_string(r.k),
                 io::fmt(r.joint), io::fmt(r.toward), io::fmt(r.meaning), io::fmt(r.wallclock_s),
                 std::to_string(io::kArtifactVersion),
                 io::config_hash(rewrite_key(cfg, r.method, r.granularity, r.k)), seeds});
    }
    return csv.str();
}

// ---- layer heatmap ----

struct LayerStat {
    std::size_t layer = 0;
    double mean = 0.0;
    double std = 0.0;
};

struct HeatmapSummary {
    std::vector<LayerStat> layers;
    double max_abs_mean = 0.0;
    double median_abs_mean = 0.0;
    double layer_variance = 0.0; // population variance of the per-layer means
    bool structured = false;     // some |mean| exceeds twice the median |mean|
};

/// Per-layer mean and population std of all weights across files and adapters.
inline HeatmapSummary layer_summary(const std::vector<WeightsRecord>& records) {
    if (records.empty()) {
        throw ConfigError("heatmap needs at least one weights file");
    }
    const std::size_t L = records.front().weights.layers();
    HeatmapSummary s;
    std::vector<double> abs_means;
    for (std::size_t j = 0; j < L; ++j) {
        double sum = 0.0;
        double sq = 0.0;
        std::size_t n = 0;
        for (const auto& r : records) {
            if (r.weights.layers() != L) {
                throw ConfigError("heatmap inputs differ in layer count");
            }
            for (std::size_t i = 0; i < r.weights.n(); ++i) {
                sum += r.weights.w(i, j);
                ++n;
            }
        }
        const double mean = sum / static_cast<double>(n);
        for (const auto& r : records) {
            for (std::size_t i = 0; i < r.weights.n(); ++i) {
                sq += (r.weights.w(i, j) - mean) * (r.weights.w(i, j) - mean);
            }
        }
        s.layers.push_back({j, mean, std::sqrt(sq / static_cast<double>(n))});
        abs_means.push_back(std::abs(mean));
    }
    s.max_abs_mean = *std::max_element(abs_means.begin(), abs_means.end());
    s.median_abs_mean = median(abs_means);
    s.structured = s.max_abs_mean > 2.0 * s.median_abs_mean;
    double mu = 0.0;
    for (const auto& l : s.layers) {
        mu += l.mean;
    }
    mu /= static_cast<double>(L);
    for (const auto& l : s.layers) {
        s.layer_variance += (l.mean - mu) * (l.mean - mu);
    }
    s.layer_variance /= static_cast<double>(L);
    return s;
}

/// Writes heatmap.csv, heatmap_layers.csv and heatmap_summary.json into `dir`.
inline HeatmapSummary write_heatmap(const std::vector<WeightsRecord>& records, const fs::path& dir,
                                    const std::string& hash, std::uint64_t seed) {
    for (const auto& r : records) {
        if (r.granularity == mixing::Granularity::adapter) {
            log("warning: " + r.target + " has adapter-wise weights; its heatmap rows are constant");
        }
    }
    const HeatmapSummary s = layer_summary(records);
    io::CsvWriter cells({"target", "layer", "adapter_id", "weight", "artifact_version", "config_hash", "seed"});
    for (const auto& r : records) {
        for (std::size_t j = 0; j < r.weights.layers(); ++j) {
            for (std::size_t i = 0; i < r.weights.n(); ++i) {
                cells.row({r.target, std::to_string(j), r.weights.adapter_ids[i], io::fmt(r.weights.w(i, j)),
                           std::to_string(io::kArtifactVersion), hash, std::to_string(r.seed)});
            }
        }
    }
    io::CsvWriter agg({"layer", "mean", "std", "artifact_version", "config_hash", "seed"});
    for (const auto& l : s.layers) {
        agg.row({std::to_string(l.layer), io::fmt(l.mean), io::fmt(l.std), std::to_string(io::kArtifactVersion), hash,
                 std::to_string(seed)});
    }
    io::write_file(dir / "heatmap.csv", cells.str());
    io::write_file(dir / "heatmap_layers.csv", agg.str());
    io::write_artifact(dir / "heatmap_summary.json", {"heatmap_summary", hash, seed},
                       {{"max_abs_mean", s.max_abs_mean},
                        {"median_abs_mean", s.median_abs_mean},
                        {"layer_variance", s.layer_variance},
                        {"structured", s.structured},
                        {"files", records.size()}});
    return s;
}

} // namespace stylemix::experiment
