#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stylemix/stylemix.hpp"

namespace fs = std::filesystem;
using namespace stylemix;
using experiment::Method;
using mixing::Granularity;

namespace {

struct Options {
    std::string config;
    std::vector<std::uint64_t> seeds;
    int k = 0;
    std::string method;
    std::string granularity;
    std::string out;
    bool timings = false;
    unsigned threads = 0;
    std::string ks = "1,2,3";
    std::vector<std::string> files;
};

experiment::RunConfig resolve(const Options& o) {
    experiment::RunConfig cfg = o.config.empty() ? experiment::RunConfig{} : experiment::load_run_config(o.config);
    if (!o.seeds.empty()) {
        cfg.seeds = o.seeds;
    }
    if (o.k > 0) {
        cfg.k = o.k;
    }
    if (!o.method.empty()) {
        cfg.method = experiment::method_from_string(o.method);
    }
    if (!o.granularity.empty()) {
        cfg.granularity = mixing::granularity_from_string(o.granularity);
    }
    if (!o.out.empty()) {
        cfg.out = o.out;
    }
    if (o.threads > 0) {
        cfg.threads = o.threads;
    }
    cfg.timings = cfg.timings || o.timings;
    cfg.validate();
    return cfg;
}

std::vector<int> parse_ks(const std::string& s) {
    std::vector<int> ks;
    const auto dash = s.find("..");
    if (dash != std::string::npos) {
        const int lo = std::stoi(s.substr(0, dash));
        const int hi = std::stoi(s.substr(dash + 2));
        for (int k = lo; k <= hi; ++k) {
            ks.push_back(k);
        }
    } else {
        std::stringstream ss(s);
        std::string part;
        while (std::getline(ss, part, ',')) {
            ks.push_back(std::stoi(part));
        }
    }
    if (ks.empty()) {
        throw ConfigError("empty k range: " + s);
    }
    return ks;
}

void print_aggregate(const std::string& label, const experiment::Aggregate& a) {
    std::printf("%-12s n=%-4zu toward=%.4f away=%.4f meaning=%.4f joint=%.4f joint_of_means=%.4f fluency=%.4f\n",
                label.c_str(), a.n, a.toward, a.away, a.meaning, a.joint, a.joint_of_means, a.fluency);
}

void print_report(const experiment::GridReport& r) {
    std::printf("%s %s k=%d seed=%llu\n", std::string(experiment::to_string(r.method)).c_str(),
                std::string(mixing::to_string(r.granularity)).c_str(), r.k, static_cast<unsigned long long>(r.seed));
    for (const auto& [t, a] : r.per_target) {
        print_aggregate(t, a);
    }
    print_aggregate("overall", r.overall);
}

int run(const std::string& cmd, const Options& o) {
    const auto cfg = resolve(o);
    const experiment::Workspace ws{cfg.out};
    const fs::path failed = ws.root / "failed.json";
    std::error_code ec;
    fs::remove(failed, ec);
    try {
        if (cmd == "gen-corpus") {
            const auto ds = experiment::ensure_dataset(cfg, ws);
            std::printf("dataset: %zu library, %zu target, %zu source authors in %s\n", ds.library.size(),
                        ds.targets.size(), ds.sources.size(), ws.dataset_dir().c_str());
            return 0;
        }
        if (cmd == "train-base") {
            const auto ds = experiment::ensure_dataset(cfg, ws);
            const auto base = experiment::ensure_base(cfg, ws, ds);
            const auto doc = io::read_artifact(ws.base_file(), "base_model");
            std::printf("base %s held-out cross-entropy %.4f\n", base.hash().c_str(),
                        doc.at("payload").at("heldout_cross_entropy").get<double>());
            return 0;
        }
        if (cmd == "train-adapters") {
            const auto ds = experiment::ensure_dataset(cfg, ws);
            const auto base = experiment::ensure_base(cfg, ws, ds);
            for (const auto& r : experiment::ensure_adapters(cfg, ws, ds, base)) {
                std::printf("%s held-out loss base=%.4f adapter=%.4f\n", r.adapter.author_id.c_str(),
                            r.heldout_loss_base, r.heldout_loss_adapter);
            }
            return 0;
        }
        const auto p = experiment::prepare(cfg, ws);
        if (cmd == "select") {
            for (const auto& [t, ranking] : p.rankings) {
                std::printf("%s:", t.c_str());
                for (std::size_t i = 0; i < ranking.size(); ++i) {
                    std::printf(" %s%s(%.3f)", i < static_cast<std::size_t>(cfg.k) ? "*" : "", ranking[i].first.c_str(),
                                ranking[i].second);
                }
                std::printf("\n");
            }
            return 0;
        }
        if (cmd == "optimize" || cmd == "rewrite" || cmd == "evaluate" || cmd == "pipeline") {
            for (std::uint64_t seed : cfg.seeds) {
                const auto weights = experiment::optimize_all(cfg, ws, p, cfg.method, cfg.granularity, cfg.k, seed);
                if (cmd == "optimize") {
                    for (const auto& w : weights) {
                        std::printf("%s seed=%llu |W|_1=%.4f final=%.4f tokens=%zu\n", w.target.c_str(),
                                    static_cast<unsigned long long>(seed), w.weights.l1_norm(),
                                    w.trace.empty() ? 0.0 : w.trace.back().value, w.generated_tokens);
                    }
                    continue;
                }
                auto rows = experiment::ensure_rewrites(cfg, ws, p, weights, cfg.method, cfg.granularity, cfg.k, seed);
                if (cmd == "rewrite") {
                    std::printf("seed=%llu: %zu rewrites in %s\n", static_cast<unsigned long long>(seed), rows.size(),
                                ws.run_dir(cfg.method, cfg.granularity, cfg.k, seed).c_str());
                    continue;
                }
                const auto report = experiment::evaluate_run(cfg, ws, p, weights, std::move(rows), cfg.method,
                                                             cfg.granularity, cfg.k, seed);
                print_report(report);
            }
            return 0;
        }
        if (cmd == "k-sweep") {
            std::vector<Method> methods{Method::es, Method::grpo};
            std::vector<Granularity> grans{Granularity::layer, Granularity::adapter};
            if (!o.method.empty()) {
                methods = {cfg.method};
            }
            if (!o.granularity.empty()) {
                grans = {cfg.granularity};
            }
            const auto rows = experiment::k_sweep(cfg, ws, p, methods, grans, parse_ks(o.ks));
            io::write_file(ws.root / "k_sweep.csv", experiment::sweep_csv(cfg, rows));
            for (const auto& r : rows) {
                std::printf("%-4s %-7s k=%d joint=%.4f toward=%.4f meaning=%.4f\n",
                            std::string(experiment::to_string(r.method)).c_str(),
                            std::string(mixing::to_string(r.granularity)).c_str(), r.k, r.joint, r.toward, r.meaning);
            }
            return 0;
        }
        if (cmd == "heatmap") {
            std::vector<experiment::WeightsRecord> records;
            io::json hashes = io::json::array();
            std::vector<fs::path> files(o.files.begin(), o.files.end());
            if (files.empty()) {
                for (std::uint64_t seed : cfg.seeds) {
                    for (const auto& t : p.dataset.targets) {
                        files.push_back(ws.run_dir(cfg.method, cfg.granularity, cfg.k, seed) / "weights" /
                                        (t.profile.author_id + ".json"));
                    }
                }
            }
            for (const auto& f : files) {
                const auto doc = io::read_artifact(f, "mix_weights");
                hashes.push_back(doc.at("config_hash"));
                records.push_back(experiment::weights_record_from_json(doc.at("payload")));
            }
            const fs::path dir = ws.root / "heatmap" /
                                 (std::string(experiment::to_string(cfg.method)) + "_" +
                                  std::string(mixing::to_string(cfg.granularity)) + "_k" + std::to_string(cfg.k));
            const auto s = experiment::write_heatmap(records, dir, io::config_hash(hashes), records.front().seed);
            for (const auto& l : s.layers) {
                std::printf("layer %zu mean=%+.4f std=%.4f\n", l.layer, l.mean, l.std);
            }
            std::printf("max|mean|=%.4f median|mean|=%.4f structured=%s layer variance=%.6f\n", s.max_abs_mean,
                        s.median_abs_mean, s.structured ? "yes" : "no", s.layer_variance);
            return 0;
        }
        if (cmd == "report") {
            std::vector<fs::path> files(o.files.begin(), o.files.end());
            if (files.empty()) {
                for (std::uint64_t seed : cfg.seeds) {
                    files.push_back(ws.run_dir(cfg.method, cfg.granularity, cfg.k, seed) / "report.json");
                }
            }
            std::vector<double> joints;
            for (const auto& f : files) {
                const auto r = experiment::load_report(f); // throws if aggregates disagree with rows
                print_report(r);
                joints.push_back(r.overall.joint);
            }
            std::printf("median joint over %zu report(s): %.4f\n", joints.size(), experiment::median(joints));
            return 0;
        }
        throw ConfigError("unknown command " + cmd);
    } catch (const Error& e) {
        io::write_file(failed, io::dump({{"command", cmd}, {"error", e.what()}}));
        throw;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"stylemix: low-resource style transfer by mixing author adapters"};
    app.require_subcommand(1);
    Options o;
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"gen-corpus", "generate the synthetic author corpus"},
        {"train-base", "train the base language model"},
        {"train-adapters", "train one low-rank adapter per library author"},
        {"select", "rank library adapters for each target"},
        {"optimize", "learn mixing weights for each target"},
        {"rewrite", "rewrite the source test texts with the merged models"},
        {"evaluate", "score rewrites and write the grid report"},
        {"pipeline", "select, optimize, rewrite and evaluate"},
        {"k-sweep", "run the pipeline over a range of k"},
        {"heatmap", "export per-layer weights"},
        {"report", "load reports, check them and print aggregates"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", o.config, "run config JSON")->check(CLI::ExistingFile);
        sub->add_option("--seed", o.seeds, "seed (repeatable); replaces the config's seed list");
        sub->add_option("--k", o.k, "number of selected adapters")->check(CLI::PositiveNumber);
        sub->add_option("--method", o.method, "weight learner")->check(CLI::IsMember({"es", "grpo"}));
        sub->add_option("--granularity", o.granularity, "mixing granularity")
            ->check(CLI::IsMember({"layer", "adapter"}));
        sub->add_option("--out", o.out, "output directory");
        sub->add_option("--threads", o.threads, "worker threads (0 = all cores)");
        sub->add_flag("--timings", o.timings, "record wall-clock times (outputs are then not reproducible)");
        if (name == "k-sweep") {
            sub->add_option("--ks", o.ks, "k values: a list \"1,2,3\" or a range \"2..6\"");
        }
        if (name == "heatmap" || name == "report") {
            sub->add_option("files", o.files, "input files (default: the configured run)");
        }
    }
    CLI11_PARSE(app, argc, argv);
    try {
        return run(app.get_subcommands().front()->get_name(), o);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
