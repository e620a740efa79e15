// Acceptance checks on the shipped benchmark. One PASS/FAIL line per criterion.
//
//   acceptance [--bench DIR] [--criterion N] [--threads T]
//
// Criteria 4-7 read the benchmark runs under DIR and compute any that are missing.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "stylemix/stylemix.hpp"

using namespace stylemix;
using core::DenseMatrix;
using core::SeededRng;
using experiment::Method;
using mixing::Granularity;
using mixing::MixWeights;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

struct Env {
    fs::path bench;
    unsigned threads = 0;

    experiment::RunConfig config() const {
        experiment::RunConfig cfg;
        cfg.out = bench;
        cfg.threads = threads;
        return cfg;
    }

    const experiment::Prepared& prepared() {
        if (!prep_) {
            prep_ = experiment::prepare(config(), experiment::Workspace{bench});
        }
        return *prep_;
    }

    /// k-sweep rows for one (method, granularity), cached per process.
    const std::vector<experiment::SweepRow>& sweep(Method m, Granularity g, const std::vector<int>& ks) {
        const std::string key = std::string(experiment::to_string(m)) + std::string(mixing::to_string(g));
        auto& slot = sweeps_[key];
        for (int k : ks) {
            const bool have = std::any_of(slot.begin(), slot.end(), [&](const auto& r) { return r.k == k; });
            if (!have) {
                auto rows = experiment::k_sweep(config(), experiment::Workspace{bench}, prepared(), {m}, {g}, {k});
                slot.push_back(std::move(rows.front()));
            }
        }
        return slot;
    }

    const experiment::SweepRow& sweep_row(Method m, Granularity g, int k) {
        for (const auto& r : sweep(m, g, {k})) {
            if (r.k == k) {
                return r;
            }
        }
        throw std::logic_error("sweep row missing");
    }

    std::vector<experiment::WeightsRecord> weights(Method m, Granularity g, int k) {
        const auto cfg = config();
        const experiment::Workspace ws{bench};
        std::vector<experiment::WeightsRecord> out;
        for (std::uint64_t seed : cfg.seeds) {
            auto w = experiment::optimize_all(cfg, ws, prepared(), m, g, k, seed);
            out.insert(out.end(), w.begin(), w.end());
        }
        return out;
    }

private:
    std::optional<experiment::Prepared> prep_;
    std::map<std::string, std::vector<experiment::SweepRow>> sweeps_;
};

bool bitwise_equal(const DenseMatrix& a, const DenseMatrix& b) {
    return a.same_shape(b) && std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(double)) == 0;
}

std::vector<std::string> ids_of(const std::vector<lm::AuthorAdapter>& ads) {
    std::vector<std::string> ids;
    for (const auto& a : ads) {
        ids.push_back(a.author_id);
    }
    return ids;
}

std::vector<const corpus::StyleProfile*> shipped_profiles(const corpus::Dataset& ds) {
    std::vector<const corpus::StyleProfile*> out;
    for (const auto& a : ds.library) {
        out.push_back(&a.profile);
    }
    for (const auto& a : ds.targets) {
        out.push_back(&a.profile);
    }
    for (const auto& a : ds.sources) {
        out.push_back(&a.profile);
    }
    return out;
}

// ---- 1 ----

Outcome mixing_identities(Env& env) {
    const auto& p = env.prepared();
    const Stopwatch sw;
    const auto adapters = experiment::adapters_of(p.adapters);
    const std::size_t L = p.base.params.layers.size();
    bool one_hot = true;
    for (std::size_t i = 0; i < adapters.size(); ++i) {
        auto W = MixWeights::zeros(ids_of(adapters), L);
        for (std::size_t j = 0; j < L; ++j) {
            W.w(i, j) = 1.0;
        }
        const auto mixed = mixing::mix_layerwise(adapters, W);
        for (std::size_t j = 0; j < L; ++j) {
            one_hot = one_hot && bitwise_equal(mixed.dq[j], adapters[i].layers[j].q.expanded()) &&
                      bitwise_equal(mixed.dv[j], adapters[i].layers[j].v.expanded());
        }
    }

    SeededRng rng(1);
    const int vocab = p.base.config.vocab_size;
    auto random_prompt = [&] {
        std::vector<int> t(1 + rng.uniform_index(static_cast<std::size_t>(p.base.config.context_len)));
        for (int& x : t) {
            x = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(vocab)));
        }
        return t;
    };
    const auto zero = mixing::merge_into_base(p.base, mixing::mix_layerwise(adapters, MixWeights::zeros(ids_of(adapters), L)));
    bool zero_ok = zero.params == p.base.params;
    for (int t = 0; t < 10; ++t) {
        const auto prompt = random_prompt();
        zero_ok = zero_ok && bitwise_equal(lm::forward_logits(zero, {}, prompt), lm::forward_logits(p.base, {}, prompt));
    }

    const auto selected = experiment::selected_adapters(p, p.dataset.targets.front().profile.author_id, 2);
    auto W = MixWeights::zeros(ids_of(selected), L);
    for (double& x : W.w.data()) {
        x = rng.uniform(W.lower, W.upper);
    }
    const auto merged = mixing::merge_into_base(p.base, mixing::mix_layerwise(selected, W));
    const auto scaled = mixing::scaled_adapters(selected, W);
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
        const auto prompt = random_prompt();
        worst = std::max(worst, core::max_abs_diff(lm::forward_logits(merged, {}, prompt),
                                                   lm::forward_logits(p.base, scaled, prompt)));
    }
    const double secs = sw.seconds();
    return {one_hot && zero_ok && worst <= 1e-9 && secs < 60.0,
            fmt("one-hot bitwise %s over %zu adapters, W=0 bitwise %s, merged vs dynamic %.2e (<= 1e-9) on 50 "
                "prompts, %.1f s (< 60 s)",
                one_hot ? "yes" : "NO", adapters.size(), zero_ok ? "yes" : "NO", worst, secs)};
}

// ---- 2 ----

lm::AuthorAdapter loud_adapter(const lm::BaseModel& base, const std::string& id, std::uint64_t seed) {
    SeededRng rng(seed);
    auto a = lm::AuthorAdapter::init(base, id, rng, 2, 4.0);
    for (auto& l : a.layers) {
        for (auto* m : {&l.q.a, &l.q.b, &l.v.a, &l.v.b}) {
            for (double& x : m->data()) {
                x = rng.normal(0.0, 0.5);
            }
        }
    }
    return a;
}

Outcome gradient_checks(Env&) {
    const Stopwatch sw;
    corpus::CorpusSpec spec;
    spec.n_high_resource = 2;
    spec.pairs_per_author = 16;
    spec.n_targets = 1;
    spec.n_sources = 1;
    spec.source_train = 12;
    spec.source_test = 4;
    const auto ds = corpus::build_dataset(spec);
    lm::ModelConfig mc;
    mc.d_model = 8;
    mc.n_layers = 2;
    mc.n_heads = 2;
    mc.d_ff = 16;
    SeededRng init(5);
    const auto base = lm::BaseModel::init(mc, init, 0.3);
    const std::vector<lm::AuthorAdapter> ads{loud_adapter(base, "hr00", 11), loud_adapter(base, "hr01", 12)};
    std::vector<std::string> texts;
    for (const auto& x : ds.targets[0].texts) {
        texts.push_back(x.text);
    }
    auto ctx = optim::RewardContext::make(base, ads, texts, ds.sources[0].train);
    ctx.gen.max_len = 6;

    double grpo_worst = 0.0;
    SeededRng rng(6);
    for (int trial = 0; trial < 4; ++trial) {
        auto W = MixWeights::zeros(ctx.adapter_ids(), 2);
        for (double& x : W.w.data()) {
            x = rng.uniform(-1.0, 1.0);
        }
        const auto prompt = ctx.tok->paraphrase_prompt(ctx.sources[static_cast<std::size_t>(trial)].text);
        const auto group = optim::sample_group(ctx, ctx.merged(W), prompt, 4, rng.derive("group", static_cast<std::uint64_t>(trial)));
        std::vector<double> adv(4);
        for (double& a : adv) {
            a = rng.normal();
        }
        const auto grad = optim::grpo_weight_gradient(ctx, W, prompt, group, adv);
        const double h = 1e-4;
        for (std::size_t i = 0; i < 2; ++i) {
            for (std::size_t j = 0; j < 2; ++j) {
                auto plus = W, minus = W;
                plus.w(i, j) += h;
                minus.w(i, j) -= h;
                const double fd = (optim::grpo_surrogate(ctx, plus, prompt, group, adv) -
                                   optim::grpo_surrogate(ctx, minus, prompt, group, adv)) /
                                  (2.0 * h);
                grpo_worst = std::max(grpo_worst, std::abs(grad(i, j) - fd) /
                                                      std::max({std::abs(grad(i, j)), std::abs(fd), 1e-8}));
            }
        }
    }

    lm::ModelConfig tc = mc;
    tc.vocab_size = 12;
    tc.context_len = 16;
    SeededRng mrng(11);
    lm::BaseModel m = lm::BaseModel::init(tc, mrng, 0.4);
    lm::ModelParams::visit(m.params, [&](const std::string&, DenseMatrix& t) {
        for (double& x : t.data()) {
            x += mrng.normal(0.0, 0.1);
        }
    });
    const std::vector<int> prompt{2, 5, 1};
    const std::vector<int> completion{7, 3, 0};
    const lm::ModelParams grads = lm::param_gradients(m, {}, prompt, completion);
    auto loss = [&](const lm::ModelParams& q) { return -lm::sequence_log_prob_params(m.config, q, prompt, completion); };
    std::vector<std::string> names;
    lm::ModelParams::visit(m.params, [&](const std::string& n, const DenseMatrix&) { names.push_back(n); });
    SeededRng crng(13);
    double lm_worst = 0.0;
    const double h = 1e-5;
    for (int checked = 0; checked < 20;) {
        const std::size_t ti = crng.uniform_index(names.size());
        lm::ModelParams plus = m.params, minus = m.params;
        DenseMatrix* tp = plus.tensors()[ti];
        const std::size_t k = crng.uniform_index(tp->size());
        if (names[ti] == "pos_emb" && k / tp->cols() >= prompt.size() + completion.size() - 1) {
            continue; // positions the sequence never reaches have exactly zero gradient
        }
        tp->data()[k] += h;
        minus.tensors()[ti]->data()[k] -= h;
        const double fd = (loss(plus) - loss(minus)) / (2.0 * h);
        const double g = grads.tensors()[ti]->data()[k];
        lm_worst = std::max(lm_worst, std::abs(g - fd) / std::max({std::abs(g), std::abs(fd), 1e-7}));
        ++checked;
    }
    const double secs = sw.seconds();
    return {grpo_worst <= 1e-3 && lm_worst <= 1e-4 && secs < 120.0,
            fmt("GRPO weight gradient rel err %.2e (<= 1e-3) over 16 entries, LM parameter gradient rel err %.2e "
                "(<= 1e-4) over 20 coordinates, %.1f s (< 120 s)",
                grpo_worst, lm_worst, secs)};
}

// ---- 3 ----

std::vector<double> random_unit(SeededRng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (double& x : v) {
        x = rng.normal();
    }
    return core::l2_normalize(v);
}

Outcome metric_suite(Env& env) {
    const auto& ds = env.prepared().dataset;
    const Stopwatch sw;
    SeededRng rng(3);
    const SeededRng master(4);
    std::size_t out_of_range = 0;
    std::size_t endpoint_misses = 0;
    for (int i = 0; i < 10000; ++i) {
        const std::size_t n = 2 + rng.uniform_index(63);
        const auto s = random_unit(rng, n), t = random_unit(rng, n), o = random_unit(rng, n);
        const double tw = metrics::toward(s, t, o);
        const double aw = metrics::away(s, t, o);
        auto prng = master.derive("profile", static_cast<std::uint64_t>(i));
        const auto profile = corpus::draw_profile("x", prng);
        const std::string a = corpus::stylize(profile, corpus::gen_neutral_sentence(rng), rng);
        const std::string b = corpus::stylize(profile, corpus::gen_neutral_sentence(rng), rng);
        const double mn = metrics::meaning_score(a, b);
        const double j = metrics::joint(tw, mn);
        for (double x : {tw, aw, mn, j}) {
            if (!(x >= 0.0 && x <= 1.0)) {
                ++out_of_range;
            }
        }
        if (metrics::toward(s, t, t) != 1.0 || metrics::toward(s, t, s) != 0.0 || metrics::joint(0.0, mn) != 0.0) {
            ++endpoint_misses;
        }
    }
    const auto profiles = shipped_profiles(ds);
    std::size_t meaning_misses = 0;
    for (const auto* p : profiles) {
        for (int i = 0; i < 1000; ++i) {
            const auto x = corpus::gen_neutral_sentence(rng, p->length_bias);
            if (metrics::meaning_score(x, corpus::stylize(*p, x, rng)) != 1.0) {
                ++meaning_misses;
            }
        }
    }
    const double secs = sw.seconds();
    return {out_of_range == 0 && endpoint_misses == 0 && meaning_misses == 0 && secs < 60.0,
            fmt("%zu of 40000 scores outside [0,1], %zu endpoint misses in 10000 draws, meaning(x, stylize(p,x)) != 1 "
                "in %zu of %zu (%zu profiles), %.1f s (< 60 s)",
                out_of_range, endpoint_misses, meaning_misses, profiles.size() * 1000, profiles.size(), secs)};
}

// ---- 4 ----

double planted_quadratic_error(std::size_t dim, std::uint64_t seed) {
    SeededRng rng(seed);
    std::vector<double> target(dim);
    for (double& x : target) {
        x = rng.uniform(-1.2, 1.2);
    }
    optim::EsConfig cfg;
    cfg.seed = seed;
    auto f = [&](const std::vector<std::vector<double>>& cands, int) {
        std::vector<double> out;
        for (const auto& c : cands) {
            double s = 0.0;
            for (std::size_t j = 0; j < dim; ++j) {
                s += (c[j] - target[j]) * (c[j] - target[j]);
            }
            out.push_back(-s);
        }
        return out;
    };
    const auto res = optim::differential_evolution(dim, cfg, f);
    double worst = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
        worst = std::max(worst, std::abs(res.best[j] - target[j]));
    }
    return worst;
}

Outcome optimizer_sanity(Env& env) {
    const auto cfg = env.config();
    // W of the default run: k adapters by the model's layers.
    const auto dim = static_cast<std::size_t>(cfg.k * cfg.model.n_layers);
    double es_worst = 0.0;
    for (std::uint64_t seed : cfg.seeds) {
        es_worst = std::max(es_worst, planted_quadratic_error(dim, seed));
    }
    std::string other;
    for (std::size_t d : {static_cast<std::size_t>(cfg.k), static_cast<std::size_t>(cfg.model.n_layers)}) {
        double w = 0.0;
        for (std::uint64_t seed : cfg.seeds) {
            w = std::max(w, planted_quadratic_error(d, seed));
        }
        other += fmt(" [dim %zu: %.4f]", d, w);
    }

    std::size_t improved = 0;
    std::size_t total = 0;
    std::string misses;
    for (const auto& w : env.weights(Method::grpo, cfg.granularity, cfg.k)) {
        double first = 0.0, last = 0.0;
        const std::size_t n = w.trace.size();
        for (std::size_t i = 0; i < 30; ++i) {
            first += w.trace[i].value / 30.0;
            last += w.trace[n - 30 + i].value / 30.0;
        }
        ++total;
        if (last > first) {
            ++improved;
        } else {
            misses += fmt(" %s/seed%llu %.3f->%.3f", w.target.c_str(), static_cast<unsigned long long>(w.seed), first,
                          last);
        }
    }
    return {es_worst <= 0.05 && improved == total,
            fmt("DE planted quadratic on the %zu-dim default W: worst inf-norm error %.4f (<= 0.05) over seeds 41-43;%s; "
                "GRPO last-30 mean reward > first-30 in %zu of %zu (target, seed) runs%s",
                dim, es_worst, other.c_str(), improved, total, misses.c_str())};
}

// ---- 5 ----

std::map<std::string, double> per_target_median_joint(const experiment::SweepRow& row) {
    std::map<std::string, std::vector<double>> by;
    for (const auto& r : row.reports) {
        for (const auto& [t, a] : r.per_target) {
            by[t].push_back(a.joint);
        }
    }
    std::map<std::string, double> out;
    for (auto& [t, xs] : by) {
        out[t] = experiment::median(xs);
    }
    return out;
}

Outcome mixing_beats_single(Env& env) {
    const auto k1 = per_target_median_joint(env.sweep_row(Method::grpo, Granularity::layer, 1));
    const auto k2 = per_target_median_joint(env.sweep_row(Method::grpo, Granularity::layer, 2));
    int wins = 0;
    std::string detail;
    for (const auto& [t, j1] : k1) {
        const double j2 = k2.at(t);
        wins += j2 > j1 ? 1 : 0;
        detail += fmt(" %s k1=%.4f k2=%.4f", t.c_str(), j1, j2);
    }
    return {wins >= 3, fmt("k=2 beats k=1 for %d of %zu targets (>= 3);%s", wins, k1.size(), detail.c_str())};
}

// ---- 6 ----

Outcome layerwise_vs_adapterwise(Env& env) {
    double best_lw = -1.0, best_aw = -1.0;
    int k_lw = 0, k_aw = 0;
    std::string detail;
    for (int k : {1, 2, 3}) {
        const double lw = env.sweep_row(Method::grpo, Granularity::layer, k).joint;
        const double aw = env.sweep_row(Method::grpo, Granularity::adapter, k).joint;
        detail += fmt(" k=%d LW %.4f AW %.4f", k, lw, aw);
        if (lw > best_lw) {
            best_lw = lw;
            k_lw = k;
        }
        if (aw > best_aw) {
            best_aw = aw;
            k_aw = k;
        }
    }
    return {best_lw >= best_aw,
            fmt("best layer-wise %.4f (k=%d) vs best adapter-wise %.4f (k=%d);%s", best_lw, k_lw, best_aw, k_aw,
                detail.c_str())};
}

// ---- 7 ----

Outcome layer_structure(Env& env) {
    const auto cfg = env.config();
    const auto grpo = env.weights(Method::grpo, Granularity::layer, cfg.k);
    const auto es = env.weights(Method::es, Granularity::layer, cfg.k);
    const fs::path dir = env.bench / "heatmap";
    const auto g = experiment::write_heatmap(grpo, dir / ("grpo_layer_k" + std::to_string(cfg.k)),
                                             io::config_hash(experiment::optimize_key(cfg, Method::grpo, Granularity::layer, cfg.k)),
                                             cfg.seeds.front());
    const auto e = experiment::write_heatmap(es, dir / ("es_layer_k" + std::to_string(cfg.k)),
                                             io::config_hash(experiment::optimize_key(cfg, Method::es, Granularity::layer, cfg.k)),
                                             cfg.seeds.front());
    std::string means;
    for (const auto& l : g.layers) {
        means += fmt(" %+.3f", l.mean);
    }
    return {g.structured,
            fmt("GRPO layer means%s; max |mean| %.4f vs 2x median %.4f; ES layer-to-layer variance %.6f (GRPO %.6f); "
                "exported to %s",
                means.c_str(), g.max_abs_mean, 2.0 * g.median_abs_mean, e.layer_variance, g.layer_variance,
                dir.c_str())};
}

// ---- 8 ----

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) {
            out[fs::relative(e.path(), dir).string()] = io::read_file(e.path());
        }
    }
    return out;
}

Outcome determinism(Env&) {
    const fs::path root = fs::temp_directory_path() / "stylemix_acceptance_determinism";
    fs::remove_all(root);
    fs::create_directories(root);
    experiment::RunConfig small;
    small.corpus.n_high_resource = 3;
    small.corpus.pairs_per_author = 32;
    small.corpus.n_targets = 2;
    small.corpus.texts_per_target = 8;
    small.corpus.n_sources = 2;
    small.corpus.source_train = 8;
    small.corpus.source_test = 4;
    small.model.d_model = 16;
    small.model.n_layers = 2;
    small.model.d_ff = 32;
    small.base_train.steps = 30;
    small.base_train.batch = 8;
    small.base_train.warmup = 5;
    small.base_aux_styles = 2;
    small.sft.train.steps = 10;
    small.sft.train.batch = 8;
    small.sft.train.warmup = 2;
    small.grpo.steps = 6;
    small.grpo.group_size = 4;
    small.es.steps = 3;
    small.es.population = 4;
    small.es.batch_size = 2;
    small.rewrite.max_len = 24;
    small.seeds = {41, 42};
    const fs::path config = root / "config.json";
    io::write_file(config, io::dump(experiment::to_json(small)));

    const std::vector<std::string> commands = {
        "gen-corpus", "train-base", "train-adapters", "select", "optimize", "rewrite", "evaluate", "pipeline",
        "optimize --method es", "pipeline --method es", "pipeline --granularity adapter", "k-sweep --ks 1..2",
        "heatmap", "report"};
    auto run_all = [&](const fs::path& out, unsigned threads) {
        for (const auto& c : commands) {
            const std::string cmd = std::string("\"") + STYLEMIX_CLI + "\" " + c + " --config \"" + config.string() +
                                    "\" --out \"" + out.string() + "\" --threads " + std::to_string(threads) +
                                    " > /dev/null 2>&1";
            if (std::system(cmd.c_str()) != 0) {
                return "command failed: " + c;
            }
        }
        return std::string();
    };
    const Stopwatch sw;
    for (const auto& [dir, threads] : {std::pair{"a", 1U}, std::pair{"b", 2U}}) {
        if (const auto err = run_all(root / dir, threads); !err.empty()) {
            return {false, err};
        }
    }
    const auto a = snapshot(root / "a");
    const auto b = snapshot(root / "b");
    std::size_t differing = 0;
    std::string first;
    for (const auto& [name, bytes] : a) {
        if (!b.contains(name) || b.at(name) != bytes) {
            ++differing;
            first = first.empty() ? name : first;
        }
    }
    differing += b.size() > a.size() ? b.size() - a.size() : 0;
    // A rerun into an existing directory must leave every byte as it was.
    if (const auto err = run_all(root / "a", 1); !err.empty()) {
        return {false, err};
    }
    const bool rerun_same = snapshot(root / "a") == a;
    const double secs = sw.seconds();
    fs::remove_all(root);
    return {differing == 0 && rerun_same && !a.empty(),
            fmt("%zu commands run twice (1 and 2 threads): %zu of %zu files differ%s%s; rerun in place %s; %.0f s",
                commands.size(), differing, a.size(), first.empty() ? "" : ", first ", first.c_str(),
                rerun_same ? "byte-identical" : "CHANGED FILES", secs)};
}

// ---- 9 ----

Outcome round_trip(Env& env) {
    const auto& ds = env.prepared().dataset;
    const auto profiles = shipped_profiles(ds);
    const Stopwatch sw;
    std::size_t misses = 0;
    std::string first;
    for (const auto* p : profiles) {
        SeededRng rng = SeededRng(9).derive(p->author_id);
        for (int i = 0; i < 10000; ++i) {
            const auto x = corpus::gen_neutral_sentence(rng, p->length_bias);
            const auto styled = corpus::stylize(*p, x, rng);
            if (corpus::neutralize(*p, styled) != x) {
                ++misses;
                if (first.empty()) {
                    first = p->author_id + ": " + styled;
                }
            }
        }
    }
    return {misses == 0, fmt("%zu mismatches in %zu sentences (%zu profiles x 10000)%s%s, %.1f s", misses,
                             profiles.size() * 10000, profiles.size(), first.empty() ? "" : "; first ", first.c_str(),
                             sw.seconds())};
}

} // namespace

int main(int argc, char** argv) {
    Env env;
    env.bench = STYLEMIX_BENCH_DIR;
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--bench" && i + 1 < argc) {
            env.bench = argv[++i];
        } else if (a == "--criterion" && i + 1 < argc) {
            only = std::atoi(argv[++i]);
        } else if (a == "--threads" && i + 1 < argc) {
            env.threads = static_cast<unsigned>(std::atoi(argv[++i]));
        } else {
            std::fprintf(stderr, "usage: acceptance [--bench DIR] [--criterion N] [--threads T]\n");
            return 2;
        }
    }
    const std::vector<std::pair<std::string, std::function<Outcome(Env&)>>> criteria = {
        {"mixing identities", mixing_identities},
        {"gradient correctness", gradient_checks},
        {"metric suite", metric_suite},
        {"optimizer sanity", optimizer_sanity},
        {"mixing beats a single adapter", mixing_beats_single},
        {"layer-wise >= adapter-wise under GRPO", layerwise_vs_adapterwise},
        {"GRPO layer structure", layer_structure},
        {"determinism", determinism},
        {"neutralize(stylize(x)) == x", round_trip},
    };
    if (only < 0 || only > static_cast<int>(criteria.size())) {
        std::fprintf(stderr, "criterion must lie in [1, %zu]\n", criteria.size());
        return 2;
    }
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        if (only != 0 && static_cast<int>(i) + 1 != only) {
            continue;
        }
        Outcome o;
        try {
            o = criteria[i].second(env);
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        std::printf("%s criterion %zu (%s): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.detail.c_str());
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
