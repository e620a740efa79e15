#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "stylemix/error.hpp"
#include "stylemix/experiment/config.hpp"
#include "stylemix/io/csv.hpp"
#include "stylemix/io/json_io.hpp"
#include "stylemix/metrics/scores.hpp"

namespace stylemix::experiment {

/// One scored rewrite of a source test text toward a target.
struct InstanceRow {
    std::string target;
    std::string source_author;
    std::string source_id;
    std::string source_text;
    std::string rewrite;
    metrics::ScoreReport scores;
};

struct Aggregate {
    std::size_t n = 0;
    double toward = 0.0;
    double away = 0.0;
    double meaning = 0.0;
    double joint = 0.0;          // mean of per-instance joints
    double joint_of_means = 0.0; // sqrt(mean toward * mean meaning)
    double fluency = 0.0;

    friend bool operator==(const Aggregate&, const Aggregate&) = default;
};

/// Means accumulated in row order.
inline Aggregate aggregate(const std::vector<const InstanceRow*>& rows) {
    Aggregate a;
    for (const auto* r : rows) {
        a.toward += r->scores.toward;
        a.away += r->scores.away;
        a.meaning += r->scores.meaning;
        a.joint += r->scores.joint;
        a.fluency += r->scores.fluency;
    }
    a.n = rows.size();
    if (a.n > 0) {
        const auto n = static_cast<double>(a.n);
        a.toward /= n;
        a.away /= n;
        a.meaning /= n;
        a.joint /= n;
        a.fluency /= n;
    }
    a.joint_of_means = std::sqrt(a.toward * a.meaning);
    return a;
}

struct GridReport {
    Method method = Method::grpo;
    mixing::Granularity granularity = mixing::Granularity::layer;
    int k = 0;
    std::uint64_t seed = 0;
    std::vector<InstanceRow> rows;
    std::map<std::string, Aggregate> per_target;
    std::map<std::pair<std::string, std::string>, Aggregate> per_pair; // (target, source author)
    Aggregate overall;

    /// Fills every aggregate from the rows.
    void recompute() {
        std::map<std::string, std::vector<const InstanceRow*>> by_target;
        std::map<std::pair<std::string, std::string>, std::vector<const InstanceRow*>> by_pair;
        std::vector<const InstanceRow*> all;
        for (const auto& r : rows) {
            by_target[r.target].push_back(&r);
            by_pair[{r.target, r.source_author}].push_back(&r);
            all.push_back(&r);
        }
        per_target.clear();
        per_pair.clear();
        for (const auto& [t, rs] : by_target) {
            per_target[t] = aggregate(rs);
        }
        for (const auto& [p, rs] : by_pair) {
            per_pair[p] = aggregate(rs);
        }
        overall = aggregate(all);
    }
};

inline json to_json(const Aggregate& a) {
    return {{"n", a.n},         {"toward", a.toward},   {"away", a.away},
            {"meaning", a.meaning}, {"joint", a.joint}, {"joint_of_means", a.joint_of_means},
            {"fluency", a.fluency}};
}

inline Aggregate aggregate_from_json(const json& j) {
    return {j.at("n").get<std::size_t>(),        j.at("toward").get<double>(), j.at("away").get<double>(),
            j.at("meaning").get<double>(),       j.at("joint").get<double>(),  j.at("joint_of_means").get<double>(),
            j.at("fluency").get<double>()};
}

inline json to_json(const GridReport& r) {
    json rows = json::array();
    for (const auto& x : r.rows) {
        rows.push_back({{"target", x.target},
                        {"source_author", x.source_author},
                        {"source_id", x.source_id},
                        {"source_text", x.source_text},
                        {"rewrite", x.rewrite},
                        {"toward", x.scores.toward},
                        {"away", x.scores.away},
                        {"meaning", x.scores.meaning},
                        {"joint", x.scores.joint},
                        {"fluency", x.scores.fluency}});
    }
    json per_target = json::object();
    for (const auto& [t, a] : r.per_target) {
        per_target[t] = to_json(a);
    }
    json per_pair = json::array();
    for (const auto& [p, a] : r.per_pair) {
        json e = to_json(a);
        e["target"] = p.first;
        e["source_author"] = p.second;
        per_pair.push_back(std::move(e));
    }
    return {{"method", std::string(to_string(r.method))},
            {"granularity", std::string(mixing::to_string(r.granularity))},
            {"k", r.k},
            {"seed", r.seed},
            {"rows", std::move(rows)},
            {"per_target", std::move(per_target)},
            {"per_pair", std::move(per_pair)},
            {"overall", to_json(r.overall)}};
}

/// Loads a report and checks that every stored aggregate equals the one
/// recomputed from its rows.
inline GridReport grid_report_from_json(const json& j) {
    GridReport r;
    try {
        r.method = method_from_string(j.at("method").get<std::string>());
        r.granularity = mixing::granularity_from_string(j.at("granularity").get<std::string>());
        r.k = j.at("k").get<int>();
        r.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& x : j.at("rows")) {
            r.rows.push_back({x.at("target").get<std::string>(),
                              x.at("source_author").get<std::string>(),
                              x.at("source_id").get<std::string>(),
                              x.at("source_text").get<std::string>(),
                              x.at("rewrite").get<std::string>(),
                              {x.at("toward").get<double>(), x.at("away").get<double>(), x.at("meaning").get<double>(),
                               x.at("joint").get<double>(), x.at("fluency").get<double>()}});
        }
        r.recompute();
        if (aggregate_from_json(j.at("overall")) != r.overall) {
            throw FormatError("report overall aggregate does not match its rows");
        }
        const json& pt = j.at("per_target");
        if (pt.size() != r.per_target.size()) {
            throw FormatError("report per-target aggregates do not match its rows");
        }
        for (const auto& [t, a] : r.per_target) {
            if (!pt.contains(t) || aggregate_from_json(pt.at(t)) != a) {
                throw FormatError("report aggregate for " + t + " does not match its rows");
            }
        }
        const json& pp = j.at("per_pair");
        if (pp.size() != r.per_pair.size()) {
            throw FormatError("report per-pair aggregates do not match its rows");
        }
        for (const auto& e : pp) {
            const std::pair<std::string, std::string> key{e.at("target").get<std::string>(),
                                                          e.at("source_author").get<std::string>()};
            auto it = r.per_pair.find(key);
            if (it == r.per_pair.end() || aggregate_from_json(e) != it->second) {
                throw FormatError("report aggregate for " + key.first + "/" + key.second +
                                  " does not match its rows");
            }
        }
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad report: ") + e.what());
    }
    return r;
}

/// One line per (target, source) pair, plus per-target and overall lines.
inline std::string grid_csv(const GridReport& r, const std::string& hash) {
    io::CsvWriter csv({"method", "granularity", "k", "target", "source_author", "n", "toward", "away", "meaning",
                       "joint", "joint_of_means", "fluency", "artifact_version", "config_hash", "seed"});
    auto line = [&](const std::string& t, const std::string& s, const Aggregate& a) {
        csv.row({std::string(to_string(r.method)), std::string(mixing::to_string(r.granularity)), std::to_string(r.k), t,
                 s, std::to_string(a.n), io::fmt(a.toward), io::fmt(a.away), io::fmt(a.meaning), io::fmt(a.joint),
                 io::fmt(a.joint_of_means), io::fmt(a.fluency), std::to_string(io::kArtifactVersion), hash,
                 std::to_string(r.seed)});
    };
    for (const auto& [p, a] : r.per_pair) {
        line(p.first, p.second, a);
    }
    for (const auto& [t, a] : r.per_target) {
        line(t, "*", a);
    }
    line("*", "*", r.overall);
    return csv.str();
}

inline std::string instances_csv(const GridReport& r, const std::string& hash) {
    io::CsvWriter csv({"pair_id", "source_author", "target_author", "source_id", "source_text", "rewrite", "toward",
                       "away", "meaning", "joint", "fluency", "artifact_version", "config_hash", "seed"});
    for (const auto& x : r.rows) {
        csv.row({x.source_author + "->" + x.target, x.source_author, x.target, x.source_id, x.source_text, x.rewrite,
                 io::fmt(x.scores.toward),
                 io::fmt(x.scores.away), io::fmt(x.scores.meaning), io::fmt(x.scores.joint), io::fmt(x.scores.fluency),
                 std::to_string(io::kArtifactVersion), hash, std::to_string(r.seed)});
    }
    return csv.str();
}

/// Throws if any scored source text was also given to an optimizer.
inline void check_hygiene(const std::set<std::string>& optimizer_ids, const GridReport& r) {
    for (const auto& x : r.rows) {
        if (optimizer_ids.contains(x.source_id)) {
            throw ConfigError("train/test leak: " + x.source_id + " was seen during weight learning");
        }
    }
}

inline double median(std::vector<double> xs) {
    if (xs.empty()) {
        throw DomainError("median of an empty list");
    }
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

} // namespace stylemix::experiment
