#pragma once

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "josh/bootstrap.hpp"
#include "josh/config.hpp"
#include "josh/extraction.hpp"
#include "josh/ingest.hpp"
#include "josh/metrics.hpp"
#include "josh/rollout.hpp"
#include "josh/scripted.hpp"
#include "josh/stability.hpp"

// Operator commands behind the CLI. Each returns a summary and reports
// progress on the given stream.
namespace josh {

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kArtifactSuffix = ".rollout.json";

inline std::string artifact_name(const std::string& scenario_id) {
    std::string out;
    for (char c : scenario_id)
        out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') ? c : '_';
    return out + std::string(kArtifactSuffix);
}

// ---------------------------------------------------------------------------
// ingest

struct IngestSummary {
    std::size_t source = 0;
    std::size_t converted = 0;
    std::size_t skipped = 0;
    std::map<std::string, std::size_t> split_sizes;
    std::vector<std::string> warnings;
};

inline IngestSummary cmd_ingest(const std::filesystem::path& source_dir, const std::filesystem::path& out_dir,
                                std::ostream& log, bool check_expected = true) {
    auto rep = ingest_corpus(source_dir, check_expected ? std::optional<ExpectedCounts>(ExpectedCounts{}) : std::nullopt);
    write_ingest(out_dir, rep, source_dir);
    IngestSummary s{rep.source_dialogues, rep.scenarios.size(), rep.skipped.size(), {}, rep.splits.warnings};
    log << "split          scenarios\n";
    for (const auto& m : rep.splits.manifests) {
        s.split_sizes[std::string(to_string(m.split))] = m.scenario_ids.size();
        log << std::string(to_string(m.split)) << std::string(15 - to_string(m.split).size(), ' ')
            << m.scenario_ids.size() << "\n";
    }
    log << "total          " << rep.scenarios.size() << "  (" << rep.skipped.size() << " of "
        << rep.source_dialogues << " source dialogues skipped)\n";
    for (const auto& w : rep.splits.warnings) log << "warning: " << w << "\n";
    return s;
}

// ---------------------------------------------------------------------------
// rollout

struct Backends {
    std::unique_ptr<AgentBackend> agent;
    std::unique_ptr<UserSimulator> user;
};

inline Backends make_backends(const RunConfig& cfg) {
    Backends b;
    if (cfg.backend == BackendKind::Scripted) {
        const auto& s = cfg.scripted;
        const auto style = cfg.agent_style;
        ScriptedAgent::Policy policy;
        if (s.agent == "oracle") policy = scripted::oracle(style);
        else if (s.agent == "greedy") policy = scripted::greedy(style);
        else if (s.agent == "silent") policy = scripted::silent(style);
        else if (s.agent == "nth_sample") policy = scripted::nth_sample(style, s.good_sample);
        else if (s.agent == "noisy") policy = scripted::noisy_oracle(style, s.noise);
        else throw ConfigError("scripted.agent: unknown policy " + s.agent);
        b.agent = std::make_unique<ScriptedAgent>(policy, style, cfg.agent_step_limit);
        if (s.user == "goal") b.user = std::make_unique<ScriptedUser>();
        else if (s.user == "persistent") b.user = std::make_unique<ScriptedUser>(scripted::persistent_user());
        else throw ConfigError("scripted.user: unknown policy " + s.user);
        return b;
    }
    auto agent_model = std::make_shared<HttpChatModel>(cfg.agent.endpoint);
    b.agent = std::make_unique<ModelAgent>(agent_model, cfg.agent_style, cfg.agent.endpoint.model,
                                           cfg.agent_step_limit);
    auto user_model = std::make_shared<HttpChatModel>(cfg.user.endpoint);
    if (cfg.user_kind == "guide")
        b.user = std::make_unique<GuideUserSimulator>(user_model, user_model, cfg.user.endpoint.model, cfg.user.sampling);
    else
        b.user = std::make_unique<GoalUserSimulator>(user_model, cfg.user.endpoint.model, cfg.user.sampling);
    return b;
}

inline bool has_database_files(const std::filesystem::path& dir) {
    if (dir.empty() || !std::filesystem::is_directory(dir)) return false;
    for (const auto& d : database_domains())
        if (std::filesystem::exists(dir / (d + "_db.json"))) return true;
    return false;
}

/// Scenarios named by the config, in manifest order when a split is chosen.
inline std::vector<ScenarioEnv> load_run_scenarios(const RunConfig& cfg,
                                                   const ApiRegistry& registry = ApiRegistry::standard()) {
    const DatabaseSet base = has_database_files(cfg.databases) ? load_databases(cfg.databases) : DatabaseSet{};
    std::vector<ScenarioEnv> all;
    for (const auto& rec : read_jsonl(cfg.scenarios)) all.push_back(load_scenario(rec, registry, base));
    if (!cfg.split) return all;
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < all.size(); ++i) index.emplace(all[i].scenario_id, i);
    std::vector<ScenarioEnv> out;
    for (const auto& id : read_id_list(cfg.splits_dir / (*cfg.split + ".txt"))) {
        auto it = index.find(id);
        if (it == index.end()) throw DataError("split " + *cfg.split + " names unknown scenario " + id);
        out.push_back(all[it->second]);
    }
    return out;
}

struct RolloutSummary {
    std::size_t total = 0;
    std::size_t completed = 0;  // newly simulated
    std::size_t resumed = 0;    // already on disk
    std::size_t faulted = 0;
    Usage usage;                // over every artifact in the output directory
};

namespace detail {

inline std::optional<RolloutTree> read_artifact(const std::filesystem::path& p) {
    if (!std::filesystem::exists(p)) return std::nullopt;
    try {
        return tree_from_json(json::parse(read_file(p)));
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

inline std::string utc_now() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

}  // namespace detail

/// Runs the beam search for every scenario, writing one artifact each.
/// Scenarios with a finished, fault-free artifact are skipped, so an
/// interrupted run can simply be restarted.
inline RolloutSummary cmd_rollout(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    const auto scenarios = load_run_scenarios(cfg);
    Backends backends = make_backends(cfg);
    std::filesystem::create_directories(cfg.out);
    BeamConfig beam = cfg.beam;
    beam.parallelism = 1;  // parallelism is spent across scenarios

    RolloutSummary summary;
    summary.total = scenarios.size();
    std::mutex mu;
    std::ofstream progress(cfg.out / "progress.jsonl", std::ios::app);
    auto record = [&](json line) {
        std::lock_guard lock(mu);
        line["time"] = detail::utc_now();
        progress << line.dump() << "\n";
        progress.flush();
    };

    parallel_for(scenarios.size(), cfg.parallelism, [&](std::size_t i) {
        const ScenarioEnv& env = scenarios[i];
        const auto path = cfg.out / artifact_name(env.scenario_id);
        if (auto prev = detail::read_artifact(path); prev && prev->terminated_reason != TerminatedReason::Fault) {
            {
                std::lock_guard lock(mu);
                ++summary.resumed;
            }
            record({{"event", "skipped"}, {"scenario_id", env.scenario_id}});
            return;
        }
        try {
            RolloutTree tree = run_rollout(env, *backends.agent, *backends.user, beam);
            mark_ideal_path(tree);
            write_file_atomic(path, tree_to_json(tree).dump(1) + "\n");
            const auto ar = tree.ledger.average_reward();
            {
                std::lock_guard lock(mu);
                ++summary.completed;
                if (tree.terminated_reason == TerminatedReason::Fault) ++summary.faulted;
            }
            record({{"event", tree.terminated_reason == TerminatedReason::Fault ? "fault" : "done"},
                    {"scenario_id", env.scenario_id},
                    {"average_reward", ar.value()},
                    {"terminated_reason", to_string(tree.terminated_reason)},
                    {"nodes", tree.nodes.size()},
                    {"usage", to_json(tree.usage)}});
        } catch (const std::exception& e) {
            {
                std::lock_guard lock(mu);
                ++summary.faulted;
            }
            record({{"event", "fault"}, {"scenario_id", env.scenario_id}, {"error", e.what()}});
        }
    });

    for (const auto& entry : std::filesystem::directory_iterator(cfg.out)) {
        if (!entry.path().string().ends_with(kArtifactSuffix)) continue;
        if (auto t = detail::read_artifact(entry.path())) summary.usage += t->usage;
    }
    write_file_atomic(cfg.out / "usage_summary.json",
                      json{{"scenarios", summary.total}, {"usage", to_json(summary.usage)}}.dump(1) + "\n");
    log << "rollouts: " << summary.completed << " simulated, " << summary.resumed << " resumed, " << summary.faulted
        << " faulted, " << summary.total << " total\n";
    log << "tokens: prompt " << summary.usage.prompt_tokens << ", completion " << summary.usage.completion_tokens
        << ", total " << summary.usage.total_tokens << "\n";
    return summary;
}

// ---------------------------------------------------------------------------
// extract / eval

/// Every rollout artifact in `dir`, ordered by scenario id.
inline std::vector<RolloutTree> load_rollouts(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw DataError("rollout directory not found: " + dir.string());
    std::vector<RolloutTree> trees;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.path().string().ends_with(kArtifactSuffix)) continue;
        json j;
        try {
            j = json::parse(read_file(entry.path()));
        } catch (const json::parse_error& e) {
            throw DataError(entry.path().string() + ": " + e.what());
        }
        try {
            trees.push_back(tree_from_json(j));
        } catch (const ArtifactError& e) {
            throw DataError(entry.path().string() + ": " + e.what());
        }
    }
    if (trees.empty()) throw DataError("no rollout artifacts in " + dir.string());
    std::sort(trees.begin(), trees.end(),
              [](const RolloutTree& a, const RolloutTree& b) { return a.scenario_id < b.scenario_id; });
    return trees;
}

enum class DatasetFormat { Sft, Kto };

inline DatasetFormat dataset_format_from_string(std::string_view s) {
    if (s == "sft") return DatasetFormat::Sft;
    if (s == "kto") return DatasetFormat::Kto;
    throw ConfigError("format: expected sft or kto");
}

struct ExtractSummary {
    std::size_t total = 0;
    std::size_t kept = 0;
    std::size_t records = 0;
    std::size_t upvotes = 0;
    std::size_t downvotes = 0;
};

/// Filters rollouts (every goal reached, no errors on the rewarded chain) and
/// writes the dataset as JSON lines, ordered by scenario id then turn.
inline ExtractSummary cmd_extract(const std::filesystem::path& rollout_dir, DatasetFormat format,
                                  const std::filesystem::path& out, std::ostream& log) {
    auto trees = load_rollouts(rollout_dir);
    ExtractSummary s;
    s.total = trees.size();
    std::string lines;
    for (std::size_t idx : filter_rollouts(trees)) {
        ++s.kept;
        const RolloutTree& t = trees[idx];
        if (format == DatasetFormat::Sft) {
            if (auto rec = extract_sft(t)) {
                lines += to_json(*rec).dump() + "\n";
                ++s.records;
            }
        } else {
            for (const auto& rec : extract_kto(t)) {
                lines += to_json(rec).dump() + "\n";
                ++s.records;
                ++(rec.label ? s.upvotes : s.downvotes);
            }
        }
    }
    write_file_atomic(out, lines);
    log << "kept " << s.kept << " of " << s.total << " rollouts";
    if (s.total) log << " (" << (100.0 * static_cast<double>(s.kept) / static_cast<double>(s.total)) << "%)";
    log << ", wrote " << s.records << " records to " << out.string() << "\n";
    if (format == DatasetFormat::Kto) log << "upvotes " << s.upvotes << ", downvotes " << s.downvotes << "\n";
    return s;
}

/// Per-scenario average reward, keyed by scenario id.
inline std::map<std::string, double> rewards_by_scenario(const std::vector<RolloutTree>& trees) {
    std::map<std::string, double> out;
    for (const auto& t : trees) out[t.scenario_id] = t.ledger.average_reward().value();
    return out;
}

inline void require_same_scenarios(const std::map<std::string, double>& a, const std::map<std::string, double>& b) {
    if (a.size() != b.size() || !std::equal(a.begin(), a.end(), b.begin(), [](const auto& x, const auto& y) {
            return x.first == y.first;
        }))
        throw DataError("result sets cover different scenarios");
}

inline json cmd_eval(const std::filesystem::path& results_dir, std::ostream& log) {
    auto result = evaluate_run(load_rollouts(results_dir));
    json report = to_json(result);
    log << "conversations      " << result.size() << "\n"
        << "avg reward         " << result.avg_reward_mean() << "\n"
        << "100% success rate  " << result.success_rate_100() << "\n";
    for (auto cat : {EnvErrorCategory::BadApiUse, EnvErrorCategory::IncorrectApiFormat})
        log << std::string(to_string(cat)) << " rate: " << result.error_rate(cat) << "\n";
    return report;
}

inline BootstrapResult cmd_compare(const std::filesystem::path& a_dir, const std::filesystem::path& b_dir,
                                   BootstrapOptions opt, std::ostream& log) {
    const auto a = rewards_by_scenario(load_rollouts(a_dir));
    const auto b = rewards_by_scenario(load_rollouts(b_dir));
    require_same_scenarios(a, b);
    std::vector<double> va, vb;
    for (const auto& [id, r] : a) va.push_back(r);
    for (const auto& [id, r] : b) vb.push_back(r);
    auto res = paired_bootstrap(va, vb, opt);
    log << "mean difference " << res.observed_difference << ", p = " << res.p_value << " (" << res.resamples
        << " resamples)\n";
    return res;
}

/// Stability table (x, raw, smoothed) as CSV over runs aligned by scenario id.
inline StabilityCurve cmd_stability(const std::vector<std::filesystem::path>& run_dirs,
                                    const std::filesystem::path& out, std::ostream& log) {
    if (run_dirs.size() < 2) throw ConfigError("stability needs at least two result directories");
    std::vector<std::map<std::string, double>> runs;
    for (const auto& d : run_dirs) runs.push_back(rewards_by_scenario(load_rollouts(d)));
    for (std::size_t i = 1; i < runs.size(); ++i) require_same_scenarios(runs[0], runs[i]);
    std::vector<std::vector<double>> series;
    for (const auto& r : runs) {
        std::vector<double> v;
        for (const auto& [id, x] : r) v.push_back(x);
        series.push_back(std::move(v));
    }
    auto curve = stability_curve(series);
    std::string csv = "x,raw,smoothed\n";
    for (std::size_t i = 0; i < curve.x.size(); ++i) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "%.0f,%.10g,%.10g\n", curve.x[i], curve.raw[i], curve.smoothed[i]);
        csv += buf;
    }
    write_file_atomic(out, csv);
    log << "wrote " << curve.x.size() << " points to " << out.string() << "\n";
    return curve;
}

}  // namespace josh
