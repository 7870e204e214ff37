// Command-line front end: ingest, rollout, extract, eval.
#include <iostream>

#include <CLI11.hpp>

#include "josh/josh.hpp"

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kTransport = 3, kData = 4 };

struct RolloutFlags {
    std::string config;
    std::string split;
    std::optional<int> branching_factor, max_beam, max_depth, parallelism;
    std::optional<std::uint64_t> seed;
    std::string backend;
    std::string out;
};

void add_rollout_flags(CLI::App* cmd, RolloutFlags& f) {
    cmd->add_option("--config", f.config, "run config (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--split", f.split, "train | val | test | official_test");
    cmd->add_option("--branching-factor", f.branching_factor, "agent samples per customer turn");
    cmd->add_option("--max-beam", f.max_beam, "maximum live conversations");
    cmd->add_option("--max-depth", f.max_depth, "maximum exchanges per conversation");
    cmd->add_option("--seed", f.seed, "base seed");
    cmd->add_option("--parallelism", f.parallelism, "scenarios simulated at once");
    cmd->add_option("--backend", f.backend, "live | scripted")->check(CLI::IsMember({"live", "scripted"}));
    cmd->add_option("--out", f.out, "rollout output directory");
}

josh::RunConfig resolve_config(const RolloutFlags& f) {
    auto cfg = josh::load_run_config(f.config);
    if (!f.split.empty()) cfg.split = f.split;
    if (f.branching_factor) cfg.beam.branching_factor = *f.branching_factor;
    if (f.max_beam) cfg.beam.max_beam = *f.max_beam;
    if (f.max_depth) cfg.beam.max_depth = *f.max_depth;
    if (f.seed) cfg.beam.seed = *f.seed;
    if (f.parallelism) cfg.parallelism = *f.parallelism;
    if (!f.backend.empty()) cfg.backend = f.backend == "live" ? josh::BackendKind::Live : josh::BackendKind::Scripted;
    if (!f.out.empty()) cfg.out = f.out;
    return cfg;
}

void write_report(const josh::json& report, const std::string& out) {
    if (out.empty()) std::cout << report.dump(2) << "\n";
    else josh::write_file_atomic(out, report.dump(2) + "\n");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Beam-search rollouts and preference data for tool-calling agents"};
    app.require_subcommand(1);

    std::string ingest_source, ingest_out;
    bool no_expected = false;
    auto* ingest = app.add_subcommand("ingest", "convert a MultiWOZ-style corpus into scenario files");
    ingest->add_option("source", ingest_source, "source corpus directory")->required();
    ingest->add_option("--out", ingest_out, "output directory")->required();
    ingest->add_flag("--no-expected", no_expected, "skip the split-size comparison");

    RolloutFlags rollout_flags;
    auto* rollout = app.add_subcommand("rollout", "run the beam search over a scenario set");
    add_rollout_flags(rollout, rollout_flags);

    std::string extract_dir, extract_format = "sft", extract_out;
    auto* extract = app.add_subcommand("extract", "build an SFT or KTO dataset from rollouts");
    extract->add_option("rollouts", extract_dir, "rollout directory")->required();
    extract->add_option("--format", extract_format, "sft | kto")->check(CLI::IsMember({"sft", "kto"}));
    extract->add_option("--out", extract_out, "dataset file (JSON lines)")->required();

    std::string eval_dir, eval_compare, eval_out, eval_config;
    std::vector<std::string> eval_stability;
    std::size_t resamples = 10000;
    std::uint64_t eval_seed = 0;
    auto* eval = app.add_subcommand("eval", "metrics, paired bootstrap and stability curves");
    eval->add_option("results", eval_dir, "result (rollout) directory");
    eval->add_option("--config", eval_config, "live mode: simulate first with one sample per turn");
    eval->add_option("--compare", eval_compare, "second result directory for a paired bootstrap");
    eval->add_option("--stability", eval_stability, "two or more result directories")->expected(2, -1);
    eval->add_option("--resamples", resamples, "bootstrap resamples");
    eval->add_option("--seed", eval_seed, "bootstrap seed");
    eval->add_option("--out", eval_out, "report path (JSON, or CSV for --stability)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }

    try {
        if (*ingest) {
            auto s = josh::cmd_ingest(ingest_source, ingest_out, std::cout, !no_expected);
            return kOk;
        }
        if (*rollout) {
            auto s = josh::cmd_rollout(resolve_config(rollout_flags), std::cout);
            return s.faulted ? kTransport : kOk;
        }
        if (*extract) {
            josh::cmd_extract(extract_dir, josh::dataset_format_from_string(extract_format), extract_out, std::cout);
            return kOk;
        }
        if (*eval) {
            if (!eval_stability.empty()) {
                std::vector<std::filesystem::path> dirs(eval_stability.begin(), eval_stability.end());
                josh::cmd_stability(dirs, eval_out.empty() ? "stability.csv" : eval_out, std::cout);
                return kOk;
            }
            std::size_t faulted = 0;
            if (!eval_config.empty()) {
                RolloutFlags f;
                f.config = eval_config;
                auto cfg = resolve_config(f);
                cfg.beam.branching_factor = 1;
                cfg.beam.max_beam = 1;
                if (!eval_dir.empty()) cfg.out = eval_dir;
                eval_dir = cfg.out.string();
                faulted = josh::cmd_rollout(cfg, std::cout).faulted;
            }
            if (eval_dir.empty()) throw josh::ConfigError("eval: give a result directory or --config");
            if (!eval_compare.empty()) {
                auto r = josh::cmd_compare(eval_dir, eval_compare, {resamples, eval_seed, 1}, std::cout);
                write_report({{"observed_difference", r.observed_difference},
                              {"p_value", r.p_value},
                              {"resamples", r.resamples}},
                             eval_out);
                return kOk;
            }
            write_report(josh::cmd_eval(eval_dir, std::cout), eval_out);
            return faulted ? kTransport : kOk;
        }
    } catch (const josh::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const josh::TransportError& e) {
        std::cerr << "transport error: " << e.what() << "\n";
        return kTransport;
    } catch (const std::exception& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kData;
    }
    return kOk;
}
