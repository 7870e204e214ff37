#include <cstdlib>
#include <sstream>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace josh;
namespace fs = std::filesystem;

namespace {

RunConfig scripted_config(const fs::path& out) {
    auto cfg = load_run_config(josh::test::fixture_dir() / "rollout_scripted.json");
    cfg.out = out;
    return cfg;
}

std::string artifact_bytes(const fs::path& dir) {
    std::string all;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().string().ends_with(kArtifactSuffix)) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) all += f.filename().string() + "\n" + read_file(f);
    return all;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(JOSH_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

TEST(Config, LoadsAndResolvesRelativePaths) {
    auto cfg = load_run_config(josh::test::fixture_dir() / "rollout_scripted.json");
    EXPECT_EQ(cfg.scenarios, josh::test::fixture_dir() / "db/scenarios.jsonl");
    EXPECT_EQ(cfg.databases, josh::test::fixture_dir() / "db");
    EXPECT_EQ(cfg.splits_dir, josh::test::fixture_dir() / "db/splits");
    EXPECT_EQ(cfg.beam.branching_factor, 2);
    EXPECT_EQ(cfg.beam.max_beam, 8);
    EXPECT_EQ(cfg.beam.max_depth, 8);
    EXPECT_EQ(cfg.beam.seed, 11u);
    EXPECT_EQ(cfg.parallelism, 2);
    EXPECT_EQ(cfg.scripted.agent, "noisy");
    EXPECT_NO_THROW(cfg.validate());
}

TEST(Config, RejectsBadValues) {
    const auto dir = josh::test::scratch_dir("config");
    auto write = [&](const json& j) {
        write_file_atomic(dir / "c.json", j.dump());
        return dir / "c.json";
    };
    const std::string scen = (josh::test::fixture_dir() / "db/scenarios.jsonl").string();
    EXPECT_THROW(load_run_config(dir / "missing.json"), ConfigError);
    write_file_atomic(dir / "bad.json", "{nope");
    EXPECT_THROW(load_run_config(dir / "bad.json"), ConfigError);
    EXPECT_THROW(load_run_config(write({{"scenarios", scen}, {"backend", "quantum"}})), ConfigError);
    EXPECT_THROW(load_run_config(write({{"scenarios", scen}, {"agent", {{"sampling", "warm"}}}})), ConfigError);
    EXPECT_THROW(load_run_config(write({{"scenarios", scen}, {"beam", {{"branching_factor", 9}}}})).validate(),
                 ConfigError);
    EXPECT_THROW(load_run_config(write({{"scenarios", scen}, {"split", "nope"}})).validate(), ConfigError);
    EXPECT_THROW(load_run_config(write({{"scenarios", scen}, {"backend", "live"}})).validate(), ConfigError);
    auto open = load_run_config(write({{"scenarios", scen}, {"agent", {{"sampling", "open"}, {"model", "m"}}}}));
    EXPECT_EQ(open.beam.agent_sampling, SamplingParams::open_model_defaults());
}

// ---------------------------------------------------------------------------
// Rollout, resume and extraction

TEST(EndToEndDeterminism, TwoRunsProduceIdenticalDatasets) {
    std::ostringstream log;
    std::string sft[2], kto[2], artifacts[2];
    for (int run = 0; run < 2; ++run) {
        const auto dir = josh::test::scratch_dir("e2e_" + std::to_string(run));
        auto cfg = scripted_config(dir / "rollouts");
        auto s = cmd_rollout(cfg, log);
        EXPECT_EQ(s.completed, 5u);
        EXPECT_EQ(s.faulted, 0u);
        cmd_extract(dir / "rollouts", DatasetFormat::Sft, dir / "sft.jsonl", log);
        cmd_extract(dir / "rollouts", DatasetFormat::Kto, dir / "kto.jsonl", log);
        sft[run] = read_file(dir / "sft.jsonl");
        kto[run] = read_file(dir / "kto.jsonl");
        artifacts[run] = artifact_bytes(dir / "rollouts");
    }
    EXPECT_FALSE(sft[0].empty());
    EXPECT_FALSE(kto[0].empty());
    EXPECT_EQ(sft[0], sft[1]);
    EXPECT_EQ(kto[0], kto[1]);
    EXPECT_EQ(artifacts[0], artifacts[1]);
}

TEST(EndToEndDeterminism, SerialAndParallelRunsAgree) {
    std::ostringstream log;
    const auto dir = josh::test::scratch_dir("e2e_parallel");
    auto a = scripted_config(dir / "a");
    a.parallelism = 1;
    auto b = scripted_config(dir / "b");
    b.parallelism = 4;
    cmd_rollout(a, log);
    cmd_rollout(b, log);
    EXPECT_EQ(artifact_bytes(dir / "a"), artifact_bytes(dir / "b"));
}

TEST(Resume, SkipsFinishedAndRetriesFaulted) {
    std::ostringstream log;
    const auto dir = josh::test::scratch_dir("resume");
    auto cfg = scripted_config(dir / "rollouts");
    cmd_rollout(cfg, log);
    const auto before = artifact_bytes(dir / "rollouts");

    // Remove one artifact and corrupt another into a faulted run.
    fs::remove(dir / "rollouts" / artifact_name("fx-train"));
    const auto faulted_path = dir / "rollouts" / artifact_name("fx-fail");
    auto j = json::parse(read_file(faulted_path));
    j["terminated_reason"] = "Fault";
    write_file_atomic(faulted_path, j.dump(1) + "\n");
    write_file_atomic(dir / "rollouts" / artifact_name("fx-attraction"), "{truncated");

    auto s = cmd_rollout(cfg, log);
    EXPECT_EQ(s.resumed, 2u);
    EXPECT_EQ(s.completed, 3u);
    EXPECT_EQ(artifact_bytes(dir / "rollouts"), before);
    EXPECT_TRUE(fs::exists(dir / "rollouts" / "usage_summary.json"));

    std::size_t lines = 0;
    std::istringstream progress(read_file(dir / "rollouts" / "progress.jsonl"));
    for (std::string line; std::getline(progress, line);) {
        auto p = json::parse(line);
        EXPECT_TRUE(p.contains("time"));
        ++lines;
    }
    EXPECT_EQ(lines, 10u);
}

TEST(Rollout, SplitSelectsManifestScenarios) {
    std::ostringstream log;
    const auto dir = josh::test::scratch_dir("split");
    auto cfg = scripted_config(dir / "rollouts");
    cfg.split = "test";
    auto s = cmd_rollout(cfg, log);
    EXPECT_EQ(s.total, 2u);
    EXPECT_TRUE(fs::exists(dir / "rollouts" / artifact_name("fx-train")));
    EXPECT_FALSE(fs::exists(dir / "rollouts" / artifact_name("fx-restaurant")));
}

TEST(Extract, OracleAgentKeepsEverything) {
    std::ostringstream log;
    const auto dir = josh::test::scratch_dir("oracle");
    auto cfg = scripted_config(dir / "rollouts");
    cfg.scripted.agent = "oracle";
    cmd_rollout(cfg, log);
    auto s = cmd_extract(dir / "rollouts", DatasetFormat::Sft, dir / "sft.jsonl", log);
    EXPECT_EQ(s.total, 5u);
    EXPECT_EQ(s.kept, 5u);
    EXPECT_EQ(s.records, 5u);
    auto k = cmd_extract(dir / "rollouts", DatasetFormat::Kto, dir / "kto.jsonl", log);
    EXPECT_EQ(k.upvotes + k.downvotes, k.records);
    EXPECT_GT(k.upvotes, 0u);

    auto report = cmd_eval(dir / "rollouts", log);
    EXPECT_EQ(report.at("success_rate_100"), 1.0);
    EXPECT_EQ(report.at("avg_reward_mean"), 1.0);
}

TEST(Eval, CompareAndStability) {
    std::ostringstream log;
    const auto dir = josh::test::scratch_dir("eval");
    auto good = scripted_config(dir / "good");
    good.scripted.agent = "oracle";
    auto bad = scripted_config(dir / "bad");
    bad.scripted.agent = "silent";
    auto noisy = scripted_config(dir / "noisy");
    cmd_rollout(good, log);
    cmd_rollout(bad, log);
    cmd_rollout(noisy, log);
    auto r = cmd_compare(dir / "good", dir / "bad", {1000, 1, 1}, log);
    EXPECT_DOUBLE_EQ(r.observed_difference, 1.0);
    EXPECT_EQ(r.p_value, 0.0);
    auto same = cmd_compare(dir / "good", dir / "good", {1000, 1, 1}, log);
    EXPECT_EQ(same.p_value, 1.0);

    auto curve = cmd_stability({dir / "good", dir / "bad", dir / "noisy"}, dir / "stability.csv", log);
    EXPECT_EQ(curve.x.size(), 5u);
    auto csv = read_file(dir / "stability.csv");
    EXPECT_TRUE(csv.starts_with("x,raw,smoothed\n1,"));

    auto split = scripted_config(dir / "subset");
    split.split = "test";
    cmd_rollout(split, log);
    EXPECT_THROW(cmd_compare(dir / "good", dir / "subset", {1000, 1, 1}, log), DataError);
    EXPECT_THROW(load_rollouts(dir / "missing"), DataError);
}

// ---------------------------------------------------------------------------
// Ingest

TEST(Ingest, ToyCorpus) {
    std::ostringstream log;
    const auto out = josh::test::scratch_dir("ingest");
    auto s = cmd_ingest(josh::test::fixture_dir() / "toy_corpus", out, log, true);
    EXPECT_EQ(s.source, 10u);
    EXPECT_EQ(s.converted, 8u);
    EXPECT_EQ(s.skipped, 2u);
    EXPECT_EQ(read_id_list(out / "splits/val.txt"), (std::vector<std::string>{"SNG0002", "SNG0008"}));
    EXPECT_EQ(read_id_list(out / "splits/test.txt"), (std::vector<std::string>{"SNG0010", "SNG0001", "MUL0009"}));
    EXPECT_EQ(read_id_list(out / "splits/train.txt"), (std::vector<std::string>{"MUL0005", "SNG0003", "SNG0006"}));
    EXPECT_EQ(read_id_list(out / "splits/official_test.txt"),
              (std::vector<std::string>{"SNG0010", "SNG0001", "MUL0009"}));
    EXPECT_EQ(s.warnings.size(), 4u);  // toy sizes differ from the full corpus

    // The written scenarios load against the written databases.
    auto dbs = load_databases(out);
    std::size_t n = 0;
    for (const auto& rec : read_jsonl(out / "scenarios.jsonl")) {
        auto env = load_scenario(rec, ApiRegistry::standard(), dbs);
        EXPECT_FALSE(env.goal_set.empty());
        EXPECT_FALSE(env.user_goals.empty());
        for (const auto& u : env.user_goals) EXPECT_EQ(u.find('<'), std::string::npos);
        ++n;
    }
    EXPECT_EQ(n, 8u);
}

TEST(Ingest, GoalConversion) {
    const json goal{{"train",
                     {{"info", {{"departure", "Cambridge"}, {"leaveAt", "09:00"}}},
                      {"book", {{"people", "2"}}},
                      {"reqt", {"price"}}}},
                    {"hotel", json::object()},
                    {"restaurant", {{"fail_info", {{"food", "chinese"}}}, {"info", {{"food", "italian"}}}}}};
    BookedEntities booked{{"train", json{{"trainID", "TR2000"}, {"reference", "ABC"}}}};
    auto dict = convert_goals(goal, booked);
    ASSERT_EQ(dict.domains.size(), 2u);
    const auto* train = dict.find("train");
    ASSERT_TRUE(train && train->book);
    EXPECT_EQ(train->book->unique_id, "tr2000");
    EXPECT_EQ(train->book->return_values, (json{{"reference", "ABC"}}));
    EXPECT_EQ(*train->search, (ArgMap{{"departure", "cambridge"}, {"leaveAt", "09:00"}}));
    EXPECT_EQ(dict.find("restaurant")->fail_searches.size(), 1u);

    EXPECT_THROW(convert_goals(json{{"attraction", {{"book", {{"people", "2"}}}}}}), ConversionError);
    try {
        convert_goals(json{{"hotel", {{"info", {{"colour", "red"}}}}}, {"police", {{"info", {{"x", "y"}}}}}});
        FAIL();
    } catch (const ConversionError& e) {
        EXPECT_GE(e.unmapped().size(), 2u);
    }
}

TEST(CorpusCounts, FullCorpusReproducesSplitSizes) {
    const char* dir = std::getenv("JOSH_MULTIWOZ_DIR");
    if (!dir || !*dir) GTEST_SKIP() << "set JOSH_MULTIWOZ_DIR to a MultiWOZ 2.x data directory";
    auto rep = ingest_corpus(dir, ExpectedCounts{});
    EXPECT_EQ(rep.splits.get(Split::Train).scenario_ids.size(), 6251u);
    EXPECT_EQ(rep.splits.get(Split::Val).scenario_ids.size(), 793u);
    EXPECT_EQ(rep.splits.get(Split::Test).scenario_ids.size(), 805u);
    EXPECT_EQ(rep.splits.get(Split::OfficialTest).scenario_ids.size(), 450u);
    EXPECT_EQ(rep.scenarios.size(), 7849u);
    EXPECT_TRUE(rep.splits.warnings.empty());
}

// ---------------------------------------------------------------------------
// Binary

TEST(Cli, ExitCodes) {
    const auto dir = josh::test::scratch_dir("cli");
    const auto cfg = (josh::test::fixture_dir() / "rollout_scripted.json").string();
    const auto out = (dir / "rollouts").string();
    EXPECT_EQ(run_cli("rollout --config " + cfg + " --out " + out + " --max-depth 4"), 0);
    EXPECT_EQ(run_cli("extract " + out + " --format kto --out " + (dir / "kto.jsonl").string()), 0);
    EXPECT_EQ(run_cli("eval " + out + " --out " + (dir / "report.json").string()), 0);
    EXPECT_EQ(json::parse(read_file(dir / "report.json")).at("conversations"), 5);
    EXPECT_EQ(run_cli("rollout --config " + cfg + " --out " + out + " --branching-factor 9"), 2);
    EXPECT_EQ(run_cli("frobnicate"), 2);
    EXPECT_EQ(run_cli("extract " + (dir / "nothing").string() + " --out " + (dir / "x.jsonl").string()), 4);

    // A live backend pointed at a closed port faults every scenario.
    write_file_atomic(dir / "live.json",
                      json{{"scenarios", (josh::test::fixture_dir() / "db/scenarios.jsonl").string()},
                           {"backend", "live"},
                           {"beam", {{"max_depth", 1}}},
                           {"agent", {{"model", "m"}, {"base_url", "http://127.0.0.1:9/v1"}, {"max_attempts", 1}}},
                           {"user", {{"model", "m"}, {"base_url", "http://127.0.0.1:9/v1"}, {"max_attempts", 1}}}}
                          .dump());
    EXPECT_EQ(run_cli("rollout --config " + (dir / "live.json").string() + " --out " + (dir / "live").string()), 3);
}
