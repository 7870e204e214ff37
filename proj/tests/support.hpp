#pragma once

#include <filesystem>
#include <string>

#include <josh/josh.hpp>

namespace josh::test {

inline std::filesystem::path fixture_dir() { return JOSH_TEST_DIR "/fixtures"; }
inline std::filesystem::path golden_dir() { return JOSH_TEST_DIR "/golden"; }

inline const DatabaseSet& fixture_databases() {
    static const DatabaseSet dbs = load_databases(fixture_dir() / "db");
    return dbs;
}

inline std::vector<ScenarioEnv> fixture_scenarios() {
    std::vector<ScenarioEnv> out;
    for (const auto& rec : read_jsonl(fixture_dir() / "db" / "scenarios.jsonl"))
        out.push_back(load_scenario(rec, ApiRegistry::standard(), fixture_databases()));
    return out;
}

inline ScenarioEnv fixture_scenario(const std::string& id) {
    for (auto& env : fixture_scenarios())
        if (env.scenario_id == id) return env;
    throw std::out_of_range("no fixture scenario " + id);
}

/// Fresh scratch directory under the build tree, emptied on creation.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("josh_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace josh::test
