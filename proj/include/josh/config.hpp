#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "josh/chat_client.hpp"
#include "josh/io.hpp"
#include "josh/tree.hpp"
#include "josh/tree_io.hpp"

namespace josh {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class BackendKind { Scripted, Live };

struct ScriptedBackendConfig {
    std::string agent = "oracle";  // oracle | greedy | silent | nth_sample | noisy
    double noise = 0.3;            // noisy only
    int good_sample = 1;           // nth_sample only
    std::string user = "goal";     // goal | persistent
};

struct ModelEndpoint {
    EndpointConfig endpoint;
    SamplingParams sampling;
};

struct RunConfig {
    std::filesystem::path scenarios;  // scenario JSONL
    std::filesystem::path databases;  // directory of <domain>_db.json; may be empty
    std::filesystem::path splits_dir; // directory of <split>.txt manifests
    std::optional<std::string> split;
    std::filesystem::path out = "rollouts";
    BeamConfig beam;
    int parallelism = 1;
    BackendKind backend = BackendKind::Scripted;
    AgentStyle agent_style = AgentStyle::React;
    int agent_step_limit = 10;
    ScriptedBackendConfig scripted;
    ModelEndpoint agent;
    std::string user_kind = "goal";  // goal | guide
    ModelEndpoint user;

    void validate() const {
        if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
        try {
            beam.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("beam: ") + e.what());
        }
        if (scenarios.empty()) throw ConfigError("scenarios: path required");
        if (!std::filesystem::exists(scenarios)) throw ConfigError("scenarios: not found: " + scenarios.string());
        if (!databases.empty() && !std::filesystem::is_directory(databases))
            throw ConfigError("databases: not a directory: " + databases.string());
        if (split && !std::filesystem::exists(splits_dir / (*split + ".txt")))
            throw ConfigError("split: no manifest " + (splits_dir / (*split + ".txt")).string());
        if (backend == BackendKind::Live) {
            if (agent.endpoint.model.empty()) throw ConfigError("agent.model: required for live backends");
            if (user.endpoint.model.empty()) throw ConfigError("user.model: required for live backends");
            if (user_kind != "goal" && user_kind != "guide") throw ConfigError("user.kind: expected goal or guide");
        }
    }
};

namespace detail {

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

inline ModelEndpoint endpoint_from_json(const json& j, SamplingParams default_sampling) {
    ModelEndpoint m;
    m.sampling = default_sampling;
    if (j.contains("base_url")) m.endpoint.base_url = j.at("base_url").get<std::string>();
    if (j.contains("model")) m.endpoint.model = j.at("model").get<std::string>();
    if (j.contains("api_key_env")) m.endpoint.api_key_env = j.at("api_key_env").get<std::string>();
    if (j.contains("timeout_s")) m.endpoint.timeout = std::chrono::seconds(j.at("timeout_s").get<int>());
    if (j.contains("requests_per_second")) m.endpoint.requests_per_second = j.at("requests_per_second").get<double>();
    if (j.contains("max_attempts")) m.endpoint.retry.max_attempts = j.at("max_attempts").get<int>();
    if (j.contains("sampling")) {
        const auto& s = j.at("sampling");
        if (s.is_string()) {
            const auto name = s.get<std::string>();
            if (name == "open") m.sampling = SamplingParams::open_model_defaults();
            else if (name == "hosted") m.sampling = SamplingParams::hosted_model_defaults();
            else throw ConfigError("sampling: expected open, hosted or an object");
        } else {
            m.sampling = sampling_from_json(s);
        }
    }
    return m;
}

}  // namespace detail

/// Reads a JSON run config. Relative paths resolve against the config file's
/// directory; credentials only ever come from the environment.
inline RunConfig load_run_config(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const IoError& e) {
        throw ConfigError(e.what());
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError(path.string() + ": expected an object");
    const auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    RunConfig c;
    try {
        if (j.contains("scenarios")) c.scenarios = detail::resolve(base, j.at("scenarios").get<std::string>());
        c.databases = j.contains("databases") ? detail::resolve(base, j.at("databases").get<std::string>())
                                              : c.scenarios.parent_path();
        c.splits_dir = j.contains("splits_dir") ? detail::resolve(base, j.at("splits_dir").get<std::string>())
                                                : c.scenarios.parent_path() / "splits";
        if (j.contains("split")) c.split = j.at("split").get<std::string>();
        if (j.contains("out")) c.out = detail::resolve(base, j.at("out").get<std::string>());
        if (j.contains("parallelism")) c.parallelism = j.at("parallelism").get<int>();
        if (j.contains("beam")) {
            const auto& b = j.at("beam");
            c.beam.branching_factor = b.value("branching_factor", c.beam.branching_factor);
            c.beam.max_beam = b.value("max_beam", c.beam.max_beam);
            c.beam.max_depth = b.value("max_depth", c.beam.max_depth);
            c.beam.seed = b.value("seed", c.beam.seed);
        }
        if (j.contains("backend")) {
            const auto b = j.at("backend").get<std::string>();
            if (b == "scripted") c.backend = BackendKind::Scripted;
            else if (b == "live") c.backend = BackendKind::Live;
            else throw ConfigError("backend: expected live or scripted");
        }
        if (j.contains("scripted")) {
            const auto& s = j.at("scripted");
            c.scripted.agent = s.value("agent", c.scripted.agent);
            c.scripted.noise = s.value("noise", c.scripted.noise);
            c.scripted.good_sample = s.value("good_sample", c.scripted.good_sample);
            c.scripted.user = s.value("user", c.scripted.user);
        }
        if (j.contains("agent")) {
            const auto& a = j.at("agent");
            if (a.contains("style")) c.agent_style = agent_style_from_string(a.at("style").get<std::string>());
            c.agent_step_limit = a.value("step_limit", c.agent_step_limit);
            c.agent = detail::endpoint_from_json(a, SamplingParams::hosted_model_defaults());
        }
        c.beam.agent_sampling = c.agent.sampling;
        if (j.contains("user")) {
            const auto& u = j.at("user");
            c.user_kind = u.value("kind", c.user_kind);
            c.user = detail::endpoint_from_json(u, SamplingParams::hosted_model_defaults());
        }
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return c;
}

}  // namespace josh
