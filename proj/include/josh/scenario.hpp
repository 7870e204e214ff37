#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "josh/database.hpp"
#include "josh/goals.hpp"
#include "josh/registry.hpp"
#include "josh/serving.hpp"

namespace josh {

/// Malformed scenario record; the message names the offending field.
class LoadError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One conversation's environment. Immutable once loaded, so rollout branches
/// can share it freely.
struct ScenarioEnv {
    std::string scenario_id;
    GoalDictionary goals;
    std::vector<GoalApiCall> goal_set;
    std::map<std::string, std::shared_ptr<const DomainDatabase>> databases;
    std::vector<std::string> user_goals;
    std::optional<std::vector<std::string>> source_transcript;

    [[nodiscard]] const DomainDatabase& database(const std::string& domain) const {
        static const DomainDatabase kEmpty{};
        auto it = databases.find(domain);
        return it == databases.end() ? kEmpty : *it->second;
    }
};

namespace detail {

inline void check_keys(const ArgMap& args, const ApiSpec& spec, const std::string& field,
                       const std::string& skip = {}) {
    for (const auto& [k, v] : args) {
        if (k == skip) continue;
        if (!spec.has_parameter(k))
            throw LoadError(field + ": '" + k + "' is not a parameter of " + spec.name);
    }
}

inline ArgMap args_field(const json& j, const std::string& field) {
    if (!j.is_object()) throw LoadError(field + ": expected an object");
    try {
        return arg_map_from_json(j);
    } catch (const std::exception& e) {
        throw LoadError(field + ": " + e.what());
    }
}

}  // namespace detail

/// Parses the "goals" array of a scenario record.
inline GoalDictionary goals_from_json(const json& goals, const ApiRegistry& registry) {
    if (!goals.is_array()) throw LoadError("goals: expected an array");
    GoalDictionary dict;
    for (std::size_t i = 0; i < goals.size(); ++i) {
        const auto& g = goals[i];
        const std::string field = "goals[" + std::to_string(i) + "]";
        if (!g.is_object() || !g.contains("domain") || !g.at("domain").is_string())
            throw LoadError(field + ".domain: missing");
        DomainGoals d;
        d.domain = g.at("domain").get<std::string>();
        if (dict.find(d.domain)) throw LoadError(field + ".domain: duplicate domain " + d.domain);
        const ApiSpec* search = registry.find(d.domain, Intent::Search);
        if (!search) throw LoadError(field + ".domain: no search api for domain " + d.domain);

        if (g.contains("search")) {
            d.search = detail::args_field(g.at("search"), field + ".search");
            detail::check_keys(*d.search, *search, field + ".search");
        }
        if (g.contains("book")) {
            const ApiSpec* book = registry.find(d.domain, Intent::Book);
            if (!book) throw LoadError(field + ".book: domain " + d.domain + " has no book api");
            const auto& b = g.at("book");
            if (!b.is_object() || !b.contains("unique_id") || !b.at("unique_id").is_string())
                throw LoadError(field + ".book.unique_id: missing");
            BookGoal bg;
            bg.parameters = detail::args_field(b.value("parameters", json::object()),
                                               field + ".book.parameters");
            const auto id_field = unique_id_field(d.domain);
            detail::check_keys(bg.parameters, *book, field + ".book.parameters");
            bg.parameters.erase(id_field);
            bg.unique_id = canonical_value(b.at("unique_id").get<std::string>());
            bg.return_values = b.value("return", json::object());
            d.book = std::move(bg);
        }
        if (g.contains("fail")) {
            const auto& fails = g.at("fail");
            if (!fails.is_array()) throw LoadError(field + ".fail: expected an array");
            for (std::size_t k = 0; k < fails.size(); ++k) {
                auto f = detail::args_field(fails[k], field + ".fail[" + std::to_string(k) + "]");
                detail::check_keys(f, *search, field + ".fail[" + std::to_string(k) + "]");
                d.fail_searches.push_back(std::move(f));
            }
        }
        dict.domains.push_back(std::move(d));
    }
    return dict;
}

inline json goals_to_json(const GoalDictionary& dict) {
    json out = json::array();
    for (const auto& d : dict.domains) {
        json g{{"domain", d.domain}};
        if (d.search) g["search"] = to_json(*d.search);
        if (d.book)
            g["book"] = json{{"parameters", to_json(d.book->parameters)},
                             {"unique_id", d.book->unique_id},
                             {"return", d.book->return_values}};
        if (!d.fail_searches.empty()) {
            json fails = json::array();
            for (const auto& f : d.fail_searches) fails.push_back(to_json(f));
            g["fail"] = std::move(fails);
        }
        out.push_back(std::move(g));
    }
    return out;
}

/// Materializes a scenario record. Databases come from the record's inline
/// "databases" object when present, else from `base`; each is cleaned against
/// this scenario's fail-intended queries.
inline ScenarioEnv load_scenario(const json& record, const ApiRegistry& registry,
                                 const DatabaseSet& base = {}) {
    if (!record.is_object()) throw LoadError("record: expected an object");
    if (!record.contains("scenario_id") || !record.at("scenario_id").is_string())
        throw LoadError("scenario_id: missing");
    ScenarioEnv env;
    env.scenario_id = record.at("scenario_id").get<std::string>();
    if (!record.contains("goals")) throw LoadError("goals: missing");
    env.goals = goals_from_json(record.at("goals"), registry);
    env.goal_set = goal_calls(env.goals);
    if (env.goal_set.empty()) throw LoadError("goals: scenario has no goal api calls");

    if (record.contains("user_goals")) {
        const auto& ug = record.at("user_goals");
        if (!ug.is_array()) throw LoadError("user_goals: expected an array of strings");
        for (const auto& s : ug) {
            if (!s.is_string()) throw LoadError("user_goals: expected an array of strings");
            env.user_goals.push_back(s.get<std::string>());
        }
    }
    if (record.contains("transcript")) {
        const auto& tr = record.at("transcript");
        if (!tr.is_array()) throw LoadError("transcript: expected an array of strings");
        std::vector<std::string> lines;
        for (const auto& s : tr) {
            if (!s.is_string()) throw LoadError("transcript: expected an array of strings");
            lines.push_back(s.get<std::string>());
        }
        env.source_transcript = std::move(lines);
    }

    DatabaseSet source = base;
    if (record.contains("databases")) {
        const auto& dbs = record.at("databases");
        if (!dbs.is_object()) throw LoadError("databases: expected an object");
        for (auto it = dbs.begin(); it != dbs.end(); ++it) {
            try {
                source[it.key()] = database_from_json(it.key(), it.value());
            } catch (const DatabaseError& e) {
                throw LoadError("databases." + it.key() + ": " + e.what());
            }
        }
    }
    for (const auto& d : env.goals.domains)
        if (!source.count(d.domain)) throw LoadError("databases." + d.domain + ": missing");

    for (auto& [domain, db] : source) {
        const DomainGoals* g = env.goals.find(domain);
        if (g && !g->fail_searches.empty()) {
            try {
                env.databases[domain] = std::make_shared<const DomainDatabase>(clean_database(db, env.goals));
            } catch (const ScenarioInconsistency& e) {
                throw LoadError("goals." + domain + ".fail: " + e.what());
            }
        } else {
            env.databases[domain] = std::make_shared<const DomainDatabase>(db);
        }
    }
    return env;
}

/// Inverse of load_scenario (databases omitted unless requested).
inline json scenario_to_json(const ScenarioEnv& env, bool include_databases = false) {
    json j{{"scenario_id", env.scenario_id},
           {"goals", goals_to_json(env.goals)},
           {"user_goals", env.user_goals}};
    if (env.source_transcript) j["transcript"] = *env.source_transcript;
    if (include_databases) {
        json dbs = json::object();
        for (const auto& [domain, db] : env.databases) dbs[domain] = to_json(*db);
        j["databases"] = std::move(dbs);
    }
    return j;
}

/// Reads newline-delimited scenario records.
inline std::vector<json> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open " + path.string());
    std::vector<json> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::parse_error& e) {
            throw LoadError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace josh
