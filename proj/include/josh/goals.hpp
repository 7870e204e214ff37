#pragma once

#include <optional>
#include <string>
#include <vector>

#include "josh/canonical.hpp"
#include "josh/registry.hpp"

namespace josh {

struct BookGoal {
    ArgMap parameters;     // booking slots, excluding the unique-id field
    std::string unique_id; // name or trainID of the entity to book
    json return_values = json::object();

    friend bool operator==(const BookGoal&, const BookGoal&) = default;
};

/// Per-domain goal slots for one conversation.
struct DomainGoals {
    std::string domain;
    std::optional<ArgMap> search;
    std::optional<BookGoal> book;
    std::vector<ArgMap> fail_searches;  // queries that must come back empty

    friend bool operator==(const DomainGoals&, const DomainGoals&) = default;
};

/// Goal dictionary keyed by domain, kept in source order.
struct GoalDictionary {
    std::vector<DomainGoals> domains;

    [[nodiscard]] const DomainGoals* find(std::string_view domain) const {
        for (const auto& d : domains)
            if (d.domain == domain) return &d;
        return nullptr;
    }

    friend bool operator==(const GoalDictionary&, const GoalDictionary&) = default;
};

/// A target tool call; completing it earns one unit of sparse reward.
struct GoalApiCall {
    std::string api_name;
    ArgMap arguments;
    std::optional<std::string> unique_id;  // book goals only
    json return_values = json::object();   // book goals only

    friend bool operator==(const GoalApiCall&, const GoalApiCall&) = default;
};

/// An agent tool call that passed validation.
struct ApiInvocation {
    std::string api_name;
    ArgMap arguments;

    friend bool operator==(const ApiInvocation&, const ApiInvocation&) = default;
};

struct BookingResult {
    bool success = false;
    std::optional<json> return_values;
};

/// Flattens a goal dictionary into goal API calls: search before book within
/// each domain, domains in dictionary order.
inline std::vector<GoalApiCall> goal_calls(const GoalDictionary& goals) {
    std::vector<GoalApiCall> out;
    for (const auto& d : goals.domains) {
        if (d.search)
            out.push_back({"search_" + d.domain, *d.search, std::nullopt, json::object()});
        if (d.book) {
            ArgMap args = d.book->parameters;
            args[unique_id_field(d.domain)] = d.book->unique_id;
            out.push_back({"book_" + d.domain, args, d.book->unique_id, d.book->return_values});
        }
    }
    return out;
}

inline json to_json(const GoalApiCall& g) {
    json j{{"api_name", g.api_name}, {"arguments", to_json(g.arguments)}};
    if (g.unique_id) {
        j["unique_id"] = *g.unique_id;
        j["return"] = g.return_values;
    }
    return j;
}

inline json to_json(const ApiInvocation& inv) {
    return json{{"api_name", inv.api_name}, {"arguments", to_json(inv.arguments)}};
}

inline ArgMap arg_map_from_json(const json& j) {
    ArgMap out;
    for (auto it = j.begin(); it != j.end(); ++it) {
        std::string v;
        if (!scalar_to_canonical(it.value(), v))
            throw std::invalid_argument("argument '" + it.key() + "' is not a scalar");
        out.emplace(trim(it.key()), std::move(v));
    }
    return out;
}

inline ApiInvocation invocation_from_json(const json& j) {
    return {j.at("api_name").get<std::string>(), arg_map_from_json(j.at("arguments"))};
}

}  // namespace josh
