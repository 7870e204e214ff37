#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "josh/database.hpp"
#include "josh/goals.hpp"

namespace josh {

class ScenarioInconsistency : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Adversarial search serving. Returns the goal entity only when the query
/// covers every goal search slot; an under-specified query gets a plausible
/// but wrong entity when one exists.
inline std::vector<Row> serve_search(const ArgMap& args, const std::string& domain,
                                     const GoalDictionary& goals, const DomainDatabase& db) {
    const DomainGoals* g = goals.find(domain);
    static const ArgMap kNoParameters;
    const ArgMap& goal_parameters = (g && g->search) ? *g->search : kNoParameters;
    const bool has_book = g && g->book;
    const std::optional<std::string> booking_id =
        has_book ? std::optional<std::string>(g->book->unique_id) : std::nullopt;

    const std::vector<Row> db_results = db.query(args);
    const std::string id_field = unique_id_field(domain);

    // Later rows overwrite earlier ones, as in the reference loop.
    const Row* correct_answer = nullptr;
    const Row* wrong_answer = nullptr;
    for (const auto& result : db_results) {
        if (has_book) {
            auto it = result.find(id_field);
            if (it != result.end() && it->second == *booking_id) correct_answer = &result;
        }
        if (!is_subset(goal_parameters, result)) wrong_answer = &result;
    }

    if (is_subset(goal_parameters, args)) {
        if (booking_id) {
            if (correct_answer) return {*correct_answer};
            if (wrong_answer) return {*wrong_answer};
            return {};
        }
    } else if (is_subset(args, goal_parameters)) {
        if (wrong_answer) return {*wrong_answer};
        if (booking_id && correct_answer) return {*correct_answer};
    }
    if (db_results.empty()) return {};
    return {db_results.front()};
}

/// Booking succeeds only for the goal entity.
inline BookingResult serve_booking(const ArgMap& args, const std::string& domain,
                                   const GoalDictionary& goals) {
    const DomainGoals* g = goals.find(domain);
    if (g && g->book) {
        auto it = args.find(unique_id_field(domain));
        if (it != args.end() && it->second == g->book->unique_id)
            return {true, g->book->return_values};
        return {false, std::nullopt};
    }
    return {false, std::nullopt};
}

inline json to_json(const BookingResult& r) {
    return json{{"success", r.success}, {"return", r.return_values ? *r.return_values : json(nullptr)}};
}

/// Removes every row matched by a fail-intended query so that those queries
/// come back empty. Throws ScenarioInconsistency when doing so would drop the
/// booked entity or empty the goal search.
inline DomainDatabase clean_database(const DomainDatabase& db, const GoalDictionary& goals) {
    const DomainGoals* g = goals.find(db.domain);
    if (!g || g->fail_searches.empty()) return db;

    auto doomed = [&](const Row& r) {
        for (const auto& fail : g->fail_searches)
            if (DomainDatabase::satisfies(r, fail)) return true;
        return false;
    };

    DomainDatabase out{db.domain, {}};
    out.rows.reserve(db.rows.size());
    for (const auto& r : db.rows)
        if (!doomed(r)) out.rows.push_back(r);

    if (g->book && db.find_unique(g->book->unique_id) && !out.find_unique(g->book->unique_id))
        throw ScenarioInconsistency("fail query for " + db.domain + " removes booked entity '" +
                                    g->book->unique_id + "'");
    if (g->search && !db.query(*g->search).empty() && out.query(*g->search).empty())
        throw ScenarioInconsistency("fail query for " + db.domain +
                                    " removes every result of the goal search");
    return out;
}

}  // namespace josh
