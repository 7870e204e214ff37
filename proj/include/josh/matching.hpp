#pragma once

#include "josh/goals.hpp"
#include "josh/scenario.hpp"

namespace josh {

/// True when `inv` completes `goal`: same API and either the goal arguments
/// are a subset of the call arguments, or both queries resolve to the same
/// single database row.
inline bool match_goal(const GoalApiCall& goal, const ApiInvocation& inv, const ScenarioEnv& env) {
    if (goal.api_name != inv.api_name) return false;
    if (is_subset(goal.arguments, inv.arguments)) return true;

    const auto underscore = goal.api_name.find('_');
    if (underscore == std::string::npos) return false;
    const auto& db = env.database(goal.api_name.substr(underscore + 1));
    auto goal_rows = db.query(goal.arguments);
    if (goal_rows.size() != 1) return false;
    auto call_rows = db.query(inv.arguments);
    return call_rows.size() == 1 && call_rows.front() == goal_rows.front();
}

/// Index of the first goal in `remaining` (goal-set order) matched by any of
/// the invocations, or nullopt.
template <class Invocations>
std::optional<std::size_t> first_matched_goal(const std::vector<std::size_t>& remaining,
                                              const Invocations& invocations, const ScenarioEnv& env) {
    for (auto idx : remaining)
        for (const ApiInvocation& inv : invocations)
            if (match_goal(env.goal_set[idx], inv, env)) return idx;
    return std::nullopt;
}

}  // namespace josh
