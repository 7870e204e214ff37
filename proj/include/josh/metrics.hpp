#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "josh/tree.hpp"

namespace josh {

struct ConversationResult {
    std::string scenario_id;
    Fraction average_reward;
    std::set<EnvErrorCategory> errors;  // categories seen at least once

    [[nodiscard]] bool full_success() const { return average_reward.is_one(); }
};

struct EvalResult {
    std::vector<ConversationResult> conversations;
    Fraction reward_sum;      // exact sum of per-conversation rewards
    std::size_t full_successes = 0;
    std::map<EnvErrorCategory, std::size_t> error_conversations;

    [[nodiscard]] std::size_t size() const { return conversations.size(); }
    [[nodiscard]] double avg_reward_mean() const { return reward_sum.value() / static_cast<double>(size()); }
    [[nodiscard]] double success_rate_100() const {
        return static_cast<double>(full_successes) / static_cast<double>(size());
    }
    [[nodiscard]] double error_rate(EnvErrorCategory c) const {
        auto it = error_conversations.find(c);
        return it == error_conversations.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(size());
    }
};

/// Result for one conversation: its reward plus every error category raised by
/// any agent turn in the tree.
inline ConversationResult conversation_result(const RolloutTree& tree) {
    ConversationResult r{tree.scenario_id, tree.ledger.average_reward(), {}};
    for (const auto& n : tree.nodes)
        for (const auto& e : n.events)
            if (const auto* err = std::get_if<EnvErrorEvent>(&e)) r.errors.insert(err->error.category);
    return r;
}

inline EvalResult evaluate_run(std::vector<ConversationResult> conversations) {
    if (conversations.empty()) throw std::invalid_argument("nothing to evaluate");
    EvalResult out;
    for (const auto& c : conversations) {
        out.reward_sum = out.reward_sum + c.average_reward;
        if (c.full_success()) ++out.full_successes;
        for (auto cat : c.errors) ++out.error_conversations[cat];
    }
    out.conversations = std::move(conversations);
    return out;
}

inline EvalResult evaluate_run(const std::vector<RolloutTree>& trees) {
    std::vector<ConversationResult> rs;
    rs.reserve(trees.size());
    for (const auto& t : trees) rs.push_back(conversation_result(t));
    return evaluate_run(std::move(rs));
}

inline json to_json(const EvalResult& r) {
    json rows = json::array();
    for (const auto& c : r.conversations) {
        json errs = json::array();
        for (auto cat : c.errors) errs.push_back(to_string(cat));
        rows.push_back({{"scenario_id", c.scenario_id},
                        {"average_reward", c.average_reward.value()},
                        {"average_reward_exact", std::to_string(c.average_reward.num) + "/" +
                                                     std::to_string(c.average_reward.den)},
                        {"full_success", c.full_success()},
                        {"errors", std::move(errs)}});
    }
    json rates = json::object();
    for (auto cat : {EnvErrorCategory::BadApiUse, EnvErrorCategory::IncorrectApiFormat})
        rates[std::string(to_string(cat))] = r.error_rate(cat);
    return json{{"conversations", r.size()},
                {"avg_reward_mean", r.avg_reward_mean()},
                {"success_rate_100", r.success_rate_100()},
                {"error_rate_by_category", std::move(rates)},
                {"per_conversation", std::move(rows)}};
}

}  // namespace josh
