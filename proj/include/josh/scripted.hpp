#pragma once

#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "josh/agent.hpp"
#include "josh/matching.hpp"
#include "josh/user_sim.hpp"

// Deterministic agent and customer policies for tests and offline runs.
namespace josh::scripted {

/// Goal indices already completed by some tool call in `history`.
inline std::set<std::size_t> goals_done(const History& history, const ScenarioEnv& env) {
    std::set<std::size_t> done;
    for (const TurnNode* n : history) {
        if (n->kind != NodeKind::AgentTurn) continue;
        for (const auto& inv : n->invocations())
            for (std::size_t g = 0; g < env.goal_set.size(); ++g)
                if (!done.count(g) && match_goal(env.goal_set[g], inv, env)) done.insert(g);
    }
    return done;
}

inline std::optional<std::size_t> next_goal(const History& history, const ScenarioEnv& env) {
    auto done = goals_done(history, env);
    for (std::size_t g = 0; g < env.goal_set.size(); ++g)
        if (!done.count(g)) return g;
    return std::nullopt;
}

inline ChatMessage call(AgentStyle style, const std::string& api, const json& args) {
    return style == AgentStyle::React ? react_call(api, args) : fc_call(api, args);
}

inline ChatMessage say(AgentStyle style, const std::string& text) {
    return style == AgentStyle::React ? react_say(text) : ChatMessage::assistant(text);
}

inline ChatMessage goal_call(AgentStyle style, const GoalApiCall& g) {
    return call(style, g.api_name, to_json(g.arguments));
}

/// Issues the next unfinished goal call verbatim, then replies.
inline ScriptedAgent::Policy oracle(AgentStyle style) {
    return [style](const AgentTurnRequest& req, const ScenarioEnv& env) {
        std::vector<ChatMessage> out;
        if (auto g = next_goal(req.history, env)) out.push_back(goal_call(style, env.goal_set[*g]));
        out.push_back(say(style, "All set. Anything else?"));
        return out;
    };
}

/// Issues every unfinished goal call in a single turn.
inline ScriptedAgent::Policy greedy(AgentStyle style) {
    return [style](const AgentTurnRequest& req, const ScenarioEnv& env) {
        std::vector<ChatMessage> out;
        auto done = goals_done(req.history, env);
        for (std::size_t g = 0; g < env.goal_set.size(); ++g)
            if (!done.count(g)) out.push_back(goal_call(style, env.goal_set[g]));
        out.push_back(say(style, "Everything is booked."));
        return out;
    };
}

/// Never touches the tools.
inline ScriptedAgent::Policy silent(AgentStyle style) {
    return [style](const AgentTurnRequest&, const ScenarioEnv&) {
        return std::vector<ChatMessage>{say(style, "Could you tell me more?")};
    };
}

/// Acts like the oracle only on sample index `good`; other samples chat.
inline ScriptedAgent::Policy nth_sample(AgentStyle style, int good = 1) {
    return [style, good](const AgentTurnRequest& req, const ScenarioEnv& env) {
        if (req.sample_index != good) return std::vector<ChatMessage>{say(style, "Let me think about that.")};
        return oracle(style)(req, env);
    };
}

/// Oracle that misbehaves with probability `p` per turn, seeded by the
/// request seed. Faults: chatting without calls, a perturbed goal call, an
/// unknown api, or a malformed call (the last two may be followed by the
/// correct call).
inline ScriptedAgent::Policy noisy_oracle(AgentStyle style, double p) {
    return [style, p](const AgentTurnRequest& req, const ScenarioEnv& env) {
        std::mt19937_64 rng(req.seed);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        auto g = next_goal(req.history, env);
        std::vector<ChatMessage> out;
        if (!g || unit(rng) >= p) return oracle(style)(req, env);
        const GoalApiCall& goal = env.goal_set[*g];
        switch (std::uniform_int_distribution<int>(0, 3)(rng)) {
            case 0:
                break;
            case 1: {
                json args = to_json(goal.arguments);
                if (args.empty()) args["name"] = "nowhere";
                else args.begin().value() = "zzz-unknown";
                out.push_back(call(style, goal.api_name, args));
                break;
            }
            case 2:
                out.push_back(call(style, "search_flight", json{{"destination", "paris"}}));
                if (unit(rng) < 0.5) out.push_back(goal_call(style, goal));
                break;
            default:
                if (style == AgentStyle::React)
                    out.push_back(ChatMessage::assistant("THOUGHT: hmm\nACTION: " + goal.api_name +
                                                         "\nACTION-INPUT: {\"area\": \"north\""));
                else
                    out.push_back(ChatMessage{"assistant", std::nullopt,
                                              {WireToolCall{{}, goal.api_name, "{\"area\": "}}, std::nullopt});
                if (unit(rng) < 0.5) out.push_back(goal_call(style, goal));
                break;
        }
        out.push_back(say(style, "Is there anything else?"));
        return out;
    };
}

/// Customer that restates its goals and never hangs up.
inline ScriptedUser::Policy persistent_user() {
    return [](const UserStepRequest& req, const ScenarioEnv& env) {
        std::size_t spoken = 0;
        for (const TurnNode* n : req.history)
            if (n->kind == NodeKind::UserTurn) ++spoken;
        UserStepResponse r;
        r.utterance = env.user_goals.empty() ? std::string("Can you help me?")
                                             : env.user_goals[spoken % env.user_goals.size()];
        return r;
    };
}

}  // namespace josh::scripted
