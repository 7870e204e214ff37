#pragma once

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "josh/agent.hpp"
#include "josh/hash.hpp"
#include "josh/matching.hpp"
#include "josh/parallel.hpp"
#include "josh/scenario.hpp"
#include "josh/tree.hpp"
#include "josh/user_sim.hpp"

namespace josh {

template <class A>
concept AgentPolicy = requires(A& a, const AgentTurnRequest& r, const ScenarioEnv& e, const ApiRegistry& reg) {
    { a.agent_turn(r, e) } -> std::same_as<AgentTurnResponse>;
    { a.style() } -> std::same_as<AgentStyle>;
    { a.system_prompt(reg) } -> std::convertible_to<std::string>;
};

template <class U>
concept UserPolicy = requires(U& u, const UserStepRequest& r, const ScenarioEnv& e) {
    { u.user_step(r, e) } -> std::same_as<UserStepResponse>;
};

/// Seed for one backend call, a pure function of its position in the tree.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view scenario, NodeId parent, int sample,
                                 std::uint64_t role) {
    std::uint64_t s = splitmix64(base ^ fnv1a64(scenario));
    s = splitmix64(s ^ (static_cast<std::uint64_t>(parent) * 0x100000001b3ULL));
    s = splitmix64(s ^ static_cast<std::uint64_t>(sample));
    return splitmix64(s ^ role) >> 1;  // positive when read as int64 by a server
}

/// Number of agent samples to draw per live user turn.
struct ExpansionPlan {
    std::size_t samples_per_leaf = 1;
    std::size_t total = 0;
};

/// Branch only while the whole beam still fits: live * bf + frozen <= max_beam.
inline ExpansionPlan expand_leaves(std::size_t live_leaves, std::size_t frozen_leaves, const BeamConfig& cfg) {
    const auto bf = static_cast<std::size_t>(cfg.branching_factor);
    ExpansionPlan plan;
    plan.samples_per_leaf = (live_leaves * bf + frozen_leaves <= static_cast<std::size_t>(cfg.max_beam)) ? bf : 1;
    plan.total = live_leaves * plan.samples_per_leaf;
    return plan;
}

struct PruneEvent {
    NodeId node;
    std::size_t goal;
};

/// Scans agent-turn leaves in creation order. The first leaf whose own tool
/// calls complete a remaining goal becomes the new root and is credited; other
/// leaves that completed a remaining goal in the same step are marked partial
/// credit. The new root is then rescanned so that a turn completing several
/// goals earns one credit per event.
inline std::vector<PruneEvent> check_rewards_and_prune(RolloutTree& tree, const ScenarioEnv& env) {
    std::vector<PruneEvent> events;
    std::optional<NodeId> winner;
    std::optional<std::size_t> winner_goal;
    const auto remaining = tree.ledger.remaining();
    for (NodeId leaf : tree.leaves) {
        TurnNode& n = tree.node(leaf);
        if (n.kind != NodeKind::AgentTurn || n.fault) continue;
        auto g = first_matched_goal(remaining, n.invocations(), env);
        if (!g) continue;
        if (!winner) {
            winner = leaf;
            winner_goal = g;
        } else {
            n.partial_credit = true;
            n.achieved_goals = {*g};
        }
    }
    if (!winner) return events;

    TurnNode& w = tree.node(*winner);
    auto credit = [&](std::size_t goal) {
        tree.ledger.credit(goal, *winner);
        w.achieved_goals.push_back(goal);
        events.push_back({*winner, goal});
    };
    credit(*winner_goal);
    tree.root = *winner;
    tree.leaves = {*winner};
    while (auto more = first_matched_goal(tree.ledger.remaining(), w.invocations(), env)) credit(*more);
    return events;
}

namespace detail {

inline NodeId attach(RolloutTree& tree, NodeId parent, NodeKind kind, int depth, int sample) {
    TurnNode n;
    n.id = tree.nodes.size();
    n.parent = parent;
    n.kind = kind;
    n.depth = depth;
    n.sample_index = sample;
    tree.nodes.push_back(std::move(n));
    tree.node(parent).children.push_back(tree.nodes.back().id);
    return tree.nodes.back().id;
}

inline History history_of(const RolloutTree& tree, NodeId id) {
    History h;
    for (NodeId p : tree.path_to(id)) h.push_back(&tree.node(p));
    return h;
}

constexpr std::uint64_t kUserRole = 0x55;
constexpr std::uint64_t kAgentRole = 0xa7;

}  // namespace detail

/// Turn-level beam search over agent/customer exchanges. Backend calls for
/// distinct leaves may run concurrently; the tree is only mutated between
/// phases, in leaf creation order, so results are independent of scheduling.
template <AgentPolicy Agent, UserPolicy User>
RolloutTree run_rollout(const ScenarioEnv& env, Agent& agent, User& user, const BeamConfig& cfg,
                        const ApiRegistry& registry = ApiRegistry::standard()) {
    cfg.validate();
    RolloutTree tree;
    tree.scenario_id = env.scenario_id;
    tree.config = cfg;
    tree.agent_style = agent.style();
    tree.system_prompt = agent.system_prompt(registry);
    tree.ledger = RewardLedger(env.goal_set.size());
    tree.nodes.push_back(TurnNode{});
    tree.root = tree.original_root = 0;
    tree.leaves = {0};
    tree.beam_trace.push_back(1);

    bool out_of_leaves = false;
    for (int depth = 1; depth <= cfg.max_depth && !tree.ledger.remaining().empty(); ++depth) {
        std::vector<NodeId> live, frozen;
        for (NodeId l : tree.leaves) (tree.node(l).frozen() ? frozen : live).push_back(l);
        if (live.empty()) {
            out_of_leaves = true;
            break;
        }

        // Customer turn on every live leaf.
        std::vector<UserStepResponse> user_out(live.size());
        std::vector<std::optional<std::string>> user_fault(live.size());
        std::vector<History> user_hist(live.size());
        for (std::size_t i = 0; i < live.size(); ++i) user_hist[i] = detail::history_of(tree, live[i]);
        parallel_for(live.size(), cfg.parallelism, [&](std::size_t i) {
            try {
                UserStepRequest req{user_hist[i], derive_seed(cfg.seed, env.scenario_id, live[i], 0, detail::kUserRole)};
                user_out[i] = user.user_step(req, env);
            } catch (const std::exception& e) {
                user_fault[i] = e.what();
            }
        });
        std::vector<NodeId> user_nodes;
        for (std::size_t i = 0; i < live.size(); ++i) {
            NodeId u = detail::attach(tree, live[i], NodeKind::UserTurn, depth, 0);
            TurnNode& un = tree.node(u);
            if (user_fault[i]) {
                un.fault = user_fault[i];
            } else {
                un.events.push_back(UserMessage{user_out[i].utterance});
                un.ended = user_out[i].ended;
                tree.usage += user_out[i].usage;
            }
            user_nodes.push_back(u);
        }

        std::vector<NodeId> speaking;
        for (NodeId u : user_nodes)
            if (tree.node(u).frozen()) frozen.push_back(u);
            else speaking.push_back(u);

        // Agent turns.
        const ExpansionPlan plan = expand_leaves(speaking.size(), frozen.size(), cfg);
        struct Job {
            NodeId parent;
            int sample;
        };
        std::vector<Job> jobs;
        for (NodeId u : speaking)
            for (std::size_t s = 0; s < plan.samples_per_leaf; ++s) jobs.push_back({u, static_cast<int>(s)});
        std::vector<AgentTurnResponse> agent_out(jobs.size());
        std::vector<std::optional<std::string>> agent_fault(jobs.size());
        std::vector<History> agent_hist;
        for (const auto& j : jobs) agent_hist.push_back(detail::history_of(tree, j.parent));
        parallel_for(jobs.size(), cfg.parallelism, [&](std::size_t i) {
            try {
                AgentTurnRequest req;
                req.history = agent_hist[i];
                req.registry = &registry;
                req.sampling = cfg.agent_sampling;
                req.seed = derive_seed(cfg.seed, env.scenario_id, jobs[i].parent, jobs[i].sample, detail::kAgentRole);
                req.sample_index = jobs[i].sample;
                req.depth = depth;
                agent_out[i] = agent.agent_turn(req, env);
            } catch (const std::exception& e) {
                agent_fault[i] = e.what();
            }
        });
        std::vector<NodeId> next_leaves = frozen;
        for (std::size_t i = 0; i < jobs.size(); ++i) {
            NodeId a = detail::attach(tree, jobs[i].parent, NodeKind::AgentTurn, depth, jobs[i].sample);
            TurnNode& an = tree.node(a);
            if (agent_fault[i]) {
                an.fault = agent_fault[i];
            } else {
                an.outputs = std::move(agent_out[i].outputs);
                an.events = std::move(agent_out[i].events);
                tree.usage += agent_out[i].usage;
            }
            next_leaves.push_back(a);
        }
        std::sort(next_leaves.begin(), next_leaves.end());
        tree.leaves = std::move(next_leaves);
        tree.beam_trace.push_back(tree.leaves.size());

        check_rewards_and_prune(tree, env);
    }

    if (tree.ledger.remaining().empty()) {
        tree.terminated_reason = TerminatedReason::AllGoalsAchieved;
    } else {
        bool any_live = false, any_fault = false;
        for (NodeId l : tree.leaves) {
            any_live = any_live || !tree.node(l).frozen();
            any_fault = any_fault || tree.node(l).fault.has_value();
        }
        if (out_of_leaves || !any_live)
            tree.terminated_reason = any_fault ? TerminatedReason::Fault : TerminatedReason::UserEnded;
        else
            tree.terminated_reason = TerminatedReason::MaxDepth;
    }
    return tree;
}

}  // namespace josh
