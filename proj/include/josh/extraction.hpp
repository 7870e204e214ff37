#pragma once

#include <optional>
#include <string>
#include <vector>

#include "josh/agent.hpp"
#include "josh/registry.hpp"
#include "josh/tree.hpp"

namespace josh {

struct SftRecord {
    std::string scenario_id;
    std::vector<ChatMessage> messages;
    json tools;  // api schemas the agent could call
};

struct KtoRecord {
    std::string scenario_id;
    int turn = 0;                         // depth of the shared customer turn
    NodeId node = 0;                      // agent turn used as the completion
    std::vector<ChatMessage> context;     // through the shared customer turn
    std::vector<ChatMessage> completion;  // every output of the agent turn, with tool results
    bool label = false;                   // true: upvote
};

/// Agent turns from the original root to the final rewarded turn, root first.
/// Empty when nothing was rewarded.
inline std::vector<NodeId> ideal_path(const RolloutTree& tree) {
    const auto& log = tree.ledger.achieved_log();
    if (log.empty()) return {};
    std::vector<NodeId> out;
    for (NodeId id : tree.path_to(log.back().node))
        if (tree.node(id).kind == NodeKind::AgentTurn) out.push_back(id);
    return out;
}

/// Sets on_ideal_path for every turn on the rewarded chain.
inline void mark_ideal_path(RolloutTree& tree) {
    for (auto& n : tree.nodes) n.on_ideal_path = false;
    const auto& log = tree.ledger.achieved_log();
    if (log.empty()) return;
    for (NodeId id : tree.path_to(log.back().node))
        if (tree.node(id).kind != NodeKind::Root) tree.node(id).on_ideal_path = true;
}

namespace detail {

inline std::vector<const TurnNode*> nodes_of(const RolloutTree& tree, const std::vector<NodeId>& ids) {
    std::vector<const TurnNode*> out;
    for (NodeId id : ids) out.push_back(&tree.node(id));
    return out;
}

/// Messages contributed by one agent turn (outputs and tool results).
inline std::vector<ChatMessage> turn_messages(const RolloutTree& tree, const TurnNode& agent_turn) {
    const TurnNode* one[] = {&agent_turn};
    auto msgs = render_agent_messages(tree.agent_style, tree.system_prompt, one);
    msgs.erase(msgs.begin());
    return msgs;
}

}  // namespace detail

/// The rewarded transcript, ending at the final rewarded agent turn.
inline std::optional<SftRecord> extract_sft(const RolloutTree& tree,
                                            const ApiRegistry& registry = ApiRegistry::standard()) {
    const auto& log = tree.ledger.achieved_log();
    if (log.empty()) return std::nullopt;
    auto path = detail::nodes_of(tree, tree.path_to(log.back().node));
    return SftRecord{tree.scenario_id, render_agent_messages(tree.agent_style, tree.system_prompt, path),
                     registry.tools_json()};
}

/// Turn-level labels: at every customer turn on the rewarded chain the chosen
/// agent turn is an upvote and each other sampled agent turn a downvote.
/// Partial-credit and faulted siblings get no label.
inline std::vector<KtoRecord> extract_kto(const RolloutTree& tree) {
    std::vector<KtoRecord> out;
    const auto& log = tree.ledger.achieved_log();
    if (log.empty()) return out;
    const auto chain = tree.path_to(log.back().node);
    for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
        const TurnNode& user = tree.node(chain[i]);
        if (user.kind != NodeKind::UserTurn) continue;
        const NodeId chosen = chain[i + 1];
        std::vector<NodeId> prefix(chain.begin(), chain.begin() + static_cast<std::ptrdiff_t>(i) + 1);
        auto context = render_agent_messages(tree.agent_style, tree.system_prompt, detail::nodes_of(tree, prefix));
        auto emit = [&](const TurnNode& n, bool label) {
            out.push_back({tree.scenario_id, user.depth, n.id, context, detail::turn_messages(tree, n), label});
        };
        emit(tree.node(chosen), true);
        for (NodeId c : user.children) {
            const TurnNode& sib = tree.node(c);
            if (c == chosen || sib.partial_credit || sib.fault) continue;
            emit(sib, false);
        }
    }
    return out;
}

/// Error events that disqualify a turn from training data.
inline bool has_training_error(const TurnNode& n) {
    for (const auto& e : n.events)
        if (std::holds_alternative<EnvErrorEvent>(e) || std::holds_alternative<StepLimitReached>(e)) return true;
    return n.fault.has_value();
}

/// Every goal reached and no error on the rewarded chain.
inline bool keep_rollout(const RolloutTree& tree) {
    if (!tree.ledger.average_reward().is_one()) return false;
    for (NodeId id : ideal_path(tree))
        if (has_training_error(tree.node(id))) return false;
    return true;
}

/// Indices of the kept trees, in input order.
inline std::vector<std::size_t> filter_rollouts(const std::vector<RolloutTree>& trees) {
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < trees.size(); ++i)
        if (keep_rollout(trees[i])) kept.push_back(i);
    return kept;
}

inline json to_json(const SftRecord& r) {
    json msgs = json::array();
    for (const auto& m : r.messages) msgs.push_back(to_wire(m));
    return json{{"scenario_id", r.scenario_id}, {"messages", std::move(msgs)}, {"tools", r.tools}};
}

inline json to_json(const KtoRecord& r) {
    json ctx = json::array();
    for (const auto& m : r.context) ctx.push_back(to_wire(m));
    json comp = json::array();
    for (const auto& m : r.completion) comp.push_back(to_wire(m));
    return json{{"scenario_id", r.scenario_id},
                {"turn", r.turn},
                {"messages", std::move(ctx)},
                {"completion", std::move(comp)},
                {"label", r.label}};
}

}  // namespace josh
