#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "josh/goals.hpp"
#include "josh/invocation.hpp"
#include "josh/wire.hpp"

namespace josh {

using NodeId = std::size_t;

// Turn events. `step` is the index of the model output (within the agent turn)
// that produced the event.
struct UserMessage {
    std::string text;
    friend bool operator==(const UserMessage&, const UserMessage&) = default;
};
struct AgentMessage {
    std::string text;
    int step = 0;
    friend bool operator==(const AgentMessage&, const AgentMessage&) = default;
};
struct ToolCall {
    std::string call_id;
    ApiInvocation invocation;
    int step = 0;
    friend bool operator==(const ToolCall&, const ToolCall&) = default;
};
struct ToolResult {
    std::string call_id;
    json payload;
    int step = 0;
    friend bool operator==(const ToolResult&, const ToolResult&) = default;
};
struct EnvErrorEvent {
    std::string call_id;
    EnvError error;
    int step = 0;
    friend bool operator==(const EnvErrorEvent&, const EnvErrorEvent&) = default;
};
/// The agent hit its per-turn step limit without addressing the customer.
struct StepLimitReached {
    int steps = 0;
    friend bool operator==(const StepLimitReached&, const StepLimitReached&) = default;
};

using Event = std::variant<UserMessage, AgentMessage, ToolCall, ToolResult, EnvErrorEvent, StepLimitReached>;

enum class NodeKind { Root, UserTurn, AgentTurn };

/// How the agent emits tool calls: ReACT text or native function calling.
enum class AgentStyle { React, FunctionCalling };

struct TurnNode {
    NodeId id = 0;
    std::optional<NodeId> parent;
    NodeKind kind = NodeKind::Root;
    std::vector<NodeId> children;
    int depth = 0;         // exchange index; the root is 0
    int sample_index = 0;  // which sibling sample this agent turn is
    std::vector<Event> events;
    std::vector<ChatMessage> outputs;  // raw model outputs, agent turns only
    std::vector<std::size_t> achieved_goals;
    bool partial_credit = false;
    bool on_ideal_path = false;
    bool ended = false;  // user turn carried END_CONVERSATION
    std::optional<std::string> fault;

    [[nodiscard]] bool frozen() const { return ended || fault.has_value(); }

    [[nodiscard]] std::vector<ApiInvocation> invocations() const {
        std::vector<ApiInvocation> out;
        for (const auto& e : events)
            if (const auto* tc = std::get_if<ToolCall>(&e)) out.push_back(tc->invocation);
        return out;
    }

    [[nodiscard]] bool has_env_error() const {
        for (const auto& e : events)
            if (std::holds_alternative<EnvErrorEvent>(e)) return true;
        return false;
    }
};

/// Exact non-negative fraction; the 100% filter compares these without
/// floating-point drift.
struct Fraction {
    std::int64_t num = 0;
    std::int64_t den = 1;

    [[nodiscard]] double value() const { return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den); }
    [[nodiscard]] bool is_one() const { return den != 0 && num == den; }

    friend bool operator==(const Fraction& a, const Fraction& b) { return a.num * b.den == b.num * a.den; }
    friend bool operator<(const Fraction& a, const Fraction& b) { return a.num * b.den < b.num * a.den; }
    friend bool operator<=(const Fraction& a, const Fraction& b) { return !(b < a); }

    [[nodiscard]] Fraction reduced() const {
        if (den == 0) return *this;
        const std::int64_t g = std::gcd(num, den);
        return g == 0 ? Fraction{0, 1} : Fraction{num / g, den / g};
    }
    friend Fraction operator+(const Fraction& a, const Fraction& b) {
        const std::int64_t l = std::lcm(a.den, b.den);
        return Fraction{a.num * (l / a.den) + b.num * (l / b.den), l}.reduced();
    }
};

/// Average Reward accounting for one rollout.
class RewardLedger {
public:
    struct Entry {
        std::size_t goal;
        NodeId node;
        friend bool operator==(const Entry&, const Entry&) = default;
    };

    RewardLedger() = default;
    explicit RewardLedger(std::size_t goal_count) : initial_(goal_count), remaining_(goal_count) {
        if (goal_count == 0) throw std::invalid_argument("goal set must be non-empty");
        std::iota(remaining_.begin(), remaining_.end(), std::size_t{0});
    }

    /// Removes `goal` from the remaining set and credits 1/|G|.
    void credit(std::size_t goal, NodeId node) {
        auto it = std::find(remaining_.begin(), remaining_.end(), goal);
        if (it == remaining_.end()) throw std::logic_error("goal already credited");
        remaining_.erase(it);
        log_.push_back({goal, node});
    }

    [[nodiscard]] std::size_t goal_set_initial_size() const { return initial_; }
    [[nodiscard]] const std::vector<std::size_t>& remaining() const { return remaining_; }
    [[nodiscard]] const std::vector<Entry>& achieved_log() const { return log_; }
    [[nodiscard]] Fraction average_reward() const {
        return {static_cast<std::int64_t>(initial_ - remaining_.size()), static_cast<std::int64_t>(initial_)};
    }

    /// Rebuilds a ledger from a persisted log.
    static RewardLedger replay(std::size_t goal_count, const std::vector<Entry>& log) {
        RewardLedger l(goal_count);
        for (const auto& e : log) l.credit(e.goal, e.node);
        return l;
    }

private:
    std::size_t initial_ = 0;
    std::vector<std::size_t> remaining_;
    std::vector<Entry> log_;
};

struct BeamConfig {
    int branching_factor = 2;
    int max_beam = 8;
    int max_depth = 10;
    SamplingParams agent_sampling = SamplingParams::hosted_model_defaults();
    std::uint64_t seed = 0;
    int parallelism = 1;

    void validate() const {
        if (branching_factor < 1) throw std::invalid_argument("branching_factor must be positive");
        if (max_beam < 1) throw std::invalid_argument("max_beam must be positive");
        if (max_depth < 1) throw std::invalid_argument("max_depth must be positive");
        if (branching_factor > max_beam) throw std::invalid_argument("branching_factor must not exceed max_beam");
        if (parallelism < 1) throw std::invalid_argument("parallelism must be >= 1");
        agent_sampling.validate();
    }
};

enum class TerminatedReason { AllGoalsAchieved, MaxDepth, UserEnded, Fault };

inline std::string_view to_string(TerminatedReason r) {
    switch (r) {
        case TerminatedReason::AllGoalsAchieved: return "AllGoalsAchieved";
        case TerminatedReason::MaxDepth: return "MaxDepth";
        case TerminatedReason::UserEnded: return "UserEnded";
        case TerminatedReason::Fault: return "Fault";
    }
    return "Fault";
}

inline TerminatedReason terminated_reason_from_string(std::string_view s) {
    if (s == "AllGoalsAchieved") return TerminatedReason::AllGoalsAchieved;
    if (s == "MaxDepth") return TerminatedReason::MaxDepth;
    if (s == "UserEnded") return TerminatedReason::UserEnded;
    if (s == "Fault") return TerminatedReason::Fault;
    throw std::invalid_argument("unknown terminated reason: " + std::string(s));
}

/// Turn-level search tree. Nodes are never deleted; pruning only moves `root`
/// and narrows `leaves`.
struct RolloutTree {
    std::string scenario_id;
    std::vector<TurnNode> nodes;  // indexed by NodeId
    NodeId root = 0;
    NodeId original_root = 0;
    std::vector<NodeId> leaves;
    RewardLedger ledger;
    TerminatedReason terminated_reason = TerminatedReason::MaxDepth;
    BeamConfig config;
    AgentStyle agent_style = AgentStyle::React;
    std::string system_prompt;  // agent system prompt used for every agent turn
    std::vector<std::size_t> beam_trace;  // |leaves| after each agent step, before pruning
    Usage usage;

    [[nodiscard]] const TurnNode& node(NodeId id) const { return nodes.at(id); }
    TurnNode& node(NodeId id) { return nodes.at(id); }

    /// Nodes from the original root down to `id`, inclusive.
    [[nodiscard]] std::vector<NodeId> path_to(NodeId id) const {
        std::vector<NodeId> out;
        std::optional<NodeId> cur = id;
        while (cur) {
            out.push_back(*cur);
            cur = nodes.at(*cur).parent;
        }
        return {out.rbegin(), out.rend()};
    }

    [[nodiscard]] bool is_descendant(NodeId id, NodeId ancestor) const {
        std::optional<NodeId> cur = id;
        while (cur) {
            if (*cur == ancestor) return true;
            cur = nodes.at(*cur).parent;
        }
        return false;
    }
};

inline Fraction average_reward(const RolloutTree& tree) { return tree.ledger.average_reward(); }

}  // namespace josh
