#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

#include "josh/hash.hpp"
#include "josh/tree.hpp"

// Rollout artifact: one JSON object per scenario with every node, the ledger
// and the search configuration, enough to re-extract datasets offline.
namespace josh {

inline constexpr std::string_view kRolloutFormat = "josh.rollout.v1";

class ArtifactError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline std::string_view to_string(AgentStyle s) { return s == AgentStyle::React ? "react" : "function_calling"; }

inline AgentStyle agent_style_from_string(std::string_view s) {
    if (s == "react") return AgentStyle::React;
    if (s == "function_calling") return AgentStyle::FunctionCalling;
    throw std::invalid_argument("unknown agent style: " + std::string(s));
}

inline std::string_view to_string(NodeKind k) {
    switch (k) {
        case NodeKind::Root: return "root";
        case NodeKind::UserTurn: return "user";
        case NodeKind::AgentTurn: return "agent";
    }
    return "root";
}

inline NodeKind node_kind_from_string(std::string_view s) {
    if (s == "root") return NodeKind::Root;
    if (s == "user") return NodeKind::UserTurn;
    if (s == "agent") return NodeKind::AgentTurn;
    throw std::invalid_argument("unknown node kind: " + std::string(s));
}

inline json to_json(const SamplingParams& p) {
    json j{{"temperature", p.temperature}};
    if (p.top_k) j["top_k"] = *p.top_k;
    if (p.top_p) j["top_p"] = *p.top_p;
    if (p.seed) j["seed"] = *p.seed;
    return j;
}

inline SamplingParams sampling_from_json(const json& j) {
    SamplingParams p;
    p.temperature = j.value("temperature", 1.0);
    if (j.contains("top_k")) p.top_k = j.at("top_k").get<int>();
    if (j.contains("top_p")) p.top_p = j.at("top_p").get<double>();
    if (j.contains("seed")) p.seed = j.at("seed").get<std::uint64_t>();
    return p;
}

/// Parallelism is left out on purpose: it must not change artifact bytes.
inline json to_json(const BeamConfig& c) {
    return json{{"branching_factor", c.branching_factor},
                {"max_beam", c.max_beam},
                {"max_depth", c.max_depth},
                {"agent_sampling", to_json(c.agent_sampling)},
                {"seed", c.seed}};
}

inline BeamConfig beam_config_from_json(const json& j) {
    BeamConfig c;
    c.branching_factor = j.at("branching_factor").get<int>();
    c.max_beam = j.at("max_beam").get<int>();
    c.max_depth = j.at("max_depth").get<int>();
    c.agent_sampling = sampling_from_json(j.at("agent_sampling"));
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

inline json to_json(const Usage& u) { return to_wire(u); }

inline Usage usage_from_json(const json& j) {
    return {j.value("prompt_tokens", std::int64_t{0}), j.value("completion_tokens", std::int64_t{0}),
            j.value("total_tokens", std::int64_t{0})};
}

inline json to_json(const Event& e) {
    return std::visit(
        [](const auto& ev) -> json {
            using T = std::decay_t<decltype(ev)>;
            if constexpr (std::is_same_v<T, UserMessage>) {
                return {{"type", "user_message"}, {"text", ev.text}};
            } else if constexpr (std::is_same_v<T, AgentMessage>) {
                return {{"type", "agent_message"}, {"text", ev.text}, {"step", ev.step}};
            } else if constexpr (std::is_same_v<T, ToolCall>) {
                return {{"type", "tool_call"}, {"call_id", ev.call_id}, {"step", ev.step},
                        {"invocation", to_json(ev.invocation)}};
            } else if constexpr (std::is_same_v<T, ToolResult>) {
                return {{"type", "tool_result"}, {"call_id", ev.call_id}, {"step", ev.step}, {"payload", ev.payload}};
            } else if constexpr (std::is_same_v<T, EnvErrorEvent>) {
                return {{"type", "env_error"}, {"call_id", ev.call_id}, {"step", ev.step},
                        {"category", to_string(ev.error.category)}, {"detail", ev.error.detail}};
            } else {
                return {{"type", "step_limit"}, {"steps", ev.steps}};
            }
        },
        e);
}

inline Event event_from_json(const json& j) {
    const auto type = j.at("type").get<std::string>();
    if (type == "user_message") return UserMessage{j.at("text").get<std::string>()};
    if (type == "agent_message") return AgentMessage{j.at("text").get<std::string>(), j.at("step").get<int>()};
    if (type == "tool_call")
        return ToolCall{j.at("call_id").get<std::string>(), invocation_from_json(j.at("invocation")),
                        j.at("step").get<int>()};
    if (type == "tool_result")
        return ToolResult{j.at("call_id").get<std::string>(), j.at("payload"), j.at("step").get<int>()};
    if (type == "env_error")
        return EnvErrorEvent{j.at("call_id").get<std::string>(),
                             EnvError{env_error_category_from_string(j.at("category").get<std::string>()),
                                      j.at("detail").get<std::string>()},
                             j.at("step").get<int>()};
    if (type == "step_limit") return StepLimitReached{j.at("steps").get<int>()};
    throw ArtifactError("unknown event type: " + type);
}

inline json to_json(const TurnNode& n) {
    json events = json::array();
    for (const auto& e : n.events) events.push_back(to_json(e));
    json outputs = json::array();
    for (const auto& m : n.outputs) outputs.push_back(to_wire(m));
    json j{{"id", n.id},
           {"parent", n.parent ? json(*n.parent) : json(nullptr)},
           {"kind", to_string(n.kind)},
           {"children", n.children},
           {"depth", n.depth},
           {"sample_index", n.sample_index},
           {"events", std::move(events)},
           {"outputs", std::move(outputs)},
           {"achieved_goals", n.achieved_goals},
           {"partial_credit", n.partial_credit},
           {"on_ideal_path", n.on_ideal_path},
           {"ended", n.ended},
           {"fault", n.fault ? json(*n.fault) : json(nullptr)}};
    return j;
}

inline TurnNode node_from_json(const json& j) {
    TurnNode n;
    n.id = j.at("id").get<NodeId>();
    if (!j.at("parent").is_null()) n.parent = j.at("parent").get<NodeId>();
    n.kind = node_kind_from_string(j.at("kind").get<std::string>());
    n.children = j.at("children").get<std::vector<NodeId>>();
    n.depth = j.at("depth").get<int>();
    n.sample_index = j.at("sample_index").get<int>();
    for (const auto& e : j.at("events")) n.events.push_back(event_from_json(e));
    for (const auto& m : j.at("outputs")) n.outputs.push_back(message_from_wire(m));
    n.achieved_goals = j.at("achieved_goals").get<std::vector<std::size_t>>();
    n.partial_credit = j.at("partial_credit").get<bool>();
    n.on_ideal_path = j.at("on_ideal_path").get<bool>();
    n.ended = j.at("ended").get<bool>();
    if (!j.at("fault").is_null()) n.fault = j.at("fault").get<std::string>();
    return n;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline json tree_to_json(const RolloutTree& t) {
    json nodes = json::array();
    for (const auto& n : t.nodes) nodes.push_back(to_json(n));
    json achieved = json::array();
    for (const auto& e : t.ledger.achieved_log()) achieved.push_back({{"goal", e.goal}, {"node", e.node}});
    const auto ar = t.ledger.average_reward();
    json j{{"format", kRolloutFormat},
           {"scenario_id", t.scenario_id},
           {"config", to_json(t.config)},
           {"agent_style", to_string(t.agent_style)},
           {"system_prompt", t.system_prompt},
           {"root", t.root},
           {"original_root", t.original_root},
           {"leaves", t.leaves},
           {"terminated_reason", to_string(t.terminated_reason)},
           {"ledger",
            {{"goal_count", t.ledger.goal_set_initial_size()},
             {"achieved", std::move(achieved)},
             {"average_reward", {{"num", ar.num}, {"den", ar.den}}}}},
           {"beam_trace", t.beam_trace},
           {"usage", to_json(t.usage)}};
    j["transcript_hash"] = hex64(fnv1a64(nodes.dump()));
    j["nodes"] = std::move(nodes);
    return j;
}

/// Inverse of tree_to_json. The ledger is rebuilt from its log and checked
/// against the stored reward and transcript hash.
inline RolloutTree tree_from_json(const json& j) {
    try {
        if (j.value("format", std::string{}) != kRolloutFormat) throw ArtifactError("unsupported artifact format");
        RolloutTree t;
        t.scenario_id = j.at("scenario_id").get<std::string>();
        t.config = beam_config_from_json(j.at("config"));
        t.agent_style = agent_style_from_string(j.at("agent_style").get<std::string>());
        t.system_prompt = j.at("system_prompt").get<std::string>();
        t.root = j.at("root").get<NodeId>();
        t.original_root = j.at("original_root").get<NodeId>();
        t.leaves = j.at("leaves").get<std::vector<NodeId>>();
        t.terminated_reason = terminated_reason_from_string(j.at("terminated_reason").get<std::string>());
        const auto& nodes = j.at("nodes");
        if (j.contains("transcript_hash") && j.at("transcript_hash").get<std::string>() != hex64(fnv1a64(nodes.dump())))
            throw ArtifactError("transcript hash mismatch");
        for (const auto& n : nodes) t.nodes.push_back(node_from_json(n));
        for (std::size_t i = 0; i < t.nodes.size(); ++i)
            if (t.nodes[i].id != i) throw ArtifactError("node ids are not sequential");
        const auto& ledger = j.at("ledger");
        std::vector<RewardLedger::Entry> log;
        for (const auto& e : ledger.at("achieved"))
            log.push_back({e.at("goal").get<std::size_t>(), e.at("node").get<NodeId>()});
        t.ledger = RewardLedger::replay(ledger.at("goal_count").get<std::size_t>(), log);
        const Fraction stored{ledger.at("average_reward").at("num").get<std::int64_t>(),
                              ledger.at("average_reward").at("den").get<std::int64_t>()};
        if (!(stored == t.ledger.average_reward())) throw ArtifactError("stored average reward disagrees with log");
        t.beam_trace = j.at("beam_trace").get<std::vector<std::size_t>>();
        t.usage = usage_from_json(j.at("usage"));
        return t;
    } catch (const json::exception& e) {
        throw ArtifactError(std::string("malformed rollout artifact: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ArtifactError(std::string("malformed rollout artifact: ") + e.what());
    } catch (const std::logic_error& e) {
        throw ArtifactError(std::string("malformed rollout artifact: ") + e.what());
    }
}

}  // namespace josh
