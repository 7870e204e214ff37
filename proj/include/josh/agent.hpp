#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "josh/chat_client.hpp"
#include "josh/invocation.hpp"
#include "josh/prompts.hpp"
#include "josh/scenario.hpp"
#include "josh/serving.hpp"
#include "josh/tree.hpp"

namespace josh {

using History = std::vector<const TurnNode*>;

struct AgentTurnRequest {
    History history;  // original root .. the user turn being answered
    const ApiRegistry* registry = &ApiRegistry::standard();
    SamplingParams sampling;
    std::uint64_t seed = 0;
    int sample_index = 0;
    int depth = 0;
};

struct AgentTurnResponse {
    std::vector<ChatMessage> outputs;
    std::vector<Event> events;
    Usage usage;
};

/// One full agent turn: any number of tool calls, then at most one message to
/// the customer. Must be callable concurrently for different requests.
class AgentBackend {
public:
    virtual ~AgentBackend() = default;
    virtual AgentTurnResponse agent_turn(const AgentTurnRequest& request, const ScenarioEnv& env) = 0;
    [[nodiscard]] virtual AgentStyle style() const = 0;
    [[nodiscard]] virtual std::string system_prompt(const ApiRegistry& registry) const = 0;
};

inline std::string default_system_prompt(AgentStyle style, const ApiRegistry& registry) {
    if (style == AgentStyle::React)
        return prompts::fill(prompts::kReactAgentSystem, "apis", registry.tools_json().dump(2));
    return std::string(prompts::kFunctionCallingAgentSystem);
}

/// Runs a validated call against the scenario's serving functions.
inline json execute_invocation(const ApiInvocation& inv, const ScenarioEnv& env) {
    auto underscore = inv.api_name.find('_');
    const std::string intent = inv.api_name.substr(0, underscore);
    const std::string domain = inv.api_name.substr(underscore + 1);
    if (intent == "search") {
        json rows = json::array();
        for (const auto& r : serve_search(inv.arguments, domain, env.goals, env.database(domain)))
            rows.push_back(to_json(r));
        return rows;
    }
    return to_json(serve_booking(inv.arguments, domain, env.goals));
}

inline json error_payload(const EnvError& e) {
    return json{{"error", std::string(to_string(e.category)) + ": " + e.detail}};
}

/// Chat messages exactly as the agent sees them for `path`: system prompt,
/// customer utterances, the agent's raw outputs and tool results.
inline std::vector<ChatMessage> render_agent_messages(AgentStyle style, std::string_view system_prompt,
                                                      std::span<const TurnNode* const> path) {
    std::vector<ChatMessage> msgs;
    msgs.push_back(ChatMessage::system(std::string(system_prompt)));
    for (const TurnNode* node : path) {
        if (node->kind == NodeKind::UserTurn) {
            for (const auto& e : node->events)
                if (const auto* u = std::get_if<UserMessage>(&e)) msgs.push_back(ChatMessage::user(u->text));
        } else if (node->kind == NodeKind::AgentTurn) {
            for (std::size_t step = 0; step < node->outputs.size(); ++step) {
                msgs.push_back(node->outputs[step]);
                for (const auto& e : node->events) {
                    const auto* r = std::get_if<ToolResult>(&e);
                    if (!r || r->step != static_cast<int>(step)) continue;
                    if (style == AgentStyle::FunctionCalling)
                        msgs.push_back(ChatMessage::tool(r->call_id, r->payload.dump()));
                    else
                        msgs.push_back(ChatMessage::user("OBSERVATION: " + r->payload.dump()));
                }
            }
        }
    }
    return msgs;
}

/// Interprets model outputs, executes tool calls and collects turn events.
/// `next` produces the model output for a step given the conversation so far;
/// returning nullopt ends the turn.
class AgentTurnDriver {
public:
    using NextOutput = std::function<std::optional<ChatMessage>(const std::vector<ChatMessage>&, int step)>;

    AgentTurnDriver(AgentStyle style, const ApiRegistry& registry, const ScenarioEnv& env, int step_limit)
        : style_(style), registry_(registry), env_(env), step_limit_(step_limit) {}

    AgentTurnResponse run(std::vector<ChatMessage> conversation, const NextOutput& next) {
        AgentTurnResponse resp;
        for (int step = 0; step < step_limit_; ++step) {
            auto out = next(conversation, step);
            if (!out) return resp;
            ChatMessage output = std::move(*out);
            output.role = "assistant";
            std::vector<ChatMessage> results;
            bool replied = interpret(output, step, resp, results);
            resp.outputs.push_back(output);
            if (replied) return resp;
            conversation.push_back(std::move(output));
            for (auto& r : results) conversation.push_back(std::move(r));
        }
        resp.events.push_back(StepLimitReached{step_limit_});
        return resp;
    }

private:
    void record_call(const RawToolCall& raw, std::string call_id, int step, AgentTurnResponse& resp,
                     std::vector<ChatMessage>& results) {
        auto v = validate_invocation(raw, registry_);
        json payload;
        if (auto* inv = std::get_if<ApiInvocation>(&v)) {
            payload = execute_invocation(*inv, env_);
            resp.events.push_back(ToolCall{call_id, *inv, step});
        } else {
            const auto& err = std::get<EnvError>(v);
            payload = error_payload(err);
            resp.events.push_back(EnvErrorEvent{call_id, err, step});
        }
        resp.events.push_back(ToolResult{call_id, payload, step});
        results.push_back(result_message(call_id, payload));
    }

    void record_error(const EnvError& err, std::string call_id, int step, AgentTurnResponse& resp,
                      std::vector<ChatMessage>& results) {
        json payload = error_payload(err);
        resp.events.push_back(EnvErrorEvent{call_id, err, step});
        resp.events.push_back(ToolResult{call_id, payload, step});
        results.push_back(result_message(call_id, payload));
    }

    [[nodiscard]] ChatMessage result_message(const std::string& call_id, const json& payload) const {
        if (style_ == AgentStyle::FunctionCalling) return ChatMessage::tool(call_id, payload.dump());
        return ChatMessage::user("OBSERVATION: " + payload.dump());
    }

    // Returns true when the output addressed the customer.
    bool interpret(ChatMessage& output, int step, AgentTurnResponse& resp, std::vector<ChatMessage>& results) {
        const std::string content = output.content.value_or("");
        if (style_ == AgentStyle::FunctionCalling) {
            if (output.tool_calls.empty()) {
                resp.events.push_back(AgentMessage{content, step});
                return true;
            }
            for (std::size_t i = 0; i < output.tool_calls.size(); ++i) {
                auto& tc = output.tool_calls[i];
                if (tc.id.empty()) tc.id = "call_" + std::to_string(step) + "_" + std::to_string(i);
                record_call({tc.name, tc.arguments}, tc.id, step, resp, results);
            }
            return false;
        }
        const std::string call_id = "call_" + std::to_string(step);
        auto parsed = parse_react(content);
        if (auto* action = std::get_if<ReactAction>(&parsed)) {
            record_call(action->call, call_id, step, resp, results);
            return false;
        }
        if (auto* err = std::get_if<EnvError>(&parsed)) {
            record_error(*err, call_id, step, resp, results);
            return false;
        }
        resp.events.push_back(AgentMessage{std::get<ReactResponse>(parsed).text, step});
        return true;
    }

    AgentStyle style_;
    const ApiRegistry& registry_;
    const ScenarioEnv& env_;
    int step_limit_;
};

/// LLM-backed agent (ReACT text or native function calling).
class ModelAgent final : public AgentBackend {
public:
    ModelAgent(std::shared_ptr<ChatModel> model, AgentStyle style, std::string model_name = {},
               int step_limit = 10, std::optional<std::string> system_prompt = std::nullopt)
        : model_(std::move(model)), style_(style), model_name_(std::move(model_name)),
          step_limit_(step_limit), system_prompt_(std::move(system_prompt)) {}

    AgentTurnResponse agent_turn(const AgentTurnRequest& request, const ScenarioEnv& env) override {
        const auto& registry = *request.registry;
        auto conversation = render_agent_messages(style_, system_prompt(registry), request.history);
        Usage usage;
        AgentTurnDriver driver(style_, registry, env, step_limit_);
        auto resp = driver.run(std::move(conversation), [&](const std::vector<ChatMessage>& msgs, int step) {
            ChatRequest req;
            req.model = model_name_;
            req.messages = msgs;
            req.sampling = request.sampling;
            req.sampling.seed = request.seed + static_cast<std::uint64_t>(step);
            if (style_ == AgentStyle::FunctionCalling) req.tools = registry.tools_json();
            ChatResponse r = model_->complete(req);
            usage += r.usage;
            if (r.choices.empty()) throw ProtocolError("response has no choices");
            return std::optional<ChatMessage>(r.choices.front().message);
        });
        resp.usage = usage;
        return resp;
    }

    [[nodiscard]] AgentStyle style() const override { return style_; }
    [[nodiscard]] std::string system_prompt(const ApiRegistry& registry) const override {
        return system_prompt_ ? *system_prompt_ : default_system_prompt(style_, registry);
    }

private:
    std::shared_ptr<ChatModel> model_;
    AgentStyle style_;
    std::string model_name_;
    int step_limit_;
    std::optional<std::string> system_prompt_;
};

// ---------------------------------------------------------------------------
// Output builders for scripted agents.

inline ChatMessage react_call(const std::string& api, const json& args, const std::string& thought = "calling api") {
    return ChatMessage::assistant("THOUGHT: " + thought + "\nACTION: " + api + "\nACTION-INPUT: " + args.dump());
}

inline ChatMessage react_say(const std::string& text, const std::string& thought = "replying") {
    return ChatMessage::assistant("THOUGHT: " + thought + "\nRESPONSE: " + text);
}

inline ChatMessage fc_call(const std::string& api, const json& args, std::string id = {}) {
    ChatMessage m{"assistant", std::nullopt, {WireToolCall{std::move(id), api, args.dump()}}, std::nullopt};
    return m;
}

/// Deterministic agent driven by a policy that plans a whole turn's outputs
/// up front. The outputs go through the same interpretation path as model
/// outputs.
class ScriptedAgent final : public AgentBackend {
public:
    using Policy = std::function<std::vector<ChatMessage>(const AgentTurnRequest&, const ScenarioEnv&)>;

    explicit ScriptedAgent(Policy policy, AgentStyle style = AgentStyle::React, int step_limit = 10)
        : policy_(std::move(policy)), style_(style), step_limit_(step_limit) {}

    AgentTurnResponse agent_turn(const AgentTurnRequest& request, const ScenarioEnv& env) override {
        auto planned = policy_(request, env);
        auto conversation = render_agent_messages(style_, system_prompt(*request.registry), request.history);
        AgentTurnDriver driver(style_, *request.registry, env, step_limit_);
        return driver.run(std::move(conversation), [&](const std::vector<ChatMessage>&, int step) {
            if (step >= static_cast<int>(planned.size())) return std::optional<ChatMessage>{};
            return std::optional<ChatMessage>(planned[static_cast<std::size_t>(step)]);
        });
    }

    [[nodiscard]] AgentStyle style() const override { return style_; }
    [[nodiscard]] std::string system_prompt(const ApiRegistry& registry) const override {
        return default_system_prompt(style_, registry);
    }

private:
    Policy policy_;
    AgentStyle style_;
    int step_limit_;
};

}  // namespace josh
