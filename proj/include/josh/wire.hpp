#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "josh/canonical.hpp"

namespace josh {

/// Decoding parameters for one model call.
struct SamplingParams {
    double temperature = 1.0;
    std::optional<int> top_k;
    std::optional<double> top_p;
    std::optional<std::uint64_t> seed;

    void validate() const {
        if (!(temperature >= 0.0)) throw std::invalid_argument("temperature must be >= 0");
        if (top_k && *top_k <= 0) throw std::invalid_argument("top_k must be positive");
        if (top_p && !(*top_p > 0.0 && *top_p <= 1.0)) throw std::invalid_argument("top_p must be in (0, 1]");
    }

    /// Small open models: temperature 1.5, top_k 50, top_p 0.75.
    static SamplingParams open_model_defaults() { return {1.5, 50, 0.75, std::nullopt}; }
    /// Hosted gpt-style models: temperature 1.0.
    static SamplingParams hosted_model_defaults() { return {1.0, std::nullopt, std::nullopt, std::nullopt}; }

    friend bool operator==(const SamplingParams&, const SamplingParams&) = default;
};

struct WireToolCall {
    std::string id;
    std::string name;
    std::string arguments;  // JSON text, as sent by the provider

    friend bool operator==(const WireToolCall&, const WireToolCall&) = default;
};

struct ChatMessage {
    std::string role;
    std::optional<std::string> content;
    std::vector<WireToolCall> tool_calls;
    std::optional<std::string> tool_call_id;

    static ChatMessage system(std::string text) { return {"system", std::move(text), {}, std::nullopt}; }
    static ChatMessage user(std::string text) { return {"user", std::move(text), {}, std::nullopt}; }
    static ChatMessage assistant(std::string text) { return {"assistant", std::move(text), {}, std::nullopt}; }
    static ChatMessage tool(std::string id, std::string text) {
        return {"tool", std::move(text), {}, std::move(id)};
    }

    friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    SamplingParams sampling;
    std::optional<json> tools;
    std::optional<int> n;
};

struct Usage {
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
    std::int64_t total_tokens = 0;

    Usage& operator+=(const Usage& o) {
        prompt_tokens += o.prompt_tokens;
        completion_tokens += o.completion_tokens;
        total_tokens += o.total_tokens;
        return *this;
    }
    friend bool operator==(const Usage&, const Usage&) = default;
};

struct ChatChoice {
    ChatMessage message;
    std::string finish_reason;
};

struct ChatResponse {
    std::vector<ChatChoice> choices;
    Usage usage;
    int retries = 0;  // transport retries spent; not part of the wire format
};

/// Malformed response payload.
class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline json to_wire(const WireToolCall& tc) {
    return json{{"id", tc.id},
                {"type", "function"},
                {"function", json{{"name", tc.name}, {"arguments", tc.arguments}}}};
}

inline json to_wire(const ChatMessage& m) {
    json j{{"role", m.role}};
    j["content"] = m.content ? json(*m.content) : json(nullptr);
    if (!m.tool_calls.empty()) {
        json calls = json::array();
        for (const auto& tc : m.tool_calls) calls.push_back(to_wire(tc));
        j["tool_calls"] = std::move(calls);
    }
    if (m.tool_call_id) j["tool_call_id"] = *m.tool_call_id;
    return j;
}

inline json to_wire(const ChatRequest& r) {
    json j{{"model", r.model}};
    json msgs = json::array();
    for (const auto& m : r.messages) msgs.push_back(to_wire(m));
    j["messages"] = std::move(msgs);
    j["temperature"] = r.sampling.temperature;
    if (r.sampling.top_p) j["top_p"] = *r.sampling.top_p;
    if (r.sampling.top_k) j["top_k"] = *r.sampling.top_k;
    if (r.sampling.seed) j["seed"] = *r.sampling.seed;
    if (r.tools) j["tools"] = *r.tools;
    if (r.n) j["n"] = *r.n;
    return j;
}

inline json to_wire(const Usage& u) {
    return json{{"prompt_tokens", u.prompt_tokens},
                {"completion_tokens", u.completion_tokens},
                {"total_tokens", u.total_tokens}};
}

inline json to_wire(const ChatResponse& r) {
    json choices = json::array();
    for (std::size_t i = 0; i < r.choices.size(); ++i)
        choices.push_back(json{{"index", i},
                               {"message", to_wire(r.choices[i].message)},
                               {"finish_reason", r.choices[i].finish_reason}});
    return json{{"object", "chat.completion"}, {"choices", std::move(choices)}, {"usage", to_wire(r.usage)}};
}

inline ChatMessage message_from_wire(const json& j) {
    if (!j.is_object() || !j.contains("role") || !j.at("role").is_string())
        throw ProtocolError("message without role");
    ChatMessage m;
    m.role = j.at("role").get<std::string>();
    if (j.contains("content") && !j.at("content").is_null()) {
        if (!j.at("content").is_string()) throw ProtocolError("message content must be a string");
        m.content = j.at("content").get<std::string>();
    }
    if (j.contains("tool_calls") && !j.at("tool_calls").is_null()) {
        const auto& calls = j.at("tool_calls");
        if (!calls.is_array()) throw ProtocolError("tool_calls must be an array");
        for (const auto& c : calls) {
            if (!c.is_object() || !c.contains("function") || !c.at("function").is_object())
                throw ProtocolError("tool call without function");
            const auto& fn = c.at("function");
            WireToolCall tc;
            tc.id = c.value("id", "");
            tc.name = fn.value("name", "");
            const auto& args = fn.contains("arguments") ? fn.at("arguments") : json("{}");
            // Some servers send the arguments as an object rather than a string.
            tc.arguments = args.is_string() ? args.get<std::string>() : args.dump();
            m.tool_calls.push_back(std::move(tc));
        }
    }
    if (j.contains("tool_call_id") && j.at("tool_call_id").is_string())
        m.tool_call_id = j.at("tool_call_id").get<std::string>();
    return m;
}

inline ChatRequest request_from_wire(const json& j) {
    ChatRequest r;
    r.model = j.at("model").get<std::string>();
    for (const auto& m : j.at("messages")) r.messages.push_back(message_from_wire(m));
    r.sampling.temperature = j.value("temperature", 1.0);
    if (j.contains("top_p")) r.sampling.top_p = j.at("top_p").get<double>();
    if (j.contains("top_k")) r.sampling.top_k = j.at("top_k").get<int>();
    if (j.contains("seed")) r.sampling.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("tools")) r.tools = j.at("tools");
    if (j.contains("n")) r.n = j.at("n").get<int>();
    return r;
}

inline ChatResponse parse_chat_response(const json& j) {
    if (!j.is_object()) throw ProtocolError("response is not an object");
    if (!j.contains("choices") || !j.at("choices").is_array() || j.at("choices").empty())
        throw ProtocolError("response has no choices");
    ChatResponse r;
    for (const auto& c : j.at("choices")) {
        if (!c.is_object() || !c.contains("message")) throw ProtocolError("choice without message");
        ChatChoice choice;
        choice.message = message_from_wire(c.at("message"));
        if (c.contains("finish_reason") && c.at("finish_reason").is_string())
            choice.finish_reason = c.at("finish_reason").get<std::string>();
        r.choices.push_back(std::move(choice));
    }
    if (j.contains("usage") && j.at("usage").is_object()) {
        const auto& u = j.at("usage");
        r.usage.prompt_tokens = u.value("prompt_tokens", std::int64_t{0});
        r.usage.completion_tokens = u.value("completion_tokens", std::int64_t{0});
        r.usage.total_tokens = u.value("total_tokens", std::int64_t{0});
    }
    return r;
}

}  // namespace josh
