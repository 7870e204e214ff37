#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "josh/canonical.hpp"
#include "josh/goals.hpp"
#include "josh/registry.hpp"

namespace josh {

enum class EnvErrorCategory { BadApiUse, IncorrectApiFormat };

inline std::string_view to_string(EnvErrorCategory c) {
    return c == EnvErrorCategory::BadApiUse ? "BadApiUse" : "IncorrectApiFormat";
}

inline EnvErrorCategory env_error_category_from_string(std::string_view s) {
    if (s == "BadApiUse") return EnvErrorCategory::BadApiUse;
    if (s == "IncorrectApiFormat") return EnvErrorCategory::IncorrectApiFormat;
    throw std::invalid_argument("unknown env error category: " + std::string(s));
}

struct EnvError {
    EnvErrorCategory category;
    std::string detail;

    friend bool operator==(const EnvError&, const EnvError&) = default;
};

/// A tool call as emitted by the model, before validation. `arguments` is the
/// raw argument payload text (a JSON object when well-formed).
struct RawToolCall {
    std::string name;
    std::string arguments;
};

using ValidationResult = std::variant<ApiInvocation, EnvError>;

/// Parses the argument payload, then checks the API and argument names.
/// Format problems take precedence over unknown names.
inline ValidationResult validate_invocation(const RawToolCall& raw, const ApiRegistry& registry) {
    json payload;
    try {
        payload = json::parse(raw.arguments.empty() ? std::string("{}") : raw.arguments);
    } catch (const json::parse_error&) {
        return EnvError{EnvErrorCategory::IncorrectApiFormat,
                        "arguments for '" + raw.name + "' are not valid JSON"};
    }
    if (!payload.is_object())
        return EnvError{EnvErrorCategory::IncorrectApiFormat,
                        "arguments for '" + raw.name + "' must be a JSON object"};
    const std::string name = trim(raw.name);
    if (name.empty())
        return EnvError{EnvErrorCategory::IncorrectApiFormat, "missing api name"};

    ArgMap args;
    for (auto it = payload.begin(); it != payload.end(); ++it) {
        if (it.value().is_null()) continue;
        std::string v;
        if (!scalar_to_canonical(it.value(), v))
            return EnvError{EnvErrorCategory::IncorrectApiFormat,
                            "argument '" + it.key() + "' must be a string"};
        args.emplace(trim(it.key()), std::move(v));
    }

    const ApiSpec* spec = registry.find(name);
    if (!spec) return EnvError{EnvErrorCategory::BadApiUse, "unknown api '" + name + "'"};
    for (const auto& [k, v] : args)
        if (!spec->has_parameter(k))
            return EnvError{EnvErrorCategory::BadApiUse,
                            "api '" + name + "' has no argument '" + k + "'"};
    return ApiInvocation{name, std::move(args)};
}

// ---------------------------------------------------------------------------
// ReACT text format
//
//   THOUGHT: <free text>
//   ACTION: <api name>
//   ACTION-INPUT: <JSON object>
//
// or, to address the customer,
//
//   THOUGHT: <free text>
//   RESPONSE: <message>
//
// Keywords are matched case-insensitively at the start of a line; "ACTION_INPUT"
// is accepted as a spelling of ACTION-INPUT. The JSON object ends at its
// matching closing brace; anything after it is ignored. Text with neither an
// ACTION nor a RESPONSE line is taken as a message in full.
// ---------------------------------------------------------------------------

struct ReactAction {
    std::string thought;
    RawToolCall call;
};

struct ReactResponse {
    std::string thought;
    std::string text;
};

using ReactStep = std::variant<ReactAction, ReactResponse, EnvError>;

namespace detail {

struct ReactLine {
    std::string keyword;  // upper-cased, empty for continuation lines
    std::string rest;
};

inline ReactLine classify_react_line(std::string_view line) {
    static constexpr std::string_view kKeywords[] = {"THOUGHT", "ACTION-INPUT", "ACTION_INPUT",
                                                     "ACTION INPUT", "ACTION", "RESPONSE"};
    auto stripped = trim(line);
    auto upper = stripped;
    for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    for (auto kw : kKeywords) {
        if (upper.rfind(kw, 0) == 0 && upper.size() > kw.size() && upper[kw.size()] == ':') {
            std::string key(kw);
            if (key == "ACTION_INPUT" || key == "ACTION INPUT") key = "ACTION-INPUT";
            return {key, trim(std::string_view(stripped).substr(kw.size() + 1))};
        }
    }
    return {"", std::string(line)};
}

/// Extracts the balanced {...} object at the start of `s`, honoring strings.
inline std::optional<std::string> balanced_object(std::string_view s) {
    auto start = s.find_first_not_of(" \t\r\n");
    if (start == std::string_view::npos || s[start] != '{') return std::nullopt;
    int depth = 0;
    bool in_string = false, escaped = false;
    for (std::size_t i = start; i < s.size(); ++i) {
        char c = s[i];
        if (in_string) {
            if (escaped) escaped = false;
            else if (c == '\\') escaped = true;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '{') ++depth;
        else if (c == '}' && --depth == 0) return std::string(s.substr(start, i - start + 1));
    }
    return std::nullopt;
}

}  // namespace detail

inline ReactStep parse_react(std::string_view text) {
    std::vector<std::pair<std::string, std::string>> sections;  // keyword -> body
    std::string leading;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        auto cl = detail::classify_react_line(line);
        if (!cl.keyword.empty()) {
            sections.emplace_back(cl.keyword, cl.rest);
        } else if (!sections.empty()) {
            sections.back().second += "\n" + cl.rest;
        } else {
            leading += (leading.empty() ? "" : "\n") + cl.rest;
        }
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }

    auto section = [&](std::string_view key) -> const std::string* {
        for (const auto& [k, v] : sections)
            if (k == key) return &v;
        return nullptr;
    };
    const std::string* thought_body = section("THOUGHT");
    std::string thought = thought_body ? trim(*thought_body) : std::string{};

    if (const std::string* action = section("ACTION")) {
        std::string name = trim(*action);
        auto nl = name.find('\n');
        if (nl != std::string::npos) name = trim(name.substr(0, nl));
        if (name.empty()) return EnvError{EnvErrorCategory::IncorrectApiFormat, "ACTION without an api name"};
        const std::string* input = section("ACTION-INPUT");
        if (!input)
            return EnvError{EnvErrorCategory::IncorrectApiFormat, "ACTION '" + name + "' without ACTION-INPUT"};
        auto obj = detail::balanced_object(*input);
        if (!obj)
            return EnvError{EnvErrorCategory::IncorrectApiFormat,
                            "ACTION-INPUT for '" + name + "' is not a complete JSON object"};
        return ReactAction{thought, RawToolCall{name, *obj}};
    }
    if (section("ACTION-INPUT"))
        return EnvError{EnvErrorCategory::IncorrectApiFormat, "ACTION-INPUT without ACTION"};
    if (const std::string* response = section("RESPONSE")) return ReactResponse{thought, trim(*response)};
    if (sections.empty()) return ReactResponse{"", trim(text)};
    // Only a THOUGHT (plus any preamble): the thought is what reaches the customer.
    return ReactResponse{thought, trim(leading.empty() ? thought : leading)};
}

}  // namespace josh
