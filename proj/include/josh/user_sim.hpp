#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "josh/agent.hpp"
#include "josh/chat_client.hpp"
#include "josh/prompts.hpp"
#include "josh/scenario.hpp"
#include "josh/tree.hpp"

namespace josh {

struct UserStepRequest {
    History history;  // original root .. the turn the customer is answering
    std::uint64_t seed = 0;
};

struct UserStepResponse {
    std::string utterance;
    bool ended = false;
    Usage usage;
    std::optional<std::string> advice;  // guide simulator only
};

class UserSimulator {
public:
    virtual ~UserSimulator() = default;
    virtual UserStepResponse user_step(const UserStepRequest& request, const ScenarioEnv& env) = 0;
};

inline bool has_end_sentinel(std::string_view text) {
    return text.find(prompts::kEndConversation) != std::string_view::npos;
}

/// Customer-visible exchange: (is_customer, text) pairs in order.
inline std::vector<std::pair<bool, std::string>> visible_exchange(const History& history) {
    std::vector<std::pair<bool, std::string>> out;
    for (const TurnNode* node : history)
        for (const auto& e : node->events) {
            if (const auto* u = std::get_if<UserMessage>(&e)) out.emplace_back(true, u->text);
            else if (const auto* a = std::get_if<AgentMessage>(&e)) out.emplace_back(false, a->text);
        }
    return out;
}

/// Messages for the goal-based customer: system prompt with the goals, the
/// visible exchange with roles flipped (the agent speaks as "user"), then the
/// per-turn reminder.
inline std::vector<ChatMessage> render_goal_user_messages(const std::vector<std::string>& user_goals,
                                                          const History& history,
                                                          std::string_view extra_instructions = {}) {
    std::vector<ChatMessage> msgs;
    msgs.push_back(ChatMessage::system(
        prompts::fill(prompts::kGoalUserSystem, "goals", prompts::bullet_list(user_goals))));
    for (const auto& [customer, text] : visible_exchange(history))
        msgs.push_back(customer ? ChatMessage::assistant(text) : ChatMessage::user(text));
    std::string turn(prompts::kGoalUserTurn);
    if (!extra_instructions.empty()) turn = std::string(extra_instructions) + "\n" + turn;
    msgs.push_back(ChatMessage::user(std::move(turn)));
    return msgs;
}

inline std::string render_current_convo(const History& history) {
    std::string out;
    for (const auto& [customer, text] : visible_exchange(history)) {
        if (!out.empty()) out += '\n';
        out += (customer ? "CUSTOMER: " : "AGENT: ") + text;
    }
    return out;
}

inline std::string render_coach_prompt(const std::vector<std::string>& user_goals,
                                       const std::vector<std::string>& source_transcript,
                                       const History& history) {
    std::string convo;
    for (const auto& line : source_transcript) {
        if (!convo.empty()) convo += '\n';
        convo += line;
    }
    std::string p = prompts::fill(prompts::kGuideCoach, "goals", prompts::bullet_list(user_goals));
    p = prompts::fill(p, "goal_convo", convo);
    return prompts::fill(p, "current_convo", render_current_convo(history));
}

struct CoachAdvice {
    std::string advice;
    std::string quote;
    bool ended = false;
};

/// Parses "Advice: ... Suggested quote: "..." [END_CONVERSATION]".
inline CoachAdvice parse_coach_output(std::string_view text) {
    CoachAdvice out;
    constexpr std::string_view kAdvice = "Advice:";
    constexpr std::string_view kQuote = "Suggested quote:";
    auto q = text.rfind(kQuote);
    auto a = text.rfind(kAdvice, q == std::string_view::npos ? std::string_view::npos : q);
    if (a != std::string_view::npos) {
        auto end = q == std::string_view::npos ? text.size() : q;
        out.advice = trim(text.substr(a + kAdvice.size(), end - a - kAdvice.size()));
    }
    std::string_view rest = q == std::string_view::npos ? std::string_view{} : text.substr(q + kQuote.size());
    auto open = rest.find('"');
    auto close = open == std::string_view::npos ? std::string_view::npos : rest.find('"', open + 1);
    if (open != std::string_view::npos && close != std::string_view::npos) {
        out.quote = std::string(rest.substr(open + 1, close - open - 1));
        out.ended = has_end_sentinel(rest.substr(close + 1));
    } else {
        out.quote = trim(rest);
        out.ended = has_end_sentinel(rest);
    }
    if (a == std::string_view::npos && q == std::string_view::npos) out.advice = trim(text);
    return out;
}

/// Customer that follows its goal list in order without seeing the source
/// dialogue.
class GoalUserSimulator final : public UserSimulator {
public:
    GoalUserSimulator(std::shared_ptr<ChatModel> model, std::string model_name, SamplingParams sampling)
        : model_(std::move(model)), model_name_(std::move(model_name)), sampling_(sampling) {}

    UserStepResponse user_step(const UserStepRequest& request, const ScenarioEnv& env) override {
        ChatRequest req;
        req.model = model_name_;
        req.messages = render_goal_user_messages(env.user_goals, request.history);
        req.sampling = sampling_;
        req.sampling.seed = request.seed;
        ChatResponse r = model_->complete(req);
        if (r.choices.empty()) throw ProtocolError("response has no choices");
        UserStepResponse out;
        out.utterance = trim(r.choices.front().message.content.value_or(""));
        out.ended = has_end_sentinel(out.utterance);
        out.usage = r.usage;
        return out;
    }

private:
    std::shared_ptr<ChatModel> model_;
    std::string model_name_;
    SamplingParams sampling_;
};

/// Two-stage customer: a coach reads the source dialogue and suggests a quote,
/// then a speaker (goal prompt plus the coach's advice) produces the
/// utterance. Without a speaker model the quote is used verbatim.
class GuideUserSimulator final : public UserSimulator {
public:
    GuideUserSimulator(std::shared_ptr<ChatModel> coach, std::shared_ptr<ChatModel> speaker,
                       std::string model_name, SamplingParams sampling)
        : coach_(std::move(coach)), speaker_(std::move(speaker)), model_name_(std::move(model_name)),
          sampling_(sampling) {}

    UserStepResponse user_step(const UserStepRequest& request, const ScenarioEnv& env) override {
        if (!env.source_transcript || env.source_transcript->empty())
            throw std::invalid_argument("guide simulator needs a source transcript for " + env.scenario_id);
        ChatRequest coach_req;
        coach_req.model = model_name_;
        coach_req.messages = {ChatMessage::user(
            render_coach_prompt(env.user_goals, *env.source_transcript, request.history))};
        coach_req.sampling = sampling_;
        coach_req.sampling.seed = request.seed;
        ChatResponse cr = coach_->complete(coach_req);
        if (cr.choices.empty()) throw ProtocolError("response has no choices");
        CoachAdvice advice = parse_coach_output(cr.choices.front().message.content.value_or(""));

        UserStepResponse out;
        out.usage = cr.usage;
        out.advice = advice.advice;
        if (advice.ended || !speaker_) {
            out.utterance = advice.quote;
            if (advice.ended) out.utterance += std::string(" ") + std::string(prompts::kEndConversation);
            out.ended = advice.ended || has_end_sentinel(advice.quote);
            return out;
        }
        ChatRequest speak_req;
        speak_req.model = model_name_;
        speak_req.messages = render_goal_user_messages(
            env.user_goals, request.history,
            "Advice from your coach:\n" + advice.advice + "\nSuggested quote: \"" + advice.quote + "\"");
        speak_req.sampling = sampling_;
        speak_req.sampling.seed = request.seed + 1;
        ChatResponse sr = speaker_->complete(speak_req);
        if (sr.choices.empty()) throw ProtocolError("response has no choices");
        out.usage += sr.usage;
        out.utterance = trim(sr.choices.front().message.content.value_or(""));
        out.ended = has_end_sentinel(out.utterance);
        return out;
    }

private:
    std::shared_ptr<ChatModel> coach_;
    std::shared_ptr<ChatModel> speaker_;
    std::string model_name_;
    SamplingParams sampling_;
};

/// Deterministic customer: states its goals one per turn, then hangs up.
class ScriptedUser final : public UserSimulator {
public:
    using Policy = std::function<UserStepResponse(const UserStepRequest&, const ScenarioEnv&)>;

    ScriptedUser() = default;
    explicit ScriptedUser(Policy policy) : policy_(std::move(policy)) {}

    UserStepResponse user_step(const UserStepRequest& request, const ScenarioEnv& env) override {
        if (policy_) return policy_(request, env);
        std::size_t spoken = 0;
        for (const TurnNode* n : request.history)
            if (n->kind == NodeKind::UserTurn) ++spoken;
        if (spoken < env.user_goals.size()) return {env.user_goals[spoken], false, {}, std::nullopt};
        if (spoken == 0) return {"Hello, I need some help with my trip.", false, {}, std::nullopt};
        return {"Thanks, goodbye " + std::string(prompts::kEndConversation), true, {}, std::nullopt};
    }

private:
    Policy policy_;
};

}  // namespace josh
