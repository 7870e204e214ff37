#pragma once

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>

#include <httplib.h>

#include "josh/wire.hpp"

namespace josh {

/// HTTP-level failure (connection error or non-2xx status) after retries.
class TransportError : public std::runtime_error {
public:
    TransportError(const std::string& what, int status, int attempts)
        : std::runtime_error(what), status_(status), attempts_(attempts) {}
    [[nodiscard]] int status() const { return status_; }  // 0: no HTTP response
    [[nodiscard]] int attempts() const { return attempts_; }

private:
    int status_;
    int attempts_;
};

/// Anything that answers chat-completions requests. Implementations must be
/// safe to call from several threads at once.
class ChatModel {
public:
    virtual ~ChatModel() = default;
    virtual ChatResponse complete(const ChatRequest& request) = 0;
};

/// Test double: answers from a function.
class ScriptedChatModel final : public ChatModel {
public:
    using Responder = std::function<ChatResponse(const ChatRequest&)>;
    explicit ScriptedChatModel(Responder fn) : fn_(std::move(fn)) {}
    ChatResponse complete(const ChatRequest& request) override { return fn_(request); }

    /// Single-choice response with plain text content.
    static ChatResponse text(std::string content) {
        ChatResponse r;
        r.choices.push_back({ChatMessage::assistant(std::move(content)), "stop"});
        return r;
    }

private:
    Responder fn_;
};

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds base_delay{500};
    std::chrono::milliseconds max_delay{8000};
    double jitter = 0.25;  // +/- fraction of the computed delay

    [[nodiscard]] std::chrono::milliseconds delay_for(int retry, double unit_noise) const {
        double d = static_cast<double>(base_delay.count()) * static_cast<double>(1LL << std::min(retry, 20));
        d = std::min(d, static_cast<double>(max_delay.count()));
        d *= 1.0 + jitter * (2.0 * unit_noise - 1.0);
        return std::chrono::milliseconds(static_cast<long long>(std::max(0.0, d)));
    }

    static bool retryable(int status) { return status == 0 || status == 408 || status == 429 || status >= 500; }
};

/// Shared token bucket; `rate_per_sec <= 0` disables limiting.
class RateLimiter {
public:
    explicit RateLimiter(double rate_per_sec = 0.0, double burst = 1.0)
        : rate_(rate_per_sec), capacity_(std::max(1.0, burst)), tokens_(capacity_),
          last_(std::chrono::steady_clock::now()) {}

    void acquire() {
        if (rate_ <= 0.0) return;
        std::unique_lock lock(mu_);
        for (;;) {
            auto now = std::chrono::steady_clock::now();
            tokens_ = std::min(capacity_, tokens_ + rate_ * std::chrono::duration<double>(now - last_).count());
            last_ = now;
            if (tokens_ >= 1.0) {
                tokens_ -= 1.0;
                return;
            }
            auto wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
            lock.unlock();
            std::this_thread::sleep_for(wait);
            lock.lock();
        }
    }

private:
    std::mutex mu_;
    double rate_;
    double capacity_;
    double tokens_;
    std::chrono::steady_clock::time_point last_;
};

struct EndpointConfig {
    std::string base_url = "https://api.openai.com/v1";  // ".../chat/completions" is appended
    std::string model;
    std::string api_key_env = "OPENAI_API_KEY";
    std::chrono::seconds timeout{120};
    RetryPolicy retry;
    double requests_per_second = 0.0;
};

/// Chat-completions client over HTTP(S).
class HttpChatModel final : public ChatModel {
public:
    explicit HttpChatModel(EndpointConfig cfg) : cfg_(std::move(cfg)), limiter_(cfg_.requests_per_second) {
        split_url(cfg_.base_url, origin_, path_);
        path_ += "/chat/completions";
        if (const char* key = std::getenv(cfg_.api_key_env.c_str())) api_key_ = key;
    }

    ChatResponse complete(const ChatRequest& request) override {
        ChatRequest req = request;
        if (req.model.empty()) req.model = cfg_.model;
        const std::string body = to_wire(req).dump();

        std::string last_error;
        int last_status = 0;
        for (int attempt = 0; attempt < cfg_.retry.max_attempts; ++attempt) {
            if (attempt > 0) std::this_thread::sleep_for(cfg_.retry.delay_for(attempt - 1, noise()));
            limiter_.acquire();
            httplib::Client client(origin_);
            client.set_connection_timeout(cfg_.timeout);
            client.set_read_timeout(cfg_.timeout);
            httplib::Headers headers;
            if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
            auto res = client.Post(path_, headers, body, "application/json");
            if (!res) {
                last_status = 0;
                last_error = "connection failed: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status >= 200 && res->status < 300) {
                json payload;
                try {
                    payload = json::parse(res->body);
                } catch (const json::parse_error& e) {
                    throw ProtocolError(std::string("response is not JSON: ") + e.what());
                }
                ChatResponse out = parse_chat_response(payload);
                out.retries = attempt;
                return out;
            }
            last_status = res->status;
            last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200);
            if (!RetryPolicy::retryable(res->status))
                throw TransportError(last_error, last_status, attempt + 1);
        }
        throw TransportError(last_error, last_status, cfg_.retry.max_attempts);
    }

    [[nodiscard]] const EndpointConfig& config() const { return cfg_; }

private:
    static void split_url(const std::string& url, std::string& origin, std::string& path) {
        auto scheme_end = url.find("://");
        auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
        auto slash = url.find('/', host_start);
        origin = slash == std::string::npos ? url : url.substr(0, slash);
        path = slash == std::string::npos ? std::string{} : url.substr(slash);
        while (!path.empty() && path.back() == '/') path.pop_back();
    }

    double noise() {
        std::lock_guard lock(rng_mu_);
        return std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
    }

    EndpointConfig cfg_;
    RateLimiter limiter_;
    std::string origin_;
    std::string path_;
    std::string api_key_;
    std::mutex rng_mu_;
    std::mt19937_64 rng_{std::random_device{}()};
};

}  // namespace josh
