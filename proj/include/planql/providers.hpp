#pragma once

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "planql/error.hpp"

namespace planql {

using Embedding = std::vector<double>;

struct Message {
    std::string role; // system | user | assistant
    std::string content;
};

struct RetryPolicy {
    int attempts = 3;
    int base_delay_ms = 500; // doubles per retry
};

struct ProviderConfig {
    std::string endpoint;
    std::string model;
    std::string api_key_env = "PLANQL_API_KEY";
    double timeout_s = 60.0;
    RetryPolicy retry;
    double requests_per_minute = 0.0; // 0 = unlimited
};

// ---------------------------------------------------------------------------
// Contracts. All network access in the system flows through these two.
// ---------------------------------------------------------------------------

class ChatProvider {
public:
    virtual ~ChatProvider() = default;
    virtual std::string complete(const std::vector<Message>& messages) = 0;
};

class EmbedProvider {
public:
    virtual ~EmbedProvider() = default;
    virtual std::vector<Embedding> embed(const std::vector<std::string>& texts) = 0;
};

// ---------------------------------------------------------------------------
// Deterministic test doubles.
// ---------------------------------------------------------------------------

// Plays back a fixed list of turns; one per call, error past the end.
class ScriptedChat : public ChatProvider {
public:
    explicit ScriptedChat(std::vector<std::string> turns) : turns_(std::move(turns)) {}

    std::string complete(const std::vector<Message>&) override {
        if (next_ >= turns_.size())
            fail("trace-exhausted", "scripted trace has only " +
                                        std::to_string(turns_.size()) + " turns");
        return turns_[next_++];
    }

    size_t consumed() const { return next_; }

private:
    std::vector<std::string> turns_;
    size_t next_ = 0;
};

// Returns the last user message; handy for parser round-trips.
class EchoChat : public ChatProvider {
public:
    std::string complete(const std::vector<Message>& messages) override {
        for (auto it = messages.rbegin(); it != messages.rend(); ++it)
            if (it->role == "user") return it->content;
        fail("malformed-args", "echo provider needs at least one user message");
    }
};

// Bag-of-words embedder: lowercased alphanumeric tokens, FNV-1a hashed
// into 256 buckets, L2-normalized. Texts with no tokens map to a fixed
// unit vector so the nonzero-norm invariant always holds.
class StubEmbedder : public EmbedProvider {
public:
    static constexpr size_t kDim = 256;

    std::vector<Embedding> embed(const std::vector<std::string>& texts) override {
        std::vector<Embedding> out;
        out.reserve(texts.size());
        for (const auto& t : texts) out.push_back(embed_one(t));
        return out;
    }

    static Embedding embed_one(const std::string& text) {
        Embedding v(kDim, 0.0);
        size_t i = 0;
        bool any = false;
        while (i < text.size()) {
            while (i < text.size() && !std::isalnum(static_cast<unsigned char>(text[i]))) ++i;
            size_t start = i;
            uint64_t h = 0xcbf29ce484222325ull;
            while (i < text.size() && std::isalnum(static_cast<unsigned char>(text[i]))) {
                unsigned char c =
                    static_cast<unsigned char>(std::tolower(static_cast<unsigned char>(text[i])));
                h ^= c;
                h *= 1099511628211ull;
                ++i;
            }
            if (i > start) {
                v[h % kDim] += 1.0;
                any = true;
            }
        }
        if (!any) {
            v[0] = 1.0;
            return v;
        }
        double norm = 0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        for (double& x : v) x /= norm;
        return v;
    }
};

// ---------------------------------------------------------------------------
// Shared client plumbing: retry with exponential backoff, and a token
// bucket limiting requests per minute when configured.
// ---------------------------------------------------------------------------

class TokenBucket {
public:
    explicit TokenBucket(double requests_per_minute) : rpm_(requests_per_minute) {}

    void acquire() {
        if (rpm_ <= 0) return;
        std::unique_lock<std::mutex> lock(mu_);
        auto now = std::chrono::steady_clock::now();
        auto interval = std::chrono::duration<double>(60.0 / rpm_);
        if (last_.time_since_epoch().count() != 0 && now - last_ < interval) {
            auto wait = interval - (now - last_);
            lock.unlock();
            std::this_thread::sleep_for(
                std::chrono::duration_cast<std::chrono::milliseconds>(wait));
            lock.lock();
            now = std::chrono::steady_clock::now();
        }
        last_ = now;
    }

private:
    double rpm_;
    std::mutex mu_;
    std::chrono::steady_clock::time_point last_{};
};

// Runs fn up to policy.attempts times, backing off on transient failures.
// fn reports transient failures by returning false (with a reason);
// non-transient failures should throw directly.
template <typename Fn>
void with_retries(const RetryPolicy& policy, Fn&& fn) {
    std::string last_reason;
    bool last_was_timeout = false;
    for (int attempt = 0; attempt < std::max(1, policy.attempts); ++attempt) {
        if (attempt > 0) {
            int delay = policy.base_delay_ms << (attempt - 1);
            std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        }
        bool timed_out = false;
        if (fn(last_reason, timed_out)) return;
        last_was_timeout = timed_out;
    }
    if (last_was_timeout) fail("timeout", "request timed out: " + last_reason);
    fail("exhausted-retries", "gave up after " + std::to_string(std::max(1, policy.attempts)) +
                                  " attempts: " + last_reason);
}

inline std::string resolve_api_key(const ProviderConfig& cfg) {
    if (cfg.api_key_env.empty()) return "";
    const char* v = std::getenv(cfg.api_key_env.c_str());
    return v ? v : "";
}

} // namespace planql
