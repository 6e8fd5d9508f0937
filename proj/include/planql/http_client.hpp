#pragma once

// HTTP-backed chat/embedding clients (chat-completions / embeddings wire
// shapes). Model differences are configuration, not code. Include this
// header only from targets linked against planql_net.

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "planql/providers.hpp"

namespace planql {

struct HttpResponse {
    int status = 0;          // 0 = transport-level failure
    std::string body;
    std::string error;       // transport failure description
    bool timed_out = false;
};

struct ParsedUrl {
    std::string scheme_host_port; // e.g. https://api.example.com:443
    std::string path;
    std::string host;
    bool https = false;
};

inline ParsedUrl parse_url(const std::string& url) {
    ParsedUrl out;
    std::string rest;
    if (url.rfind("https://", 0) == 0) {
        out.https = true;
        rest = url.substr(8);
    } else if (url.rfind("http://", 0) == 0) {
        rest = url.substr(7);
    } else {
        fail("invalid-config", "endpoint must start with http:// or https://: " + url);
    }
    size_t slash = rest.find('/');
    std::string hostport = slash == std::string::npos ? rest : rest.substr(0, slash);
    out.path = slash == std::string::npos ? "/" : rest.substr(slash);
    size_t colon = hostport.find(':');
    out.host = colon == std::string::npos ? hostport : hostport.substr(0, colon);
    out.scheme_host_port = (out.https ? "https://" : "http://") + hostport;
    return out;
}

inline bool is_local_host(const std::string& host) {
    return host == "localhost" || host == "127.0.0.1" || host == "::1";
}

// Transport seam so tests can count attempts and fake failures without a
// socket in sight.
class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    virtual HttpResponse post(const std::string& url, const std::string& body,
                              const std::vector<std::pair<std::string, std::string>>& headers,
                              double timeout_s) = 0;
};

class HttplibTransport : public HttpTransport {
public:
    HttpResponse post(const std::string& url, const std::string& body,
                      const std::vector<std::pair<std::string, std::string>>& headers,
                      double timeout_s) override {
        ParsedUrl u = parse_url(url);
        httplib::Client client(u.scheme_host_port);
        client.set_connection_timeout(std::chrono::duration<double>(timeout_s));
        client.set_read_timeout(std::chrono::duration<double>(timeout_s));
        client.set_write_timeout(std::chrono::duration<double>(timeout_s));
        httplib::Headers h;
        for (const auto& [k, v] : headers) h.emplace(k, v);
        auto res = client.Post(u.path, h, body, "application/json");
        HttpResponse out;
        if (!res) {
            out.error = httplib::to_string(res.error());
            out.timed_out = res.error() == httplib::Error::ConnectionTimeout ||
                            res.error() == httplib::Error::Read ||
                            res.error() == httplib::Error::Write;
            return out;
        }
        out.status = res->status;
        out.body = res->body;
        return out;
    }
};

namespace detail {

inline nlohmann::json http_json_call(HttpTransport& transport, const ProviderConfig& cfg,
                                     const nlohmann::json& request, TokenBucket* bucket) {
    ParsedUrl u = parse_url(cfg.endpoint);
    if (!u.https && !is_local_host(u.host))
        fail("insecure-endpoint",
             "refusing plain http to non-localhost endpoint '" + cfg.endpoint + "'");

    std::vector<std::pair<std::string, std::string>> headers;
    std::string key = resolve_api_key(cfg);
    if (!key.empty()) headers.emplace_back("Authorization", "Bearer " + key);

    std::string body = request.dump();
    nlohmann::json parsed;
    with_retries(cfg.retry, [&](std::string& reason, bool& timed_out) {
        if (bucket) bucket->acquire();
        HttpResponse res = transport.post(cfg.endpoint, body, headers, cfg.timeout_s);
        if (res.status == 401 || res.status == 403)
            fail("auth-failure", "endpoint returned HTTP " + std::to_string(res.status));
        if (res.status == 0) {
            reason = res.error.empty() ? "transport failure" : res.error;
            timed_out = res.timed_out;
            return false;
        }
        if (res.status >= 500 || res.status == 429) {
            reason = "HTTP " + std::to_string(res.status);
            return false;
        }
        if (res.status != 200)
            fail("provider-unreachable",
                 "endpoint returned HTTP " + std::to_string(res.status) + ": " + res.body);
        parsed = nlohmann::json::parse(res.body, nullptr, false);
        if (parsed.is_discarded())
            fail("provider-unreachable", "endpoint returned unparsable JSON");
        return true;
    });
    return parsed;
}

} // namespace detail

// {model, messages:[{role,content}...]} -> first choice's message content.
class HttpChatProvider : public ChatProvider {
public:
    HttpChatProvider(ProviderConfig cfg, std::shared_ptr<HttpTransport> transport = nullptr)
        : cfg_(std::move(cfg)),
          transport_(transport ? std::move(transport) : std::make_shared<HttplibTransport>()),
          bucket_(cfg_.requests_per_minute) {}

    std::string complete(const std::vector<Message>& messages) override {
        if (messages.empty()) fail("malformed-args", "chat_complete needs at least one message");
        nlohmann::json req{{"model", cfg_.model}, {"messages", nlohmann::json::array()}};
        for (const auto& m : messages)
            req["messages"].push_back({{"role", m.role}, {"content", m.content}});
        auto res = detail::http_json_call(*transport_, cfg_, req, &bucket_);
        if (res.contains("choices") && res.at("choices").is_array() &&
            !res.at("choices").empty()) {
            const auto& first = res.at("choices").at(0);
            if (first.contains("message") && first.at("message").contains("content"))
                return first.at("message").at("content").get<std::string>();
            if (first.contains("text")) return first.at("text").get<std::string>();
        }
        if (res.contains("content") && res.at("content").is_string())
            return res.at("content").get<std::string>();
        fail("provider-unreachable", "chat response carries no completion text: " + res.dump());
    }

private:
    ProviderConfig cfg_;
    std::shared_ptr<HttpTransport> transport_;
    TokenBucket bucket_;
};

// {model, input:[texts]} -> data[i].embedding, order-aligned with inputs.
class HttpEmbedProvider : public EmbedProvider {
public:
    HttpEmbedProvider(ProviderConfig cfg, std::shared_ptr<HttpTransport> transport = nullptr)
        : cfg_(std::move(cfg)),
          transport_(transport ? std::move(transport) : std::make_shared<HttplibTransport>()),
          bucket_(cfg_.requests_per_minute) {}

    std::vector<Embedding> embed(const std::vector<std::string>& texts) override {
        if (texts.empty()) fail("malformed-args", "embed needs at least one text");
        nlohmann::json req{{"model", cfg_.model}, {"input", texts}};
        auto res = detail::http_json_call(*transport_, cfg_, req, &bucket_);
        if (!res.contains("data") || !res.at("data").is_array())
            fail("provider-unreachable", "embedding response carries no data array");
        std::vector<Embedding> out(texts.size());
        size_t fallback_index = 0;
        for (const auto& item : res.at("data")) {
            size_t idx = item.contains("index") ? item.at("index").get<size_t>()
                                                : fallback_index;
            ++fallback_index;
            if (idx >= out.size())
                fail("provider-unreachable", "embedding index out of range");
            out[idx] = item.at("embedding").get<Embedding>();
        }
        size_t dim = out.empty() ? 0 : out[0].size();
        for (const auto& e : out)
            if (e.size() != dim || e.empty())
                fail("dimension-inconsistency",
                     "embeddings differ in dimensionality or are empty");
        return out;
    }

private:
    ProviderConfig cfg_;
    std::shared_ptr<HttpTransport> transport_;
    TokenBucket bucket_;
};

} // namespace planql
