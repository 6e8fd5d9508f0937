#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>

#include "planql/http_client.hpp"
#include "planql/providers.hpp"

using namespace planql;
using nlohmann::json;

// Counting fake transport: records requests, plays back queued responses.
class FakeTransport : public HttpTransport {
public:
    std::vector<HttpResponse> queue;
    std::vector<std::string> bodies;
    std::vector<std::vector<std::pair<std::string, std::string>>> headers_seen;
    size_t calls = 0;

    HttpResponse post(const std::string&, const std::string& body,
                      const std::vector<std::pair<std::string, std::string>>& headers,
                      double) override {
        ++calls;
        bodies.push_back(body);
        headers_seen.push_back(headers);
        if (queue.empty()) return {200, "{}", "", false};
        auto res = queue.front();
        queue.erase(queue.begin());
        return res;
    }
};

static ProviderConfig fast_config() {
    ProviderConfig cfg;
    cfg.endpoint = "http://localhost:9/v1/chat/completions";
    cfg.model = "test-model";
    cfg.retry.attempts = 3;
    cfg.retry.base_delay_ms = 1; // keep test retries fast
    return cfg;
}

TEST_CASE("scripted chat: plays the trace once, then errors") {
    ScriptedChat chat({"A", "B"});
    CHECK(chat.complete({{"user", "x"}}) == "A");
    CHECK(chat.complete({{"user", "y"}}) == "B");
    try {
        chat.complete({{"user", "z"}});
        FAIL("expected trace-exhausted");
    } catch (const Error& e) {
        CHECK(e.kind() == "trace-exhausted");
    }
}

TEST_CASE("echo chat returns the last user message") {
    EchoChat chat;
    CHECK(chat.complete({{"system", "s"}, {"user", "first"}, {"assistant", "a"},
                         {"user", "second"}}) == "second");
}

TEST_CASE("stub embedder: one vector per text, unit norm, deterministic") {
    StubEmbedder e;
    auto out = e.embed({"a b c", "a b c", ""});
    REQUIRE(out.size() == 3);
    CHECK(out[0] == out[1]);
    for (const auto& v : out) {
        double n = 0;
        for (double x : v) n += x * x;
        CHECK(std::sqrt(n) == Catch::Approx(1.0).margin(1e-12));
    }
}

TEST_CASE("chat provider parses the chat-completions shape and sends auth") {
    auto transport = std::make_shared<FakeTransport>();
    transport->queue.push_back(
        {200, R"({"choices":[{"message":{"role":"assistant","content":"hi there"}}]})", "",
         false});
    setenv("PLANQL_API_KEY", "sk-test", 1);
    HttpChatProvider chat(fast_config(), transport);
    auto text = chat.complete({{"system", "be brief"}, {"user", "hello"}});
    unsetenv("PLANQL_API_KEY");

    CHECK(text == "hi there");
    REQUIRE(transport->calls == 1);
    auto body = json::parse(transport->bodies[0]);
    CHECK(body.at("model") == "test-model");
    REQUIRE(body.at("messages").size() == 2);
    CHECK(body.at("messages")[1].at("content") == "hello");
    bool has_auth = false;
    for (const auto& [k, v] : transport->headers_seen[0])
        if (k == "Authorization" && v == "Bearer sk-test") has_auth = true;
    CHECK(has_auth);
}

TEST_CASE("retry policy: transient failures retried, total attempts capped") {
    auto transport = std::make_shared<FakeTransport>();
    transport->queue = {{500, "oops", "", false},
                        {0, "", "connection refused", false},
                        {500, "oops", "", false}};
    HttpChatProvider chat(fast_config(), transport);
    try {
        chat.complete({{"user", "x"}});
        FAIL("expected exhausted-retries");
    } catch (const Error& e) {
        CHECK(e.kind() == "exhausted-retries");
    }
    CHECK(transport->calls == 3); // never exceeds the configured attempts

    // success on the second attempt stops retrying
    auto t2 = std::make_shared<FakeTransport>();
    t2->queue = {{429, "slow down", "", false},
                 {200, R"({"choices":[{"message":{"content":"ok"}}]})", "", false}};
    HttpChatProvider c2(fast_config(), t2);
    CHECK(c2.complete({{"user", "x"}}) == "ok");
    CHECK(t2->calls == 2);
}

TEST_CASE("auth failures do not retry; timeouts are reported distinctly") {
    auto transport = std::make_shared<FakeTransport>();
    transport->queue = {{401, "no", "", false}};
    HttpChatProvider chat(fast_config(), transport);
    try {
        chat.complete({{"user", "x"}});
        FAIL("expected auth-failure");
    } catch (const Error& e) {
        CHECK(e.kind() == "auth-failure");
    }
    CHECK(transport->calls == 1);

    auto t2 = std::make_shared<FakeTransport>();
    t2->queue = {{0, "", "read timeout", true}, {0, "", "read timeout", true},
                 {0, "", "read timeout", true}};
    HttpChatProvider c2(fast_config(), t2);
    try {
        c2.complete({{"user", "x"}});
        FAIL("expected timeout");
    } catch (const Error& e) {
        CHECK(e.kind() == "timeout");
    }
}

TEST_CASE("plain http to a non-local host is refused") {
    auto transport = std::make_shared<FakeTransport>();
    ProviderConfig cfg = fast_config();
    cfg.endpoint = "http://api.example.com/v1/chat/completions";
    HttpChatProvider chat(cfg, transport);
    try {
        chat.complete({{"user", "x"}});
        FAIL("expected insecure-endpoint");
    } catch (const Error& e) {
        CHECK(e.kind() == "insecure-endpoint");
    }
    CHECK(transport->calls == 0);
}

TEST_CASE("embed provider: order-aligned vectors, dimension checks") {
    auto transport = std::make_shared<FakeTransport>();
    transport->queue.push_back(
        {200,
         R"({"data":[{"index":1,"embedding":[0.0,1.0]},{"index":0,"embedding":[1.0,0.0]}]})",
         "", false});
    ProviderConfig cfg = fast_config();
    cfg.endpoint = "http://127.0.0.1:9/v1/embeddings";
    HttpEmbedProvider emb(cfg, transport);
    auto out = emb.embed({"first", "second"});
    REQUIRE(out.size() == 2);
    CHECK(out[0] == Embedding{1.0, 0.0});
    CHECK(out[1] == Embedding{0.0, 1.0});

    auto t2 = std::make_shared<FakeTransport>();
    t2->queue.push_back(
        {200, R"({"data":[{"embedding":[1.0]},{"embedding":[1.0,2.0]}]})", "", false});
    HttpEmbedProvider e2(cfg, t2);
    try {
        e2.embed({"a", "b"});
        FAIL("expected dimension-inconsistency");
    } catch (const Error& e) {
        CHECK(e.kind() == "dimension-inconsistency");
    }
}

TEST_CASE("url parsing rejects unknown schemes, splits host and path") {
    auto u = parse_url("https://api.example.com/v1/chat");
    CHECK(u.https);
    CHECK(u.host == "api.example.com");
    CHECK(u.path == "/v1/chat");
    auto v = parse_url("http://localhost:8080");
    CHECK(v.path == "/");
    CHECK(v.host == "localhost");
    CHECK_THROWS_AS(parse_url("ftp://nope"), Error);
}

// Opt-in live smoke test, excluded from the default suite.
TEST_CASE("live chat endpoint answers", "[.live]") {
    const char* endpoint = std::getenv("PLANQL_LIVE_ENDPOINT");
    const char* model = std::getenv("PLANQL_LIVE_MODEL");
    if (!endpoint || !model) SKIP("PLANQL_LIVE_ENDPOINT / PLANQL_LIVE_MODEL not set");
    ProviderConfig cfg;
    cfg.endpoint = endpoint;
    cfg.model = model;
    HttpChatProvider chat(cfg);
    auto text = chat.complete({{"user", "Reply with the single word: ready"}});
    CHECK_FALSE(text.empty());
}
