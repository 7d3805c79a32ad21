#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <json.hpp>

#include "specfi/errors.hpp"
#include "specfi/llm.hpp"
#include "specfi/text.hpp"
#include "specfi/util.hpp"

using namespace specfi;
using nlohmann::json;

TEST_CASE("mock chat echoes the target narrative description") {
    MockChatProvider p;
    ChatRequest req;
    req.user = "Write a plausible passage.\n\nNarrative: glacier melt is exaggerated\n";
    req.seed = 5;
    auto out = p.complete(req);
    std::string expected_suffix = " v" + hex64(fnv1a64_u64(5)).substr(0, 6);
    CHECK(out == "glacier melt is exaggerated" + expected_suffix);
    CHECK(p.complete(req) == out);  // pure function of (prompt, seed)
    req.seed = 6;
    CHECK(p.complete(req) != out);  // seed changes the filler token
}

TEST_CASE("mock chat folds in the target narrative's few-shot example") {
    MockChatProvider p;
    ChatRequest req;
    req.user =
        "Narrative: glacier melt\nText: The survey shows thicker ice.\n\n"
        "Narrative: carbon boon\nText: Crops love carbon dioxide.\n\n"
        "Narrative: glacier melt\n";
    req.seed = 1;
    auto out = p.complete(req);
    CHECK(out.rfind("glacier melt The survey shows thicker ice. v", 0) == 0);

    // a different target picks its own example, not the first pair
    req.user =
        "Narrative: glacier melt\nText: The survey shows thicker ice.\n\n"
        "Narrative: carbon boon\nText: Crops love carbon dioxide.\n\n"
        "Narrative: carbon boon\n";
    out = p.complete(req);
    CHECK(out.rfind("carbon boon Crops love carbon dioxide. v", 0) == 0);
}

TEST_CASE("mock chat without a narrative marker echoes the prompt") {
    MockChatProvider p;
    ChatRequest req;
    req.user = "  summarize these notes  ";
    req.seed = 3;
    auto out = p.complete(req);
    CHECK(out.rfind("summarize these notes v", 0) == 0);
    CHECK(p.model_tag() == "mock-llm");
}

TEST_CASE("mock chat honors max_tokens as a word cap") {
    MockChatProvider p;
    ChatRequest req;
    req.user = "Narrative: one two three four five six seven eight\n";
    req.seed = 0;
    req.max_tokens = 3;
    auto out = p.complete(req);
    CHECK(word_count(out) == 3);
    CHECK(out == "one two three");
}

TEST_CASE("mock chat defaults the seed to zero") {
    MockChatProvider p;
    ChatRequest req;
    req.user = "Narrative: x\n";
    auto implicit = p.complete(req);
    req.seed = 0;
    CHECK(p.complete(req) == implicit);
}

namespace {

struct ChatServer {
    httplib::Server server;
    std::thread thread;
    int port = 0;
    std::atomic<int> requests{0};
    std::atomic<int> failures_left{0};
    int failure_status = 500;
    std::string reply = "hello from the model";
    bool malformed = false;
    std::string last_auth;
    std::string last_body;

    ChatServer() {
        server.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                   httplib::Response& res) {
            ++requests;
            last_auth = req.get_header_value("Authorization");
            last_body = req.body;
            if (failures_left > 0) {
                --failures_left;
                res.status = failure_status;
                return;
            }
            if (malformed) {
                res.set_content("{\"unexpected\":true}", "application/json");
                return;
            }
            json out;
            out["choices"] = json::array({{{"message", {{"role", "assistant"},
                                                        {"content", reply}}}}});
            res.set_content(out.dump(), "application/json");
        });
        server.Post("/v1/reject", [](const httplib::Request&, httplib::Response& res) {
            res.status = 400;
        });
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~ChatServer() {
        server.stop();
        thread.join();
    }
    std::string endpoint(const std::string& path = "/v1/chat/completions") const {
        return "http://127.0.0.1:" + std::to_string(port) + path;
    }
};

ProviderConfig chat_config(const ChatServer& srv) {
    ProviderConfig c;
    c.endpoint = srv.endpoint();
    c.model = "test-chat";
    c.max_retries = 3;
    c.api_key_env = "SPECFI_TEST_KEY";
    return c;
}

}  // namespace

TEST_CASE("http chat speaks the wire contract") {
    ChatServer srv;
    HttpChatProvider p(chat_config(srv));
    ChatRequest req;
    req.system = "you are terse";
    req.user = "say hi";
    req.temperature = 0.7;
    req.max_tokens = 42;
    req.seed = 99;
    CHECK(p.complete(req) == "hello from the model");
    CHECK(p.model_tag() == "test-chat");

    json body = json::parse(srv.last_body);
    CHECK(body.at("model") == "test-chat");
    REQUIRE(body.at("messages").size() == 2);
    CHECK(body["messages"][0].at("role") == "system");
    CHECK(body["messages"][0].at("content") == "you are terse");
    CHECK(body["messages"][1].at("role") == "user");
    CHECK(body["messages"][1].at("content") == "say hi");
    CHECK(body.at("temperature") == doctest::Approx(0.7));
    CHECK(body.at("max_tokens") == 42);
    CHECK(body.at("seed") == 99);
}

TEST_CASE("http chat omits the seed field when unset") {
    ChatServer srv;
    HttpChatProvider p(chat_config(srv));
    ChatRequest req;
    req.user = "x";
    p.complete(req);
    json body = json::parse(srv.last_body);
    CHECK(!body.contains("seed"));
}

TEST_CASE("http chat sends the bearer token from the configured env var") {
    ChatServer srv;
    ::setenv("SPECFI_TEST_KEY", "sk-chat-456", 1);
    HttpChatProvider p(chat_config(srv));
    ChatRequest req;
    req.user = "x";
    p.complete(req);
    CHECK(srv.last_auth == "Bearer sk-chat-456");
    ::unsetenv("SPECFI_TEST_KEY");
}

TEST_CASE("http chat retries 500s and 429s, then succeeds") {
    ChatServer srv;
    srv.failures_left = 2;
    HttpChatProvider p(chat_config(srv));
    ChatRequest req;
    req.user = "x";
    CHECK(p.complete(req) == "hello from the model");
    CHECK(srv.requests == 3);

    srv.requests = 0;
    srv.failures_left = 1;
    srv.failure_status = 429;
    CHECK(p.complete(req) == "hello from the model");
    CHECK(srv.requests == 2);
}

TEST_CASE("http chat gives up after max_retries") {
    ChatServer srv;
    srv.failures_left = 100;
    auto cfg = chat_config(srv);
    cfg.max_retries = 1;
    HttpChatProvider p(cfg);
    ChatRequest req;
    req.user = "x";
    try {
        p.complete(req);
        FAIL("expected provider error");
    } catch (const error& e) {
        CHECK(e.kind() == errc::provider);
    }
    CHECK(srv.requests == 2);
}

TEST_CASE("http chat treats non-retryable statuses as immediate provider errors") {
    ChatServer srv;
    auto cfg = chat_config(srv);
    cfg.endpoint = srv.endpoint("/v1/reject");  // always 400
    HttpChatProvider p(cfg);
    ChatRequest req;
    req.user = "x";
    try {
        p.complete(req);
        FAIL("expected provider error");
    } catch (const error& e) {
        CHECK(e.kind() == errc::provider);
        CHECK(std::string(e.what()).find("400") != std::string::npos);
    }
}

TEST_CASE("http chat rejects malformed response bodies") {
    ChatServer srv;
    srv.malformed = true;
    HttpChatProvider p(chat_config(srv));
    ChatRequest req;
    req.user = "x";
    try {
        p.complete(req);
        FAIL("expected provider error");
    } catch (const error& e) {
        CHECK(e.kind() == errc::provider);
    }
}

TEST_CASE("http chat requires an endpoint with a scheme") {
    ProviderConfig cfg;
    cfg.endpoint = "not-a-url";
    HttpChatProvider p(cfg);
    ChatRequest req;
    req.user = "x";
    CHECK_THROWS_AS(p.complete(req), error);
}
