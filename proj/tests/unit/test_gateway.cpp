#include <atomic>
#include <chrono>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "doctest.h"
#include "testutil.hpp"
#include "xpandir/error.hpp"
#include "xpandir/gateway.hpp"
#include "xpandir/lang.hpp"

using namespace xpandir;
using ordered_json = nlohmann::ordered_json;

namespace {

MockBackend pong_backend(int max_in_flight = 8) {
    return MockBackend(MockScript({{"ping", "pong", false}}, std::nullopt), "m1",
                       max_in_flight);
}

ChatRequest request(std::string user) {
    ChatRequest req;
    req.system_message = "sys";
    req.user_message = std::move(user);
    return req;
}

// do_generate that parks until enough callers pile up, to observe the cap.
class GateBackend : public Backend {
  public:
    explicit GateBackend(int limit) : Backend("gate", limit) {}

    std::atomic<int> active{0};
    std::atomic<int> peak{0};

  protected:
    GenerationResult do_generate(const ChatRequest&) override {
        int now = ++active;
        int prev = peak.load();
        while (prev < now && !peak.compare_exchange_weak(prev, now)) {
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(25));
        --active;
        GenerationResult result;
        result.text = "ok";
        return result;
    }
};

}  // namespace

TEST_CASE("generate validates the request before taking a slot") {
    MockBackend backend = pong_backend();

    ChatRequest req = request("ping");
    req.system_message.clear();
    CHECK_THROWS_AS(backend.generate(req), InvalidRequest);

    req = request("");
    CHECK_THROWS_AS(backend.generate(req), InvalidRequest);

    req = request("ping");
    req.max_new_tokens = 0;
    CHECK_THROWS_AS(backend.generate(req), InvalidRequest);

    req = request("ping");
    req.temperature = -0.5;
    CHECK_THROWS_AS(backend.generate(req), InvalidRequest);

    CHECK(backend.calls() == 0);  // none of those reached the transport
}

TEST_CASE("generate trims output, stamps the backend id, and counts calls") {
    MockBackend backend(MockScript({{"ping", "  pong\n\t ", false},
                                    {"blank", " \n\t ", false}},
                                   std::nullopt),
                        "m1");

    GenerationResult result = backend.generate(request("ping"));
    CHECK(result.text == "pong");
    CHECK(result.backend_id == "m1");
    CHECK(result.latency_ms == 0);
    CHECK(result.attempt_count == 1);
    CHECK_FALSE(result.truncated);
    CHECK(backend.calls() == 1);

    // whitespace-only output is an error, but the transport was reached
    CHECK_THROWS_AS(backend.generate(request("blank")), ResponseEmpty);
    CHECK(backend.calls() == 2);
}

TEST_CASE("backend rejects a nonpositive in-flight limit") {
    CHECK_THROWS_AS(pong_backend(0), ConfigError);
}

TEST_CASE("in-flight requests never exceed the cap") {
    GateBackend backend(2);
    std::vector<std::thread> threads;
    for (int i = 0; i < 6; ++i)
        threads.emplace_back([&] { backend.generate(request("go")); });
    for (std::thread& t : threads) t.join();
    CHECK(backend.peak.load() <= 2);
    CHECK(backend.peak.load() >= 1);
    CHECK(backend.calls() == 6);
}

TEST_CASE("translation prompt pair is fixed") {
    ChatRequest req = translation_request("hello world", LangCode::parse("en"),
                                          LangCode::parse("fr"));
    CHECK(req.system_message ==
          "You are a translation model. Respond only with the translation.");
    CHECK(req.user_message ==
          "Translate the following text from English to French:\nhello world");

    MockBackend backend(
        MockScript({{req.user_message, " bonjour le monde ", false}}, std::nullopt));
    CHECK(translate(backend, "hello world", LangCode::parse("en"),
                    LangCode::parse("fr")) == "bonjour le monde");
    CHECK_THROWS_AS(translate(backend, "x", LangCode::parse("en"), LangCode::parse("en")),
                    InvalidRequest);
}

TEST_CASE("mock script rules apply in order, then the default template") {
    MockScript script({{"needle", "exact hit", false},
                       {"needle", "substring hit", true},
                       {"eed", "fragment hit", true}},
                      "echo <query>");
    CHECK(script.resolve("needle") == "exact hit");
    CHECK(script.resolve("a needle b") == "substring hit");
    CHECK(script.resolve("feed") == "fragment hit");
    CHECK(script.resolve("nothing scripted") == "echo nothing scripted");

    MockScript no_default({{"needle", "exact hit", false}}, std::nullopt);
    CHECK_FALSE(no_default.resolve("miss").has_value());
}

TEST_CASE("extract_query recovers the raw query from every prompt shape") {
    CHECK(extract_query("Please write a passage to answer the question.\n"
                        "Question: original name of mercury") ==
          "original name of mercury");
    CHECK(extract_query("Answer the following query, give the rationale before "
                        "answering: why is the sky blue") == "why is the sky blue");
    CHECK(extract_query("Rephrase and expand the question, and respond. who wrote "
                        "hamlet") == "who wrote hamlet");
    CHECK(extract_query("Please write a passage that answers the given query:\n\n"
                        "Query: boiling point\nPassage: Water boils.\n\n"
                        "Query: capital of france\nPassage:") == "capital of france");
    CHECK(extract_query("Translate the following text from English to German:\n"
                        "good morning") == "good morning");
    CHECK(extract_query("free form text") == "free form text");
}

TEST_CASE("mock script loads JSONL rules and reports malformed records") {
    testutil::TempDir tmp("mockscript");
    testutil::spit(tmp.path / "s.jsonl",
                   "{\"match\":\"ping\",\"response\":\"pong\"}\n"
                   "\n"
                   "{\"match\":\"art\",\"response\":\"sub\",\"mode\":\"substring\"}\n"
                   "{\"default\":\"echo <query>\"}\n");
    MockScript script = MockScript::load(tmp.file("s.jsonl"));
    CHECK(script.resolve("ping") == "pong");
    CHECK(script.resolve("apartment") == "sub");
    CHECK(script.resolve("other") == "echo other");

    CHECK_THROWS_AS(MockScript::load(tmp.file("absent.jsonl")), IoError);

    testutil::spit(tmp.path / "bad1.jsonl", "{\"match\":\"a\"}\n");
    CHECK_THROWS_AS(MockScript::load(tmp.file("bad1.jsonl")), MalformedRecord);

    testutil::spit(tmp.path / "bad2.jsonl",
                   "{\"match\":\"a\",\"response\":\"b\"}\nnot json\n");
    try {
        MockScript::load(tmp.file("bad2.jsonl"));
        FAIL("expected MalformedRecord");
    } catch (const MalformedRecord& e) {
        CHECK(e.line() == 2);
    }

    testutil::spit(tmp.path / "bad3.jsonl",
                   "{\"match\":\"a\",\"response\":\"b\",\"mode\":\"regex\"}\n");
    CHECK_THROWS_AS(MockScript::load(tmp.file("bad3.jsonl")), MalformedRecord);
}

TEST_CASE("mock backend without a matching rule reports the gateway as down") {
    MockBackend backend = pong_backend();
    CHECK_THROWS_AS(backend.generate(request("unscripted")), BackendUnavailable);
}

TEST_CASE("http backend speaks the chat wire protocol against a local server") {
    MockScript script({{"ping", "pong over http", false}}, std::nullopt);
    MockServer server(script);
    int port = server.bind_any();
    std::thread serving([&] { server.listen_bound(); });
    REQUIRE(server.wait_until_ready());

    HttpBackendConfig cfg;
    cfg.base_url = "http://127.0.0.1:" + std::to_string(port);
    cfg.model = "mock-model";
    cfg.max_attempts = 2;
    cfg.base_delay_ms = 1;
    cfg.max_delay_ms = 2;
    cfg.timeout_s = 10;

    SUBCASE("scripted hit returns the generation on the first attempt") {
        HttpBackend backend(cfg, "remote");
        GenerationResult result = backend.generate(request("ping"));
        CHECK(result.text == "pong over http");
        CHECK(result.backend_id == "remote");
        CHECK(result.attempt_count == 1);
        CHECK_FALSE(result.truncated);
    }

    SUBCASE("default id combines model and base url") {
        HttpBackend backend(cfg);
        CHECK(backend.id() == "mock-model@" + cfg.base_url);
    }

    SUBCASE("unscripted prompt turns server errors into BackendUnavailable") {
        HttpBackend backend(cfg, "remote");
        CHECK_THROWS_AS(backend.generate(request("unscripted")), BackendUnavailable);
    }

    server.stop();
    serving.join();
}

TEST_CASE("http backend retry, auth, and rejection paths") {
    std::atomic<int> flaky_hits{0};
    std::string seen_auth;
    httplib::Server srv;
    srv.Post("/v1/chat/completions", [&](const httplib::Request& req,
                                         httplib::Response& res) {
        ordered_json body = ordered_json::parse(req.body);
        std::string user;
        for (const auto& m : body["messages"])
            if (m.value("role", "") == "user") user = m.value("content", "");

        auto reply = [&](const std::string& text, const std::string& reason) {
            ordered_json out;
            out["choices"] = ordered_json::array(
                {{{"message", {{"role", "assistant"}, {"content", text}}},
                  {"finish_reason", reason}}});
            res.set_content(out.dump(), "application/json");
        };
        if (user == "authcheck") return reply(req.get_header_value("Authorization"), "stop");
        if (user == "flaky") {
            if (flaky_hits.fetch_add(1) == 0) {
                res.status = 503;
                return;
            }
            return reply("second try", "stop");
        }
        if (user == "badreq") {
            res.status = 422;
            res.set_content(R"({"error":"bad shape"})", "application/json");
            return;
        }
        if (user == "longone") return reply("cut short", "length");
        res.status = 500;
    });
    int port = srv.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread serving([&] { srv.listen_after_bind(); });
    while (!srv.is_running()) std::this_thread::sleep_for(std::chrono::milliseconds(5));

    HttpBackendConfig cfg;
    cfg.base_url = "http://127.0.0.1:" + std::to_string(port);
    cfg.model = "m";
    cfg.max_attempts = 3;
    cfg.base_delay_ms = 1;
    cfg.max_delay_ms = 2;
    cfg.timeout_s = 10;

    SUBCASE("transient failures are retried and counted") {
        HttpBackend backend(cfg, "r");
        GenerationResult result = backend.generate(request("flaky"));
        CHECK(result.text == "second try");
        CHECK(result.attempt_count == 2);
        CHECK(flaky_hits.load() == 2);
    }

    SUBCASE("non-transient rejections are not retried") {
        HttpBackend backend(cfg, "r");
        CHECK_THROWS_AS(backend.generate(request("badreq")), InvalidRequest);
    }

    SUBCASE("length finish reason marks the generation truncated") {
        HttpBackend backend(cfg, "r");
        CHECK(backend.generate(request("longone")).truncated);
    }

    SUBCASE("api key falls back to the environment") {
        setenv("XPANDIR_API_KEY", "sekrit", 1);
        HttpBackend backend(cfg, "r");
        unsetenv("XPANDIR_API_KEY");
        CHECK(backend.generate(request("authcheck")).text == "Bearer sekrit");
    }

    SUBCASE("explicit api key wins over the environment") {
        setenv("XPANDIR_API_KEY", "ignored", 1);
        HttpBackendConfig keyed = cfg;
        keyed.api_key = "direct";
        HttpBackend backend(keyed, "r");
        unsetenv("XPANDIR_API_KEY");
        CHECK(backend.generate(request("authcheck")).text == "Bearer direct");
    }

    srv.stop();
    serving.join();
}

TEST_CASE("http backend config is validated up front") {
    HttpBackendConfig cfg;
    cfg.model = "m";
    CHECK_THROWS_AS(HttpBackend{cfg}, ConfigError);  // no base_url
    cfg.base_url = "http://127.0.0.1:1";
    cfg.model.clear();
    CHECK_THROWS_AS(HttpBackend{cfg}, ConfigError);  // no model
    cfg.model = "m";
    cfg.max_attempts = 0;
    CHECK_THROWS_AS(HttpBackend{cfg}, ConfigError);
}
