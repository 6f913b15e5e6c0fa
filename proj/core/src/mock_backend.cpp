#include <httplib.h>
#include <nlohmann/json.hpp>

#include <atomic>
#include <fstream>
#include <thread>

#include "xpandir/error.hpp"
#include "xpandir/gateway.hpp"

namespace xpandir {

using ordered_json = nlohmann::ordered_json;

MockScript::MockScript(std::vector<Rule> rules, std::optional<std::string> default_response)
    : rules_(std::move(rules)), default_response_(std::move(default_response)) {}

MockScript MockScript::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);

    std::vector<Rule> rules;
    std::optional<std::string> fallback;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ordered_json rec;
        try {
            rec = ordered_json::parse(line);
        } catch (const ordered_json::parse_error& e) {
            throw MalformedRecord(path, line_no, e.what());
        }
        if (rec.contains("default")) {
            fallback = rec.at("default").get<std::string>();
            continue;
        }
        if (!rec.contains("match") || !rec.contains("response"))
            throw MalformedRecord(path, line_no,
                                  "record needs either \"default\" or "
                                  "\"match\"+\"response\"");
        Rule rule;
        rule.match = rec.at("match").get<std::string>();
        rule.response = rec.at("response").get<std::string>();
        std::string mode = rec.value("mode", "exact");
        if (mode == "substring") rule.substring = true;
        else if (mode != "exact")
            throw MalformedRecord(path, line_no, "mode must be exact or substring");
        rules.push_back(std::move(rule));
    }
    return MockScript(std::move(rules), std::move(fallback));
}

std::string extract_query(const std::string& user_message) {
    // Few-shot prompts end with "Query: <q>\nPassage:".
    if (std::size_t q = user_message.rfind("\nQuery: ");
        q != std::string::npos && user_message.find("Passage:") != std::string::npos) {
        std::size_t start = q + 8;
        std::size_t end = user_message.find('\n', start);
        if (end == std::string::npos) end = user_message.size();
        return user_message.substr(start, end - start);
    }
    for (const char* marker : {"Question: ", "give the rationale before answering: ",
                               "and respond. "}) {
        if (std::size_t p = user_message.find(marker); p != std::string::npos)
            return user_message.substr(p + std::string(marker).size());
    }
    // Translation prompts carry the text after the first ":\n".
    if (std::size_t p = user_message.find(":\n"); p != std::string::npos)
        return user_message.substr(p + 2);
    return user_message;
}

std::optional<std::string> MockScript::resolve(const std::string& user_message) const {
    for (const Rule& rule : rules_) {
        bool hit = rule.substring ? user_message.find(rule.match) != std::string::npos
                                  : user_message == rule.match;
        if (hit) return rule.response;
    }
    if (!default_response_) return std::nullopt;
    std::string out = *default_response_;
    const std::string placeholder = "<query>";
    if (std::size_t p = out.find(placeholder); p != std::string::npos)
        out.replace(p, placeholder.size(), extract_query(user_message));
    return out;
}

MockBackend::MockBackend(MockScript script, std::string id, int max_in_flight)
    : Backend(std::move(id), max_in_flight), script_(std::move(script)) {}

GenerationResult MockBackend::do_generate(const ChatRequest& request) {
    std::optional<std::string> response = script_.resolve(request.user_message);
    if (!response) {
        std::string head = request.user_message.substr(0, 120);
        throw BackendUnavailable("mock script has no rule for prompt \"" + head + "\"");
    }
    GenerationResult result;
    result.text = *response;
    // Fixed latency and attempt count keep scripted runs byte-reproducible.
    result.latency_ms = 0;
    result.attempt_count = 1;
    return result;
}

struct MockServer::Impl {
    MockScript script;
    std::string model;
    httplib::Server server;
    int port = 0;
    std::atomic<bool> ready{false};
};

MockServer::MockServer(MockScript script, std::string model) : impl_(new Impl) {
    impl_->script = std::move(script);
    impl_->model = std::move(model);

    impl_->server.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                      httplib::Response& res) {
        ordered_json body;
        try {
            body = ordered_json::parse(req.body);
        } catch (const ordered_json::parse_error&) {
            res.status = 400;
            res.set_content(R"({"error":{"message":"invalid JSON"}})", "application/json");
            return;
        }
        std::string user;
        if (body.contains("messages"))
            for (const auto& m : body["messages"])
                if (m.value("role", "") == "user") user = m.value("content", "");
        if (user.empty()) {
            res.status = 400;
            res.set_content(R"({"error":{"message":"no user message"}})",
                            "application/json");
            return;
        }
        std::optional<std::string> text = impl_->script.resolve(user);
        if (!text) {
            res.status = 500;
            res.set_content(R"({"error":{"message":"no scripted response"}})",
                            "application/json");
            return;
        }
        ordered_json out;
        out["id"] = "mock-0";
        out["object"] = "chat.completion";
        out["model"] = impl_->model;
        out["choices"] = ordered_json::array(
            {{{"index", 0},
              {"message", {{"role", "assistant"}, {"content", *text}}},
              {"finish_reason", "stop"}}});
        res.set_content(out.dump(), "application/json");
    });
    impl_->server.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
        impl_->ready.store(true);
        res.set_content("ok", "text/plain");
    });
}

MockServer::~MockServer() { stop(); }

int MockServer::bind_any(const std::string& host) {
    impl_->port = impl_->server.bind_to_any_port(host);
    if (impl_->port <= 0) throw IoError("mock server cannot bind on " + host);
    return impl_->port;
}

bool MockServer::listen_bound() { return impl_->server.listen_after_bind(); }

bool MockServer::listen(const std::string& host, int port) {
    impl_->port = port;
    return impl_->server.listen(host, port);
}

void MockServer::stop() {
    if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

bool MockServer::wait_until_ready(int timeout_ms) const {
    for (int waited = 0; waited < timeout_ms; waited += 10) {
        if (impl_->server.is_running()) return true;
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    return impl_->server.is_running();
}

}  // namespace xpandir
