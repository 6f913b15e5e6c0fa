#include <httplib.h>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdlib>
#include <thread>

#include "xpandir/error.hpp"
#include "xpandir/gateway.hpp"

namespace xpandir {

using ordered_json = nlohmann::ordered_json;

namespace {

bool transient_status(int status) { return status == 429 || status >= 500; }

int backoff_ms(const HttpBackendConfig& cfg, int attempt) {
    long delay = cfg.base_delay_ms;
    for (int i = 1; i < attempt && delay < cfg.max_delay_ms; ++i) delay *= 2;
    return static_cast<int>(std::min<long>(delay, cfg.max_delay_ms));
}

}  // namespace

HttpBackend::HttpBackend(HttpBackendConfig config, std::string id)
    : Backend(id.empty() ? config.model + "@" + config.base_url : std::move(id),
              config.max_in_flight),
      config_(std::move(config)) {
    if (config_.base_url.empty()) throw ConfigError("backend base_url is empty");
    if (config_.model.empty()) throw ConfigError("backend model is empty");
    if (config_.max_attempts < 1) throw ConfigError("max_attempts must be at least 1");
    if (config_.api_key.empty())
        if (const char* env = std::getenv("XPANDIR_API_KEY")) config_.api_key = env;
}

GenerationResult HttpBackend::do_generate(const ChatRequest& request) {
    ordered_json body;
    body["model"] = config_.model;
    body["messages"] = ordered_json::array(
        {{{"role", "system"}, {"content", request.system_message}},
         {{"role", "user"}, {"content", request.user_message}}});
    body["max_tokens"] = request.max_new_tokens;
    body["temperature"] = request.temperature;
    if (request.seed) body["seed"] = *request.seed;
    const std::string payload = body.dump();

    httplib::Headers headers;
    if (!config_.api_key.empty())
        headers.emplace("Authorization", "Bearer " + config_.api_key);

    auto start = std::chrono::steady_clock::now();
    std::string last_failure;
    for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
        httplib::Client client(config_.base_url);
        client.set_connection_timeout(config_.timeout_s, 0);
        client.set_read_timeout(config_.timeout_s, 0);

        httplib::Result res =
            client.Post("/v1/chat/completions", headers, payload, "application/json");

        if (!res) {
            last_failure = "transport error: " + httplib::to_string(res.error());
        } else if (res->status == 200) {
            ordered_json reply;
            try {
                reply = ordered_json::parse(res->body);
            } catch (const ordered_json::parse_error& e) {
                throw BackendUnavailable("backend returned unparseable JSON: " +
                                         std::string(e.what()));
            }
            if (!reply.contains("choices") || reply["choices"].empty())
                throw BackendUnavailable("backend response has no choices");
            const auto& choice = reply["choices"][0];
            GenerationResult result;
            result.text = choice.at("message").value("content", "");
            result.truncated = choice.value("finish_reason", "") == "length";
            result.attempt_count = attempt;
            result.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                    std::chrono::steady_clock::now() - start)
                                    .count();
            return result;
        } else if (transient_status(res->status)) {
            last_failure = "HTTP " + std::to_string(res->status);
        } else {
            // Malformed-request class: retrying cannot help.
            throw InvalidRequest("backend rejected request with HTTP " +
                                 std::to_string(res->status) + ": " +
                                 res->body.substr(0, 200));
        }

        if (attempt < config_.max_attempts)
            std::this_thread::sleep_for(
                std::chrono::milliseconds(backoff_ms(config_, attempt)));
    }
    throw BackendUnavailable("backend \"" + id() + "\" failed after " +
                             std::to_string(config_.max_attempts) +
                             " attempts; last: " + last_failure);
}

}  // namespace xpandir
