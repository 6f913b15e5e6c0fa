#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "xpandir/lang.hpp"

namespace xpandir {

struct ChatRequest {
    std::string system_message;
    std::string user_message;
    int max_new_tokens = 256;
    double temperature = 0.0;
    std::optional<std::uint64_t> seed;
};

struct GenerationResult {
    std::string text;  // whitespace-trimmed
    std::string backend_id;
    std::int64_t latency_ms = 0;
    int attempt_count = 1;
    bool truncated = false;  // generation stopped at the max_new_tokens ceiling
};

/// Generation backend with an in-flight request cap. generate() validates the
/// request, acquires a slot, delegates to the transport, and trims the output.
/// Safe for concurrent use from any number of threads.
class Backend {
  public:
    Backend(std::string id, int max_in_flight);
    virtual ~Backend() = default;

    Backend(const Backend&) = delete;
    Backend& operator=(const Backend&) = delete;

    const std::string& id() const { return id_; }

    GenerationResult generate(const ChatRequest& request);

    /// Number of generate() calls that reached the transport (cache-hit
    /// audits compare this against zero).
    std::uint64_t calls() const { return calls_.load(); }

  protected:
    virtual GenerationResult do_generate(const ChatRequest& request) = 0;

  private:
    std::string id_;
    std::atomic<std::uint64_t> calls_{0};
    std::mutex mu_;
    std::condition_variable cv_;
    int in_flight_ = 0;
    int limit_;
};

/// The fixed translation prompt pair for one text.
ChatRequest translation_request(const std::string& text, const LangCode& src,
                                const LangCode& tgt);

/// One generate() call with the translation prompt; src must differ from tgt.
std::string translate(Backend& backend, const std::string& text, const LangCode& src,
                      const LangCode& tgt);

/// Scripted responses: rules are tried in order against the user message,
/// then the default template (its "<query>" placeholder is replaced by the
/// query text recovered from the prompt).
class MockScript {
  public:
    struct Rule {
        std::string match;
        std::string response;
        bool substring = false;
    };

    MockScript() = default;
    MockScript(std::vector<Rule> rules, std::optional<std::string> default_response);

    /// JSONL records {"match":..., "response":..., "mode":"exact"|"substring"}
    /// or {"default": ...}.
    static MockScript load(const std::string& path);

    /// Resolved response, or nullopt when no rule and no default applies.
    std::optional<std::string> resolve(const std::string& user_message) const;

  private:
    std::vector<Rule> rules_;
    std::optional<std::string> default_response_;
};

/// Best-effort recovery of the raw query text from any of the gateway's
/// prompt shapes (used by mock default templates).
std::string extract_query(const std::string& user_message);

/// Deterministic backend: resolve() result, latency 0, single attempt.
class MockBackend : public Backend {
  public:
    explicit MockBackend(MockScript script, std::string id = "mock",
                         int max_in_flight = 8);

  protected:
    GenerationResult do_generate(const ChatRequest& request) override;

  private:
    MockScript script_;
};

/// Local HTTP server speaking the chat-completions wire protocol from a
/// MockScript, so the remote-backend path can be tested without a network.
class MockServer {
  public:
    explicit MockServer(MockScript script, std::string model = "mock-model");
    ~MockServer();

    /// Binds an ephemeral port and returns it; serving starts on listen().
    int bind_any(const std::string& host = "127.0.0.1");
    /// Blocks until stop(). Call bind_any() first, or use listen(host, port).
    bool listen_bound();
    bool listen(const std::string& host, int port);
    void stop();
    bool wait_until_ready(int timeout_ms = 5000) const;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct HttpBackendConfig {
    std::string base_url;  // scheme://host[:port]
    std::string model;
    std::string api_key;  // empty -> read XPANDIR_API_KEY
    int max_attempts = 4;
    int base_delay_ms = 250;
    int max_delay_ms = 4000;
    int timeout_s = 60;
    int max_in_flight = 4;
};

/// OpenAI-compatible chat-completions client. Transient failures (HTTP 429,
/// 5xx, transport errors) are retried with exponential backoff up to
/// max_attempts; malformed-request responses (other 4xx) are never retried.
class HttpBackend : public Backend {
  public:
    explicit HttpBackend(HttpBackendConfig config, std::string id = {});

  protected:
    GenerationResult do_generate(const ChatRequest& request) override;

  private:
    HttpBackendConfig config_;
};

}  // namespace xpandir
