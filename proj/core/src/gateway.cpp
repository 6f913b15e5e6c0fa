#include "xpandir/gateway.hpp"

#include "xpandir/error.hpp"

namespace xpandir {

namespace {

std::string trim_ws(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

Backend::Backend(std::string id, int max_in_flight)
    : id_(std::move(id)), limit_(max_in_flight) {
    if (limit_ < 1) throw ConfigError("in-flight limit must be at least 1");
}

GenerationResult Backend::generate(const ChatRequest& request) {
    if (request.system_message.empty() || request.user_message.empty())
        throw InvalidRequest("chat messages must be non-empty");
    if (request.max_new_tokens < 1)
        throw InvalidRequest("max_new_tokens must be at least 1");
    if (request.temperature < 0.0)
        throw InvalidRequest("temperature must be nonnegative");

    {
        std::unique_lock<std::mutex> lock(mu_);
        cv_.wait(lock, [&] { return in_flight_ < limit_; });
        ++in_flight_;
    }
    calls_.fetch_add(1, std::memory_order_relaxed);

    struct Slot {
        Backend* b;
        ~Slot() {
            {
                std::lock_guard<std::mutex> lock(b->mu_);
                --b->in_flight_;
            }
            b->cv_.notify_one();
        }
    } slot{this};

    GenerationResult result = do_generate(request);
    result.text = trim_ws(result.text);
    result.backend_id = id_;
    if (result.text.empty())
        throw ResponseEmpty("backend \"" + id_ + "\" returned an empty generation");
    return result;
}

ChatRequest translation_request(const std::string& text, const LangCode& src,
                                const LangCode& tgt) {
    ChatRequest req;
    req.system_message = "You are a translation model. Respond only with the translation.";
    req.user_message = "Translate the following text from " + lang_name(src) + " to " +
                       lang_name(tgt) + ":\n" + text;
    return req;
}

std::string translate(Backend& backend, const std::string& text, const LangCode& src,
                      const LangCode& tgt) {
    if (src == tgt)
        throw InvalidRequest("translation requires distinct languages, got " +
                             src.str() + " twice");
    return backend.generate(translation_request(text, src, tgt)).text;
}

}  // namespace xpandir
