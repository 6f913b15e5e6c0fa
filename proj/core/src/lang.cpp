#include "xpandir/lang.hpp"

#include <map>
#include <mutex>

#include "xpandir/error.hpp"

namespace xpandir {

namespace {

std::mutex& registry_mutex() {
    static std::mutex m;
    return m;
}

std::map<std::string, std::string, std::less<>>& registry() {
    static std::map<std::string, std::string, std::less<>> names = {
        {"ar", "Arabic"},     {"de", "German"},     {"en", "English"},
        {"es", "Spanish"},    {"fr", "French"},     {"hi", "Hindi"},
        {"id", "Indonesian"}, {"it", "Italian"},    {"ja", "Japanese"},
        {"nl", "Dutch"},      {"pt", "Portuguese"}, {"ru", "Russian"},
        {"vi", "Vietnamese"}, {"zh", "Chinese"},
    };
    return names;
}

bool well_formed(std::string_view s) {
    return s.size() == 2 && s[0] >= 'a' && s[0] <= 'z' && s[1] >= 'a' && s[1] <= 'z';
}

}  // namespace

LangCode LangCode::parse(std::string_view s) {
    if (!well_formed(s)) throw UnknownLanguage(std::string(s));
    std::lock_guard lock(registry_mutex());
    if (registry().find(s) == registry().end()) throw UnknownLanguage(std::string(s));
    return LangCode{std::string(s)};
}

const std::string& lang_name(const LangCode& lang) {
    std::lock_guard lock(registry_mutex());
    auto it = registry().find(lang.code);
    if (it == registry().end()) throw UnknownLanguage(lang.code);
    return it->second;
}

void register_lang(std::string_view code, std::string_view name) {
    if (!well_formed(code))
        throw ConfigError("language code must be two lowercase letters, got \"" +
                          std::string(code) + "\"");
    if (name.empty()) throw ConfigError("language name must be non-empty");
    std::lock_guard lock(registry_mutex());
    auto [it, inserted] = registry().emplace(std::string(code), std::string(name));
    if (!inserted && it->second != name)
        throw ConfigError("language \"" + std::string(code) +
                          "\" already registered as \"" + it->second + "\"");
}

bool lang_registered(std::string_view code) {
    if (!well_formed(code)) return false;
    std::lock_guard lock(registry_mutex());
    return registry().find(code) != registry().end();
}

std::vector<LangCode> registered_langs() {
    std::lock_guard lock(registry_mutex());
    std::vector<LangCode> out;
    out.reserve(registry().size());
    for (const auto& [code, name] : registry()) out.push_back(LangCode{code});
    return out;
}

}  // namespace xpandir
