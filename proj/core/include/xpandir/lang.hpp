#pragma once

#include <compare>
#include <string>
#include <string_view>
#include <vector>

namespace xpandir {

/// Two-letter lowercase ISO 639-1 tag. Construction through parse() checks
/// the registry; the default registry holds the fourteen codes the toolkit
/// ships with (ar de en es fr hi id it ja nl pt ru vi zh) and can be
/// extended from config via register_lang().
struct LangCode {
    std::string code;

    static LangCode parse(std::string_view s);

    const std::string& str() const noexcept { return code; }
    auto operator<=>(const LangCode&) const = default;
};

/// English display name ("fr" -> "French"); used by translation prompts.
const std::string& lang_name(const LangCode& lang);

/// Register an additional code (idempotent for identical name, errors on a
/// conflicting re-registration).
void register_lang(std::string_view code, std::string_view name);

bool lang_registered(std::string_view code);

/// All currently registered codes, sorted.
std::vector<LangCode> registered_langs();

}  // namespace xpandir
