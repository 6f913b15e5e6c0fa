#include "xpandir/analyzer.hpp"

#include <unicode/uchar.h>
#include <unicode/unorm2.h>
#include <unicode/uscript.h>
#include <unicode/ustring.h>
#include <unicode/utf16.h>
#include <unicode/utf8.h>

#include <algorithm>
#include <cstdint>
#include <fstream>

#include "xpandir/error.hpp"

namespace xpandir {

namespace {

void check_icu(UErrorCode ec, const char* what) {
    if (U_FAILURE(ec))
        throw IoError(std::string("ICU ") + what + " failed: " + u_errorName(ec));
}

std::u16string to_utf16(std::string_view text) {
    std::u16string out;
    if (text.empty()) return out;
    UErrorCode ec = U_ZERO_ERROR;
    int32_t needed = 0;
    // Invalid byte sequences become U+FFFD, which segments as a separator.
    u_strFromUTF8WithSub(nullptr, 0, &needed, text.data(),
                         static_cast<int32_t>(text.size()), 0xFFFD, nullptr, &ec);
    if (ec != U_BUFFER_OVERFLOW_ERROR && U_FAILURE(ec)) check_icu(ec, "utf8 precheck");
    out.resize(static_cast<std::size_t>(needed));
    ec = U_ZERO_ERROR;
    u_strFromUTF8WithSub(out.data(), needed, nullptr, text.data(),
                         static_cast<int32_t>(text.size()), 0xFFFD, nullptr, &ec);
    check_icu(ec, "utf8 decode");
    return out;
}

std::u16string nfkc(const std::u16string& in) {
    UErrorCode ec = U_ZERO_ERROR;
    const UNormalizer2* norm = unorm2_getNFKCInstance(&ec);
    check_icu(ec, "NFKC instance");
    std::u16string out;
    int32_t needed = unorm2_normalize(norm, in.data(), static_cast<int32_t>(in.size()),
                                      nullptr, 0, &ec);
    if (ec != U_BUFFER_OVERFLOW_ERROR && U_FAILURE(ec)) check_icu(ec, "NFKC precheck");
    out.resize(static_cast<std::size_t>(needed));
    ec = U_ZERO_ERROR;
    unorm2_normalize(norm, in.data(), static_cast<int32_t>(in.size()), out.data(),
                     needed, &ec);
    check_icu(ec, "NFKC");
    return out;
}

std::u16string case_fold(const std::u16string& in) {
    std::u16string out;
    UErrorCode ec = U_ZERO_ERROR;
    int32_t needed = u_strFoldCase(nullptr, 0, in.data(), static_cast<int32_t>(in.size()),
                                   U_FOLD_CASE_DEFAULT, &ec);
    if (ec != U_BUFFER_OVERFLOW_ERROR && U_FAILURE(ec)) check_icu(ec, "fold precheck");
    out.resize(static_cast<std::size_t>(needed));
    ec = U_ZERO_ERROR;
    u_strFoldCase(out.data(), needed, in.data(), static_cast<int32_t>(in.size()),
                  U_FOLD_CASE_DEFAULT, &ec);
    check_icu(ec, "fold");
    return out;
}

enum class CharClass { Separator, Word, Cjk };

CharClass classify(UChar32 c) {
    UErrorCode ec = U_ZERO_ERROR;
    UScriptCode script = uscript_getScript(c, &ec);
    if (U_SUCCESS(ec) &&
        (script == USCRIPT_HAN || script == USCRIPT_HIRAGANA || script == USCRIPT_KATAKANA))
        return CharClass::Cjk;
    // Prolonged sound mark and ideographic iteration mark extend CJK runs
    // although their script property is Common.
    if (c == 0x30FC || c == 0x3005) return CharClass::Cjk;
    if (u_hasBinaryProperty(c, UCHAR_ALPHABETIC)) return CharClass::Word;
    int8_t cat = u_charType(c);
    if (cat == U_DECIMAL_DIGIT_NUMBER || cat == U_NON_SPACING_MARK ||
        cat == U_COMBINING_SPACING_MARK || cat == U_ENCLOSING_MARK)
        return CharClass::Word;
    return CharClass::Separator;
}

void append_utf8(std::string& out, UChar32 c) {
    if (c < 0x80) {
        out.push_back(static_cast<char>(c));
    } else if (c < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (c >> 6)));
        out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else if (c < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (c >> 12)));
        out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (c >> 18)));
        out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    }
}

std::string utf8_of(UChar32 c) {
    std::string s;
    append_utf8(s, c);
    return s;
}

std::vector<std::string> segment(const std::u16string& text) {
    std::vector<std::string> tokens;
    std::string word;
    std::vector<UChar32> cjk_run;

    auto flush_word = [&] {
        if (!word.empty()) {
            tokens.push_back(word);
            word.clear();
        }
    };
    auto flush_cjk = [&] {
        if (cjk_run.size() == 1) {
            tokens.push_back(utf8_of(cjk_run[0]));
        } else if (cjk_run.size() >= 2) {
            for (std::size_t i = 0; i + 1 < cjk_run.size(); ++i) {
                std::string bigram = utf8_of(cjk_run[i]);
                append_utf8(bigram, cjk_run[i + 1]);
                tokens.push_back(std::move(bigram));
            }
        }
        cjk_run.clear();
    };

    int32_t i = 0;
    const int32_t n = static_cast<int32_t>(text.size());
    while (i < n) {
        UChar32 c;
        U16_NEXT(text.data(), i, n, c);
        switch (classify(c)) {
            case CharClass::Word:
                flush_cjk();
                append_utf8(word, c);
                break;
            case CharClass::Cjk:
                flush_word();
                cjk_run.push_back(c);
                break;
            case CharClass::Separator:
                flush_word();
                flush_cjk();
                break;
        }
    }
    flush_word();
    flush_cjk();
    return tokens;
}

}  // namespace

TokenStream analyze(std::string_view text, const LangCode& lang,
                    const AnalyzerOptions& opts) {
    TokenStream stream;
    stream.source_lang = lang;
    if (text.empty()) return stream;

    stream.tokens = segment(case_fold(nfkc(to_utf16(text))));

    if (!opts.stopwords.empty()) {
        std::erase_if(stream.tokens, [&](const std::string& t) {
            return opts.stopwords.count(t) > 0;
        });
    }
    if (opts.stem_english && lang.code == "en") {
        for (auto& t : stream.tokens) t = porter_stem(t);
    }
    return stream;
}

std::string normalize_stopword(std::string_view entry, const LangCode& lang) {
    TokenStream ts = analyze(entry, lang);
    if (ts.tokens.empty()) return {};
    return ts.tokens.front();
}

std::unordered_set<std::string> load_stopwords(const std::string& path,
                                               const LangCode& lang) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::unordered_set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        std::string normalized = normalize_stopword(line, lang);
        if (!normalized.empty()) words.insert(std::move(normalized));
    }
    return words;
}

std::size_t truncation_offset(std::string_view text, const LangCode& lang,
                              std::size_t token_limit) {
    (void)lang;  // the segmentation rules are language-independent
    if (token_limit == 0) return 0;

    // Counts tokens with the same run/bigram rules as analyze(), but over the
    // raw bytes so the returned offset addresses the original text.
    std::size_t count = 0;
    bool in_word = false;
    std::size_t word_end = 0;
    std::size_t cjk_len = 0;
    std::size_t cjk_char_end = 0;

    const char* data = text.data();
    int32_t i = 0;
    const int32_t n = static_cast<int32_t>(text.size());
    while (i < n) {
        UChar32 c;
        U8_NEXT(data, i, n, c);
        if (c < 0) c = 0xFFFD;
        CharClass cls = classify(c);
        if (cls == CharClass::Word) {
            if (cjk_len == 1 && ++count == token_limit) return cjk_char_end;
            cjk_len = 0;
            in_word = true;
            word_end = static_cast<std::size_t>(i);
        } else if (cls == CharClass::Cjk) {
            if (in_word && ++count == token_limit) return word_end;
            in_word = false;
            ++cjk_len;
            cjk_char_end = static_cast<std::size_t>(i);
            if (cjk_len >= 2 && ++count == token_limit) return cjk_char_end;
        } else {
            if (in_word && ++count == token_limit) return word_end;
            in_word = false;
            if (cjk_len == 1 && ++count == token_limit) return cjk_char_end;
            cjk_len = 0;
        }
    }
    return text.size();
}

// Porter stemming algorithm (1980), steps 1a-5b. Operates on ASCII a-z
// tokens; anything else passes through unchanged.
namespace {

bool is_ascii_word(std::string_view w) {
    return std::all_of(w.begin(), w.end(), [](char ch) { return ch >= 'a' && ch <= 'z'; });
}

struct Stemmer {
    std::string w;

    bool cons(std::size_t i) const {
        switch (w[i]) {
            case 'a': case 'e': case 'i': case 'o': case 'u':
                return false;
            case 'y':
                return i == 0 ? true : !cons(i - 1);
            default:
                return true;
        }
    }

    // Measure of w[0..end): number of vowel->consonant transitions.
    int measure(std::size_t end) const {
        int m = 0;
        bool prev_vowel = false;
        for (std::size_t i = 0; i < end; ++i) {
            bool v = !cons(i);
            if (!v && prev_vowel) ++m;
            prev_vowel = v;
        }
        return m;
    }

    bool has_vowel(std::size_t end) const {
        for (std::size_t i = 0; i < end; ++i)
            if (!cons(i)) return true;
        return false;
    }

    bool ends(std::string_view suffix) const {
        return w.size() >= suffix.size() &&
               std::string_view(w).substr(w.size() - suffix.size()) == suffix;
    }

    std::size_t stem_len(std::string_view suffix) const { return w.size() - suffix.size(); }

    bool double_cons() const {
        std::size_t n = w.size();
        return n >= 2 && w[n - 1] == w[n - 2] && cons(n - 1);
    }

    // cvc at the end, where the final consonant is not w, x or y.
    bool cvc_end() const {
        std::size_t n = w.size();
        if (n < 3) return false;
        if (!cons(n - 3) || cons(n - 2) || !cons(n - 1)) return false;
        char last = w[n - 1];
        return last != 'w' && last != 'x' && last != 'y';
    }

    bool replace(std::string_view suffix, std::string_view repl, int min_measure) {
        if (!ends(suffix)) return false;
        std::size_t sl = stem_len(suffix);
        if (measure(sl) <= min_measure) return true;  // matched but condition failed
        w.resize(sl);
        w += repl;
        return true;
    }

    void step1a() {
        if (ends("sses")) w.resize(w.size() - 2);
        else if (ends("ies")) w.resize(w.size() - 2);
        else if (!ends("ss") && ends("s")) w.resize(w.size() - 1);
    }

    void step1b() {
        if (ends("eed")) {
            if (measure(stem_len("eed")) > 0) w.resize(w.size() - 1);
            return;
        }
        bool removed = false;
        if (ends("ed") && has_vowel(stem_len("ed"))) {
            w.resize(stem_len("ed"));
            removed = true;
        } else if (ends("ing") && has_vowel(stem_len("ing"))) {
            w.resize(stem_len("ing"));
            removed = true;
        }
        if (!removed) return;
        if (ends("at") || ends("bl") || ends("iz")) {
            w += 'e';
        } else if (double_cons()) {
            char last = w.back();
            if (last != 'l' && last != 's' && last != 'z') w.resize(w.size() - 1);
        } else if (measure(w.size()) == 1 && cvc_end()) {
            w += 'e';
        }
    }

    void step1c() {
        if (ends("y") && has_vowel(w.size() - 1)) w.back() = 'i';
    }

    void step2() {
        static constexpr std::pair<std::string_view, std::string_view> rules[] = {
            {"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"}, {"anci", "ance"},
            {"izer", "ize"},    {"abli", "able"},   {"alli", "al"},   {"entli", "ent"},
            {"eli", "e"},       {"ousli", "ous"},   {"ization", "ize"}, {"ation", "ate"},
            {"ator", "ate"},    {"alism", "al"},    {"iveness", "ive"}, {"fulness", "ful"},
            {"ousness", "ous"}, {"aliti", "al"},    {"iviti", "ive"},  {"biliti", "ble"},
        };
        for (const auto& [suf, repl] : rules)
            if (replace(suf, repl, 0)) return;
    }

    void step3() {
        static constexpr std::pair<std::string_view, std::string_view> rules[] = {
            {"icate", "ic"}, {"ative", ""}, {"alize", "al"}, {"iciti", "ic"},
            {"ical", "ic"},  {"ful", ""},   {"ness", ""},
        };
        for (const auto& [suf, repl] : rules)
            if (replace(suf, repl, 0)) return;
    }

    void step4() {
        static constexpr std::string_view suffixes[] = {
            "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement",
            "ment", "ent", "ion", "ou", "ism", "ate", "iti", "ous", "ive", "ize",
        };
        for (std::string_view suf : suffixes) {
            if (!ends(suf)) continue;
            std::size_t sl = stem_len(suf);
            if (suf == "ion" && (sl == 0 || (w[sl - 1] != 's' && w[sl - 1] != 't')))
                continue;
            if (measure(sl) > 1) w.resize(sl);
            return;
        }
    }

    void step5a() {
        if (!ends("e")) return;
        std::size_t sl = w.size() - 1;
        int m = measure(sl);
        if (m > 1) {
            w.resize(sl);
        } else if (m == 1) {
            w.resize(sl);
            if (cvc_end()) w += 'e';
        }
    }

    void step5b() {
        if (w.size() >= 2 && w.back() == 'l' && double_cons() && measure(w.size()) > 1)
            w.resize(w.size() - 1);
    }
};

}  // namespace

std::string porter_stem(std::string_view token) {
    if (token.size() <= 2 || !is_ascii_word(token)) return std::string(token);
    Stemmer s{std::string(token)};
    s.step1a();
    s.step1b();
    s.step1c();
    s.step2();
    s.step3();
    s.step4();
    s.step5a();
    s.step5b();
    return s.w;
}

}  // namespace xpandir
