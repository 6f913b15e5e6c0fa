#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "xpandir/lang.hpp"

namespace xpandir {

struct TokenStream {
    std::vector<std::string> tokens;
    LangCode source_lang;
};

/// Optional analysis-chain extensions. Both default to off so that retrieval
/// deltas stay attributable to query expansion rather than term conflation.
struct AnalyzerOptions {
    /// Tokens removed after normalization. Entries are matched against
    /// normalized token text; normalize_stopword() maps raw entries into
    /// that space.
    std::unordered_set<std::string> stopwords;
    /// Porter stemming, applied to English token streams only.
    bool stem_english = false;

    bool is_default() const { return stopwords.empty() && !stem_english; }
};

/// Deterministic multilingual tokenization: NFKC normalization, full case
/// folding, then segmentation. Space-delimited scripts yield maximal runs of
/// letters/digits/combining marks; Han, Hiragana and Katakana runs yield
/// overlapping character bigrams (a one-character run yields that character).
/// Punctuation-only content produces no tokens; empty input yields an empty
/// stream. Pure function of (text, lang, opts).
TokenStream analyze(std::string_view text, const LangCode& lang,
                    const AnalyzerOptions& opts = {});

/// Byte offset just past the token_limit-th token of `text`, or text.size()
/// when the text holds fewer tokens. Used to cut long passages on a token
/// boundary before prompt insertion.
std::size_t truncation_offset(std::string_view text, const LangCode& lang,
                              std::size_t token_limit);

/// Run a raw stopword entry through the same normalization as analyze();
/// returns the normalized form, or an empty string if the entry normalizes
/// to nothing (e.g. pure punctuation).
std::string normalize_stopword(std::string_view entry, const LangCode& lang);

/// Load a newline-separated stopword file, normalizing every entry; entries
/// that normalize to nothing are dropped.
std::unordered_set<std::string> load_stopwords(const std::string& path,
                                               const LangCode& lang);

/// Porter stemmer (English). Exposed for tests; analyze() applies it when
/// AnalyzerOptions::stem_english is set and the stream language is "en".
std::string porter_stem(std::string_view token);

}  // namespace xpandir
