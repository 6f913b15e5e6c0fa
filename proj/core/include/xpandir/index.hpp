#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "xpandir/analyzer.hpp"
#include "xpandir/corpus.hpp"
#include "xpandir/ranked_list.hpp"

namespace xpandir {

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

/// Inverted index over one collection. Immutable once built; any number of
/// threads may score and retrieve concurrently.
class InvertedIndex {
  public:
    struct Posting {
        std::uint32_t doc = 0;  // ordinal into doc_ids()
        std::uint32_t tf = 0;
        bool operator==(const Posting&) const = default;
    };

    static InvertedIndex build(const Collection& collection);

    const LangCode& doc_lang() const { return lang_; }
    const AnalyzerOptions& analyzer() const { return analyzer_; }
    std::size_t doc_count() const { return doc_ids_.size(); }
    std::size_t total_tokens() const { return total_tokens_; }
    double avgdl() const { return avgdl_; }

    /// Doc ids in ascending order; positions are the posting ordinals.
    const std::vector<std::string>& doc_ids() const { return doc_ids_; }
    std::size_t doc_length(std::string_view doc_id) const;
    std::size_t df(const std::string& term) const;
    const std::map<std::string, std::vector<Posting>>& postings() const {
        return postings_;
    }

    /// Sum over query token occurrences of
    ///   idf(t) * tf*(k1+1) / (tf + k1*(1-b+b*dl/avgdl)),
    /// idf(t) = ln(1 + (N-df+0.5)/(df+0.5)). Duplicate query tokens count
    /// once per occurrence; terms absent from the index contribute 0.
    double bm25_score(const Bm25Params& params,
                      const std::vector<std::string>& query_tokens,
                      std::string_view doc_id) const;

    /// Top k_retrieve docs by bm25_score over analyze(query_text, query_lang),
    /// ties broken by ascending doc_id, zero-score docs dropped. The returned
    /// list's query_id is taken from the argument.
    RankedList retrieve(const Bm25Params& params, std::string_view query_text,
                        const LangCode& query_lang, std::size_t k_retrieve,
                        std::string query_id = {}) const;

    /// JSONL artifact with a version header; load(save(x)) == x.
    void save(const std::string& path) const;
    static InvertedIndex load(const std::string& path);

  private:
    InvertedIndex() = default;

    std::uint32_t ord_of(std::string_view doc_id) const;  // throws UnknownDocument
    double idf(std::size_t df) const;
    double term_weight(const Bm25Params& params, double idf_t, std::uint32_t tf,
                       std::size_t dl) const;

    LangCode lang_;
    AnalyzerOptions analyzer_;
    std::vector<std::string> doc_ids_;       // ascending
    std::vector<std::uint32_t> doc_lengths_;  // by ordinal
    std::size_t total_tokens_ = 0;
    double avgdl_ = 0.0;
    std::map<std::string, std::vector<Posting>> postings_;  // lists sorted by ordinal
    std::unordered_map<std::string, std::uint32_t> ord_by_id_;
};

}  // namespace xpandir
