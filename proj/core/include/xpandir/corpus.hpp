#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "xpandir/analyzer.hpp"
#include "xpandir/lang.hpp"

namespace xpandir {

struct Document {
    std::string id;
    LangCode lang;
    std::string title;  // empty means absent
    std::string body;
};

/// Text a document is scored on: title and body, newline-joined when a title
/// is present.
std::string scored_text(const Document& doc);

struct Query {
    std::string id;
    LangCode lang;
    std::string text;
};

enum class Format { Jsonl, Tsv };

struct CollectionStats {
    std::size_t doc_count = 0;
    std::size_t total_tokens = 0;
    double avg_doc_length = 0.0;
};

/// Immutable set of same-language documents plus token statistics.
class Collection {
  public:
    Collection(std::vector<Document> docs, LangCode doc_lang, AnalyzerOptions analyzer);

    const std::vector<Document>& documents() const { return docs_; }
    const LangCode& doc_lang() const { return lang_; }
    const CollectionStats& stats() const { return stats_; }
    const AnalyzerOptions& analyzer() const { return analyzer_; }

    const Document* find(std::string_view doc_id) const;
    const Document& at(std::string_view doc_id) const;  // throws UnknownDocument

  private:
    std::vector<Document> docs_;
    LangCode lang_;
    AnalyzerOptions analyzer_;
    std::unordered_map<std::string, std::size_t> by_id_;
    CollectionStats stats_;
};

enum class QrelScheme { Graded, SinglePositive };

/// Relevance judgments: query -> doc -> grade in [0,6]. Iteration order is
/// (query_id, doc_id) ascending, which is also the canonical file order.
class QrelSet {
  public:
    using GradeMap = std::map<std::string, int>;

    QrelSet(std::map<std::string, GradeMap> entries, QrelScheme scheme);

    const std::map<std::string, GradeMap>& entries() const { return entries_; }
    QrelScheme scheme() const { return scheme_; }

    /// Judged docs for one query; nullptr when the query has no judgments.
    const GradeMap* judged(std::string_view query_id) const;
    std::optional<int> grade(std::string_view query_id, std::string_view doc_id) const;

  private:
    std::map<std::string, GradeMap> entries_;
    QrelScheme scheme_;
};

/// Docs judged at or above threshold (threshold must be in [1,6]).
std::set<std::string> relevant_docs(const QrelSet& qrels, std::string_view query_id,
                                    int threshold);

Collection load_documents(const std::string& path, const LangCode& lang, Format format,
                          const AnalyzerOptions& analyzer = {});
std::vector<Query> load_queries(const std::string& path, const LangCode& lang,
                                Format format);
QrelSet load_qrels(const std::string& path, QrelScheme scheme);

// Canonical emitters; load followed by emit reproduces a canonical-form file
// byte for byte.
std::string emit_documents_jsonl(const std::vector<Document>& docs);
std::string emit_documents_tsv(const std::vector<Document>& docs);
std::string emit_queries_tsv(const std::vector<Query>& queries);
std::string emit_queries_jsonl(const std::vector<Query>& queries);
std::string emit_qrels(const QrelSet& qrels);

}  // namespace xpandir
