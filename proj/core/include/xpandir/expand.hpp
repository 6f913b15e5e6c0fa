#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "xpandir/corpus.hpp"
#include "xpandir/gateway.hpp"
#include "xpandir/lang.hpp"

namespace xpandir {

enum class Strategy { ZeroShot, CoT, RaR, FewShot };
enum class Order { TranslateThenExpand, ExpandThenTranslate };
enum class RetrievalForm { DocOnly, QueryPlusDoc };
enum class CleanMode { Off, StripMeta };

/// Cell name for the original-query (translation-only) condition; also the
/// cache fingerprint of its records.
inline constexpr const char* kBaselineCell = "baseline";

// Compact tokens used in configs, flags, and fingerprints:
// strategies zero-shot|cot|rar|few-shot, orders t+e|e+t,
// forms doc-only|query-plus-doc, clean modes off|strip-meta.
Strategy parse_strategy(std::string_view token);
Order parse_order(std::string_view token);
RetrievalForm parse_retrieval_form(std::string_view token);
CleanMode parse_clean_mode(std::string_view token);
std::string_view strategy_token(Strategy s);
std::string_view order_token(Order o);
std::string_view retrieval_form_token(RetrievalForm f);
std::string_view clean_mode_token(CleanMode m);

struct FewshotExample {
    std::string query;
    std::string passage;
};

/// Query/passage pairs sampled into few-shot prompts, from JSONL records
/// {"query": ..., "passage": ...}.
struct FewshotPool {
    std::vector<FewshotExample> pairs;
    static FewshotPool load(const std::string& path);
};

struct ExpansionPlan {
    Strategy strategy = Strategy::ZeroShot;
    Order order = Order::TranslateThenExpand;
    RetrievalForm retrieval_form = RetrievalForm::DocOnly;
    std::string backend_id;
    int query_repetitions = 1;
    std::shared_ptr<const FewshotPool> fewshot_pool;  // required iff FewShot
    int fewshot_count = 5;
    std::uint64_t rng_seed = 0;
    CleanMode clean = CleanMode::Off;

    void validate() const;

    /// Cache/cell key covering every output-affecting field, e.g.
    /// "zero-shot.t+e.doc-only.r1.s0" or "few-shot.e+t.query-plus-doc.r2.s7.f5".
    std::string fingerprint() const;
    /// Inverse of fingerprint(); the pool reference is left unset.
    static ExpansionPlan parse_fingerprint(const std::string& fp);
};

struct TraceStep {
    std::string step;  // "translate", "expand", "translate_query"
    std::string backend_id;
    std::int64_t latency_ms = 0;
};

struct ExpandedQuery {
    std::string query_id;
    LangCode source_lang;
    LangCode target_lang;
    std::string original_text;
    std::optional<std::string> translated_text;  // target-language query, when made
    std::string pseudo_document;                 // target-language pseudo-document
    std::string final_text;                      // what retrieval actually sees
    ExpansionPlan plan;
    std::vector<TraceStep> trace;  // one entry per generation call, in order
};

/// Prompt pair for one strategy; examples must be given exactly for FewShot.
/// Few-shot passages are cut to 512 analyzer tokens before insertion.
ChatRequest build_prompt(Strategy strategy, const std::string& query_text,
                         const std::optional<std::vector<FewshotExample>>& fewshot_examples =
                             std::nullopt);

/// Deterministic seeded sample of `count` distinct pairs; pairs whose query
/// equals exclude_query are skipped. Throws PoolTooSmall when fewer than
/// `count` usable pairs exist.
std::vector<FewshotExample> sample_fewshot(const FewshotPool& pool, std::size_t count,
                                           std::uint64_t rng_seed,
                                           const std::string& exclude_query = {});

/// Runs one plan cell for one query:
///   T+E: translate the query, then expand the translation;
///   E+T: expand in the source language, then translate the pseudo-document
///        (QueryPlusDoc adds a translate_query call for the query text).
/// final_text is the pseudo-document alone (DocOnly) or the target-language
/// query repeated query_repetitions times, newline-joined, a newline, then
/// the pseudo-document (QueryPlusDoc). clean applies to the raw expansion
/// generation, before any translation.
ExpandedQuery expand_query(Backend& backend, const ExpansionPlan& plan, const Query& query,
                           const LangCode& target_lang);

/// StripMeta removes one leading meta sentence when the text starts with one
/// of the fixed prefixes below and a ". " boundary follows; otherwise the
/// text passes through. Prefixes:
///   "To answer this query,"   "To answer this question,"
///   "Here is a passage"       "Here's a passage"
///   "Sure, here is"           "Sure, here's"
std::string clean_generation(const std::string& text, CleanMode mode);

/// Persistent JSONL store of ExpandedQuery records keyed by
/// (query_id, plan fingerprint, backend_id). save() writes records sorted by
/// that key, so reruns produce byte-identical files.
class ExpansionCache {
  public:
    ExpansionCache() = default;
    /// Loads path when it exists; otherwise starts empty.
    explicit ExpansionCache(std::string path);

    const ExpandedQuery* find(const std::string& query_id, const std::string& fingerprint,
                              const std::string& backend_id) const;
    void put(const ExpandedQuery& record, const std::string& backend_id);
    /// Explicit fingerprint, for records that carry no real plan (baseline
    /// translations are stored under kBaselineCell).
    void put(const ExpandedQuery& record, const std::string& fingerprint,
             const std::string& backend_id);
    void save() const;  // to the constructor path
    void save_as(const std::string& path) const;
    std::size_t size() const { return records_.size(); }

  private:
    struct Key {
        std::string fingerprint;
        std::string backend_id;
        std::string query_id;
        bool operator<(const Key& o) const;
    };
    std::string path_;
    std::map<Key, ExpandedQuery> records_;
};

}  // namespace xpandir
