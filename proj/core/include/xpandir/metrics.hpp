#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "xpandir/corpus.hpp"
#include "xpandir/ranked_list.hpp"

namespace xpandir {

enum class MetricKind { Hit, Recall, Mrr, Ndcg };

struct MetricSpec {
    MetricKind kind = MetricKind::Recall;
    std::size_t k = 0;  // unused for MRR, which runs over the retrieved depth
    int threshold = 1;  // binarization grade for Hit/Recall/MRR

    /// Parses the compact grammar: "hit@5", "recall@50", "ndcg@10", "mrr".
    /// MRR takes no cutoff; the others require one.
    static MetricSpec parse(std::string_view text, int threshold = 1);
    std::string name() const;  // canonical form of the same grammar
};

struct MetricReport {
    MetricSpec spec;
    std::map<std::string, double> per_query;
    double mean = 0.0;
    std::size_t n_queries = 0;   // queries contributing to the mean
    std::size_t n_excluded = 0;  // queries without a positive judgment
};

/// 1 if any of the top-k docs is relevant, else 0.
double hit_at_k(const RankedList& ranked, const std::set<std::string>& relevant,
                std::size_t k);

/// |top-k ∩ relevant| / |relevant|. Throws NoRelevantDocs when relevant is
/// empty (the ratio is undefined).
double recall_at_k(const RankedList& ranked, const std::set<std::string>& relevant,
                   std::size_t k);

/// Reciprocal rank of the first relevant doc within the retrieved list,
/// 0 when none was retrieved.
double mrr(const RankedList& ranked, const std::set<std::string>& relevant);

/// DCG@k / IDCG@k with gain 2^g - 1 and discount 1/log2(rank+1); the ideal
/// ranking sorts all judged grades descending. Unjudged docs count as grade
/// 0. Throws NoRelevantDocs when no judged grade is positive.
double ndcg_at_k(const RankedList& ranked, const std::map<std::string, int>& graded,
                 std::size_t k);

/// One report per spec, macro-averaged over queries. A query is excluded
/// from a report (and counted in n_excluded) when it has no judgment at or
/// above the spec's threshold (grade >= 1 for nDCG).
std::vector<MetricReport> evaluate_run(const std::vector<RankedList>& run,
                                       const QrelSet& qrels,
                                       const std::vector<MetricSpec>& specs);

/// CSV `metric,k,mean,n_queries`; the k cell is empty for MRR.
std::string emit_metrics_csv(const std::vector<MetricReport>& reports);
/// Inverse of emit_metrics_csv (means and counts only; per-query values are
/// not part of this file).
std::vector<MetricReport> load_metrics_csv(const std::string& path);
/// CSV `metric,k,query_id,value`, queries ascending within each report.
std::string emit_per_query_csv(const std::vector<MetricReport>& reports);

}  // namespace xpandir
