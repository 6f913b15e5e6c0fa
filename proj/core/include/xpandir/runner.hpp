#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "xpandir/config.hpp"
#include "xpandir/expand.hpp"
#include "xpandir/gateway.hpp"
#include "xpandir/index.hpp"
#include "xpandir/metrics.hpp"

namespace xpandir {

struct LangPair {
    LangCode query_lang;
    LangCode doc_lang;

    std::string str() const { return query_lang.str() + "-" + doc_lang.str(); }
    auto operator<=>(const LangPair&) const = default;
};

/// Metric reports for one (pair, cell); cell is a plan fingerprint or
/// kBaselineCell.
struct PairResult {
    LangPair pair;
    std::string cell;
    std::vector<MetricReport> reports;
    std::size_t n_failed = 0;  // queries dropped after gateway failures
};

/// Per-cell aggregates over language pairs. All means are unweighted means
/// of pair means; deltas subtract the baseline aggregate at the same key.
struct AggregateView {
    struct CellAgg {
        // query lang -> doc lang -> pair mean
        std::map<std::string, std::map<std::string, double>> pair_mean;
        std::map<std::string, double> by_query_lang;  // mean over doc langs
        std::map<std::string, double> by_doc_lang;    // mean over query langs
        // quadrant class -> quadrant class -> mean over pairs in the quadrant
        std::map<std::string, std::map<std::string, double>> quadrant;
    };
    // cell -> metric name -> aggregates
    std::map<std::string, std::map<std::string, CellAgg>> values;
    // plan cell -> metric name -> plan minus baseline
    std::map<std::string, std::map<std::string, CellAgg>> deltas;
};

inline constexpr const char* kClassEuropeanLatin = "european-latin";
inline constexpr const char* kClassOther = "other";

/// lang code -> quadrant class for every language seen in `results`.
std::map<std::string, std::string> lang_classes_for(const ExperimentConfig& config,
                                                    const std::vector<PairResult>& results);

/// Throws MissingBaseline when a plan cell's pair has no baseline result and
/// ConfigError when lang_classes misses an observed language.
AggregateView aggregate(const std::vector<PairResult>& results,
                        const std::map<std::string, std::string>& lang_classes);

/// Writes aggregates/<cell>/heatmap.<metric>.csv, matching delta files for
/// plan cells, and one aggregates/summary.csv covering every level.
void write_aggregates(const std::string& output_dir, const AggregateView& view);

/// Rebuilds pair results from the metrics.csv files under
/// output_dir/cells/<pair>/<cell>/ (means only; per-query values stay on disk).
std::vector<PairResult> load_pair_results(const std::string& output_dir);

struct MatrixStats {
    std::size_t n_pairs = 0;
    std::size_t n_cells = 0;  // result cells written: |pairs| * (|plans| + 1)
    std::uint64_t gateway_calls = 0;
    std::vector<PairResult> results;
};

/// Drives the experiment matrix: every (query lang, doc lang) pair that has
/// qrels and distinct languages, times every plan plus the baseline.
/// Expansion results and baseline translations are cached per pair under
/// output_dir/cache/, so a rerun over an intact output tree makes no gateway
/// calls and rewrites byte-identical files.
class Runner {
  public:
    explicit Runner(ExperimentConfig config);
    /// Injected backend (tests, prebuilt scripts); config.backend is ignored.
    Runner(ExperimentConfig config, std::shared_ptr<Backend> backend);

    const ExperimentConfig& config() const { return config_; }
    Backend& backend() { return *backend_; }

    std::vector<LangPair> pairs() const;

    PairResult run_baseline(const LangPair& pair);
    PairResult run_plan(const LangPair& pair, const ExpansionPlan& plan);

    MatrixStats run_matrix(int jobs = 1);

  private:
    friend struct PairSession;

    std::shared_ptr<const InvertedIndex> index_for(const LangCode& doc_lang);
    const QuerySetEntry& query_set_for(const LangCode& lang) const;
    const CollectionEntry& collection_for(const LangCode& lang) const;

    ExperimentConfig config_;
    std::shared_ptr<Backend> backend_;
    std::mutex index_mu_;
    std::map<std::string, std::shared_ptr<const InvertedIndex>> index_cache_;
};

/// Backend described by the config: MockBackend for kind "mock", HttpBackend
/// for kind "http".
std::shared_ptr<Backend> make_backend(const BackendEntry& entry);

}  // namespace xpandir
