#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "xpandir/corpus.hpp"
#include "xpandir/expand.hpp"
#include "xpandir/index.hpp"
#include "xpandir/metrics.hpp"

namespace xpandir {

struct QuerySetEntry {
    LangCode lang;
    std::string path;
    Format format = Format::Tsv;
};

struct CollectionEntry {
    LangCode lang;
    std::string path;
    Format format = Format::Jsonl;
    std::string stopwords_path;  // optional newline-separated stopword list
};

struct QrelsEntry {
    LangCode query_lang;
    LangCode doc_lang;
    std::string path;
    QrelScheme scheme = QrelScheme::Graded;
};

struct BackendEntry {
    std::string kind = "mock";  // mock | http
    std::string id;             // optional override
    std::string script_path;    // mock
    std::string base_url;       // http
    std::string model;          // http
    int max_in_flight = 4;
    int max_attempts = 4;
    int base_delay_ms = 250;
    int max_delay_ms = 4000;
    int timeout_s = 60;
};

/// Everything a matrix run needs, loaded from a TOML file. Relative paths in
/// the file resolve against the file's own directory.
struct ExperimentConfig {
    std::vector<QuerySetEntry> query_sets;
    std::vector<CollectionEntry> collections;
    std::vector<QrelsEntry> qrels;
    std::vector<ExpansionPlan> plans;
    std::vector<MetricSpec> metric_specs;
    std::size_t k_retrieve = 100;
    Bm25Params bm25;
    std::string output_dir;
    std::uint64_t rng_seed = 0;
    int relevance_threshold = 1;
    BackendEntry backend;
    bool stem_english = false;
    /// Codes in the European-Latin quadrant class; every other observed
    /// language falls in the "other" class.
    std::set<std::string> european_latin = {"en", "es", "fr", "de", "it", "nl", "pt"};
    std::string run_tag = "xpandir";

    static ExperimentConfig load(const std::string& path);

    const QrelsEntry* find_qrels(const LangCode& query_lang, const LangCode& doc_lang) const;
};

}  // namespace xpandir
