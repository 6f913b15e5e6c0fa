// Command line front end. Every subcommand is a thin adapter over the
// library; stdout carries machine-readable output only, logs go to stderr.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>
#include "xpandir/config.hpp"
#include "xpandir/corpus.hpp"
#include "xpandir/error.hpp"
#include "xpandir/expand.hpp"
#include "xpandir/gateway.hpp"
#include "xpandir/index.hpp"
#include "xpandir/metrics.hpp"
#include "xpandir/runner.hpp"
#include "xpandir/trec_run.hpp"

namespace {

using nlohmann::ordered_json;
using namespace xpandir;

Format parse_format(const std::string& token) {
    if (token == "jsonl") return Format::Jsonl;
    if (token == "tsv") return Format::Tsv;
    throw ConfigError("unknown format \"" + token + "\" (expected jsonl or tsv)");
}

QrelScheme parse_scheme(const std::string& token) {
    if (token == "graded") return QrelScheme::Graded;
    if (token == "single-positive") return QrelScheme::SinglePositive;
    throw ConfigError("unknown qrels scheme \"" + token +
                      "\" (expected graded or single-positive)");
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << content;
}

int cmd_index(const std::string& docs_path, const std::string& lang_str,
              const std::string& format, const std::string& stopwords_path,
              bool stem_english, const std::string& out_path) {
    LangCode lang = LangCode::parse(lang_str);
    AnalyzerOptions opts;
    opts.stem_english = stem_english;
    if (!stopwords_path.empty()) opts.stopwords = load_stopwords(stopwords_path, lang);

    Collection coll = load_documents(docs_path, lang, parse_format(format), opts);
    InvertedIndex index = InvertedIndex::build(coll);
    index.save(out_path);

    ordered_json summary;
    summary["doc_count"] = index.doc_count();
    summary["total_tokens"] = index.total_tokens();
    summary["avg_doc_length"] = index.avgdl();
    std::cout << summary.dump() << "\n";
    return 0;
}

int cmd_retrieve(const std::string& index_path, const std::string& queries_path,
                 const std::string& format, const std::string& lang_str, double k1,
                 double b, std::size_t k_retrieve, const std::string& run_tag,
                 const std::string& out_path) {
    InvertedIndex index = InvertedIndex::load(index_path);
    LangCode lang = lang_str.empty() ? index.doc_lang() : LangCode::parse(lang_str);
    std::vector<Query> queries = load_queries(queries_path, lang, parse_format(format));

    Bm25Params params{k1, b};
    std::vector<RankedList> lists;
    lists.reserve(queries.size());
    for (const Query& q : queries)
        lists.push_back(index.retrieve(params, q.text, lang, k_retrieve, q.id));

    if (out_path.empty()) std::cout << emit_run(lists, run_tag);
    else write_run(out_path, lists, run_tag);
    return 0;
}

int cmd_eval(const std::string& run_path, const std::string& qrels_path,
             const std::string& scheme, const std::vector<std::string>& metric_args,
             int threshold, const std::string& per_query_path) {
    RunFile run = load_run(run_path);
    QrelSet qrels = load_qrels(qrels_path, parse_scheme(scheme));
    std::vector<MetricSpec> specs;
    specs.reserve(metric_args.size());
    for (const std::string& m : metric_args) specs.push_back(MetricSpec::parse(m, threshold));

    std::vector<MetricReport> reports = evaluate_run(run.lists, qrels, specs);
    std::cout << emit_metrics_csv(reports);
    if (!per_query_path.empty()) write_file(per_query_path, emit_per_query_csv(reports));
    return 0;
}

int cmd_expand(const std::string& config_path, const std::string& mock_script,
               const std::string& queries_path, const std::string& format,
               const std::string& lang_str, const std::string& target_lang_str,
               const std::string& strategy, const std::string& order,
               const std::string& retrieval_form, std::uint64_t seed, int reps,
               const std::string& pool_path, int fewshot_count, const std::string& clean,
               const std::string& out_path) {
    std::shared_ptr<Backend> backend;
    if (!config_path.empty())
        backend = make_backend(ExperimentConfig::load(config_path).backend);
    else
        backend = std::make_shared<MockBackend>(MockScript::load(mock_script));

    LangCode lang = LangCode::parse(lang_str);
    LangCode target = LangCode::parse(target_lang_str);

    ExpansionPlan plan;
    plan.strategy = parse_strategy(strategy);
    plan.order = parse_order(order);
    plan.retrieval_form = parse_retrieval_form(retrieval_form);
    plan.backend_id = backend->id();
    plan.query_repetitions = reps;
    plan.rng_seed = seed;
    plan.fewshot_count = fewshot_count;
    plan.clean = parse_clean_mode(clean);
    if (!pool_path.empty())
        plan.fewshot_pool = std::make_shared<const FewshotPool>(FewshotPool::load(pool_path));
    plan.validate();

    std::vector<Query> queries = load_queries(queries_path, lang, parse_format(format));
    ExpansionCache cache(out_path);
    const std::string fp = plan.fingerprint();

    std::size_t expanded = 0, cached = 0, failed = 0;
    for (const Query& q : queries) {
        if (cache.find(q.id, fp, backend->id())) {
            ++cached;
            continue;
        }
        try {
            cache.put(expand_query(*backend, plan, q, target), backend->id());
            ++expanded;
        } catch (const Error& e) {
            if (e.kind() != "BackendUnavailable" && e.kind() != "ResponseEmpty" &&
                e.kind() != "InvalidRequest")
                throw;
            ++failed;
            std::cerr << "[xpandir] expansion failed for query " << q.id << ": "
                      << e.what() << "\n";
        }
    }
    cache.save();

    ordered_json summary;
    summary["plan"] = fp;
    summary["expanded"] = expanded;
    summary["cached"] = cached;
    summary["failed"] = failed;
    summary["gateway_calls"] = backend->calls();
    std::cout << summary.dump() << "\n";
    return 0;
}

int cmd_run_matrix(const std::string& config_path, int jobs, bool dry_run) {
    ExperimentConfig config = ExperimentConfig::load(config_path);
    Runner runner(std::move(config));

    std::vector<std::string> cells;
    cells.push_back(kBaselineCell);
    for (const ExpansionPlan& plan : runner.config().plans)
        cells.push_back(plan.fingerprint());

    if (dry_run) {
        for (const LangPair& pair : runner.pairs())
            for (const std::string& cell : cells)
                std::cout << pair.str() << "\t" << cell << "\n";
        return 0;
    }

    MatrixStats stats = runner.run_matrix(jobs);
    ordered_json summary;
    summary["pairs"] = stats.n_pairs;
    summary["cells"] = stats.n_cells;
    summary["gateway_calls"] = stats.gateway_calls;
    summary["output_dir"] = runner.config().output_dir;
    std::cout << summary.dump() << "\n";
    return 0;
}

int cmd_report(const std::string& config_path) {
    ExperimentConfig config = ExperimentConfig::load(config_path);
    std::vector<PairResult> results = load_pair_results(config.output_dir);
    AggregateView view = aggregate(results, lang_classes_for(config, results));
    write_aggregates(config.output_dir, view);

    std::ifstream in(config.output_dir + "/aggregates/summary.csv", std::ios::binary);
    if (!in) throw IoError("summary.csv was not written");
    std::cout << in.rdbuf();
    return 0;
}

MockServer* g_server = nullptr;

void handle_signal(int) {
    if (g_server) g_server->stop();
}

int cmd_mock_serve(const std::string& script_path, const std::string& host, int port) {
    MockServer server(MockScript::load(script_path));
    g_server = &server;
    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);

    bool ephemeral = port == 0;
    if (ephemeral) port = server.bind_any(host);
    ordered_json announce;
    announce["host"] = host;
    announce["port"] = port;
    std::cout << announce.dump() << std::endl;

    bool ok = ephemeral ? server.listen_bound() : server.listen(host, port);
    g_server = nullptr;
    if (!ok) throw IoError("mock server failed to listen on " + host + ":" +
                           std::to_string(port));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cross-lingual retrieval experiments: expansion, BM25, evaluation"};
    app.require_subcommand(1);
    std::function<int()> action;

    // index
    {
        auto* sub = app.add_subcommand("index", "Build and save an inverted index");
        auto docs = std::make_shared<std::string>();
        auto lang = std::make_shared<std::string>();
        auto format = std::make_shared<std::string>("jsonl");
        auto stopwords = std::make_shared<std::string>();
        auto stem = std::make_shared<bool>(false);
        auto out = std::make_shared<std::string>();
        sub->add_option("--docs", *docs, "Document collection file")->required();
        sub->add_option("--lang", *lang, "Collection language code")->required();
        sub->add_option("--format", *format, "Collection format: jsonl or tsv");
        sub->add_option("--stopwords", *stopwords, "Stopword list, one entry per line");
        sub->add_flag("--stem-english", *stem, "Porter-stem English tokens");
        sub->add_option("--out", *out, "Index artifact path")->required();
        sub->callback([=, &action] {
            action = [=] {
                return cmd_index(*docs, *lang, *format, *stopwords, *stem, *out);
            };
        });
    }

    // retrieve
    {
        auto* sub = app.add_subcommand("retrieve", "Rank a query file against an index");
        auto index = std::make_shared<std::string>();
        auto queries = std::make_shared<std::string>();
        auto format = std::make_shared<std::string>("tsv");
        auto lang = std::make_shared<std::string>();
        auto k1 = std::make_shared<double>(1.2);
        auto b = std::make_shared<double>(0.75);
        auto k = std::make_shared<std::size_t>(100);
        auto tag = std::make_shared<std::string>("xpandir");
        auto out = std::make_shared<std::string>();
        sub->add_option("--index", *index, "Index artifact path")->required();
        sub->add_option("--queries", *queries, "Query file")->required();
        sub->add_option("--format", *format, "Query file format: tsv or jsonl");
        sub->add_option("--lang", *lang, "Query analysis language (default: index language)");
        sub->add_option("--k1", *k1, "BM25 k1");
        sub->add_option("--b", *b, "BM25 b");
        sub->add_option("--k-retrieve", *k, "Ranking depth");
        sub->add_option("--run-tag", *tag, "TREC run tag");
        sub->add_option("--out", *out, "Run file path (default: stdout)");
        sub->callback([=, &action] {
            action = [=] {
                return cmd_retrieve(*index, *queries, *format, *lang, *k1, *b, *k, *tag,
                                    *out);
            };
        });
    }

    // eval
    {
        auto* sub = app.add_subcommand("eval", "Score a TREC run against qrels");
        auto run = std::make_shared<std::string>();
        auto qrels = std::make_shared<std::string>();
        auto scheme = std::make_shared<std::string>("graded");
        auto metrics = std::make_shared<std::vector<std::string>>();
        auto threshold = std::make_shared<int>(1);
        auto per_query = std::make_shared<std::string>();
        sub->add_option("--run", *run, "TREC run file")->required();
        sub->add_option("--qrels", *qrels, "Qrels file")->required();
        sub->add_option("--scheme", *scheme, "Qrels scheme: graded or single-positive");
        sub->add_option("--metric", *metrics, "Metric spec, e.g. recall@50 (repeatable)")
            ->required();
        sub->add_option("--threshold", *threshold, "Relevance grade threshold");
        sub->add_option("--per-query", *per_query, "Also write per-query CSV here");
        sub->callback([=, &action] {
            action = [=] {
                return cmd_eval(*run, *qrels, *scheme, *metrics, *threshold, *per_query);
            };
        });
    }

    // expand
    {
        auto* sub = app.add_subcommand("expand", "Expand a query file through one plan");
        auto config = std::make_shared<std::string>();
        auto script = std::make_shared<std::string>();
        auto queries = std::make_shared<std::string>();
        auto format = std::make_shared<std::string>("tsv");
        auto lang = std::make_shared<std::string>();
        auto target = std::make_shared<std::string>();
        auto strategy = std::make_shared<std::string>("zero-shot");
        auto order = std::make_shared<std::string>("t+e");
        auto form = std::make_shared<std::string>("doc-only");
        auto seed = std::make_shared<std::uint64_t>(0);
        auto reps = std::make_shared<int>(1);
        auto pool = std::make_shared<std::string>();
        auto fcount = std::make_shared<int>(5);
        auto clean = std::make_shared<std::string>("off");
        auto out = std::make_shared<std::string>();
        sub->add_option("--config", *config, "Experiment config supplying the backend");
        sub->add_option("--mock-script", *script, "Mock script instead of --config");
        sub->add_option("--queries", *queries, "Query file")->required();
        sub->add_option("--format", *format, "Query file format: tsv or jsonl");
        sub->add_option("--lang", *lang, "Query language code")->required();
        sub->add_option("--target-lang", *target, "Document language code")->required();
        sub->add_option("--strategy", *strategy,
                        "zero-shot, cot, rar, or few-shot");
        sub->add_option("--order", *order, "t+e or e+t");
        sub->add_option("--retrieval-form", *form, "doc-only or query-plus-doc");
        sub->add_option("--seed", *seed, "Few-shot sampling seed");
        sub->add_option("--reps", *reps, "Query repetitions in query-plus-doc");
        sub->add_option("--fewshot-pool", *pool, "Few-shot example pool (JSONL)");
        sub->add_option("--fewshot-count", *fcount, "Examples per few-shot prompt");
        sub->add_option("--clean", *clean, "off or strip-meta");
        sub->add_option("--out", *out, "Expansion cache file (reused when present)")
            ->required();
        sub->callback([=, &action] {
            action = [=]() -> int {
                if (config->empty() == script->empty()) {
                    std::cerr << "expand needs exactly one of --config or --mock-script\n"
                              << sub->help();
                    return 2;
                }
                return cmd_expand(*config, *script, *queries, *format, *lang, *target,
                                  *strategy, *order, *form, *seed, *reps, *pool, *fcount,
                                  *clean, *out);
            };
        });
    }

    // run-matrix
    {
        auto* sub = app.add_subcommand("run-matrix",
                                       "Run all plans over all language pairs");
        auto config = std::make_shared<std::string>();
        auto jobs = std::make_shared<int>(1);
        auto dry = std::make_shared<bool>(false);
        sub->add_option("--config", *config, "Experiment config (TOML)")->required();
        sub->add_option("--jobs", *jobs, "Language pairs processed in parallel");
        sub->add_flag("--dry-run", *dry, "Print the pair/cell grid and exit");
        sub->callback([=, &action] {
            action = [=] { return cmd_run_matrix(*config, *jobs, *dry); };
        });
    }

    // report
    {
        auto* sub = app.add_subcommand(
            "report", "Recompute aggregates from result files and print the summary");
        auto config = std::make_shared<std::string>();
        sub->add_option("--config", *config, "Experiment config (TOML)")->required();
        sub->callback([=, &action] {
            action = [=] { return cmd_report(*config); };
        });
    }

    // mock-serve
    {
        auto* sub = app.add_subcommand("mock-serve",
                                       "Serve a mock script over the chat wire protocol");
        auto script = std::make_shared<std::string>();
        auto host = std::make_shared<std::string>("127.0.0.1");
        auto port = std::make_shared<int>(0);
        sub->add_option("--script", *script, "Mock script (JSONL)")->required();
        sub->add_option("--host", *host, "Bind address");
        sub->add_option("--port", *port, "Port (0 picks a free one)");
        sub->callback([=, &action] {
            action = [=] { return cmd_mock_serve(*script, *host, *port); };
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\nrun 'xpandir --help' for usage\n";
        return 2;
    }

    try {
        return action();
    } catch (const xpandir::Error& e) {
        nlohmann::ordered_json err;
        err["error"] = std::string(e.kind());
        err["detail"] = e.what();
        std::cerr << err.dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        nlohmann::ordered_json err;
        err["error"] = "Unhandled";
        err["detail"] = e.what();
        std::cerr << err.dump() << "\n";
        return 1;
    }
}
