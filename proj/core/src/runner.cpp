#include "xpandir/runner.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <thread>

#include "xpandir/error.hpp"
#include "xpandir/trec_run.hpp"

namespace xpandir {

namespace fs = std::filesystem;

namespace {

bool is_gateway_error(const Error& e) {
    return e.kind() == "BackendUnavailable" || e.kind() == "ResponseEmpty" ||
           e.kind() == "InvalidRequest";
}

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    if (!out) throw IoError("write failed for " + path.string());
}

std::string format_value(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10f", v);
    return buf;
}

}  // namespace

std::shared_ptr<Backend> make_backend(const BackendEntry& entry) {
    if (entry.kind == "mock") {
        if (entry.script_path.empty())
            throw ConfigError("mock backend needs backend.script");
        return std::make_shared<MockBackend>(MockScript::load(entry.script_path),
                                             entry.id.empty() ? "mock" : entry.id,
                                             entry.max_in_flight);
    }
    if (entry.kind == "http") {
        HttpBackendConfig cfg;
        cfg.base_url = entry.base_url;
        cfg.model = entry.model;
        cfg.max_attempts = entry.max_attempts;
        cfg.base_delay_ms = entry.base_delay_ms;
        cfg.max_delay_ms = entry.max_delay_ms;
        cfg.timeout_s = entry.timeout_s;
        cfg.max_in_flight = entry.max_in_flight;
        return std::make_shared<HttpBackend>(std::move(cfg), entry.id);
    }
    throw ConfigError("unknown backend kind \"" + entry.kind + "\"");
}

Runner::Runner(ExperimentConfig config)
    : Runner(std::move(config), nullptr) {}

Runner::Runner(ExperimentConfig config, std::shared_ptr<Backend> backend)
    : config_(std::move(config)), backend_(std::move(backend)) {
    if (!backend_) backend_ = make_backend(config_.backend);
}

const QuerySetEntry& Runner::query_set_for(const LangCode& lang) const {
    for (const QuerySetEntry& e : config_.query_sets)
        if (e.lang == lang) return e;
    throw ConfigError("no query set for language " + lang.str());
}

const CollectionEntry& Runner::collection_for(const LangCode& lang) const {
    for (const CollectionEntry& e : config_.collections)
        if (e.lang == lang) return e;
    throw ConfigError("no collection for language " + lang.str());
}

std::vector<LangPair> Runner::pairs() const {
    std::set<std::string> qlangs, dlangs;
    for (const QuerySetEntry& e : config_.query_sets)
        if (!qlangs.insert(e.lang.str()).second)
            throw ConfigError("two query sets for language " + e.lang.str());
    for (const CollectionEntry& e : config_.collections)
        if (!dlangs.insert(e.lang.str()).second)
            throw ConfigError("two collections for language " + e.lang.str());

    std::vector<LangPair> out;
    for (const QuerySetEntry& qs : config_.query_sets)
        for (const CollectionEntry& coll : config_.collections) {
            if (qs.lang == coll.lang) continue;
            if (!config_.find_qrels(qs.lang, coll.lang)) continue;
            out.push_back({qs.lang, coll.lang});
        }
    if (out.empty())
        throw ConfigError("config yields no language pairs (need query set, "
                          "collection, and qrels with distinct languages)");
    return out;
}

std::shared_ptr<const InvertedIndex> Runner::index_for(const LangCode& doc_lang) {
    std::lock_guard<std::mutex> lock(index_mu_);
    auto it = index_cache_.find(doc_lang.str());
    if (it != index_cache_.end()) return it->second;

    const CollectionEntry& entry = collection_for(doc_lang);
    AnalyzerOptions opts;
    opts.stem_english = config_.stem_english;
    if (!entry.stopwords_path.empty())
        opts.stopwords = load_stopwords(entry.stopwords_path, entry.lang);
    Collection coll = load_documents(entry.path, entry.lang, entry.format, opts);
    auto index = std::make_shared<const InvertedIndex>(InvertedIndex::build(coll));
    index_cache_.emplace(doc_lang.str(), index);
    return index;
}

/// Loaded state plus expansion results for one language pair. Expansion
/// (phase 1) runs for every cell before any evaluation (phase 2), so a
/// gateway failure in any cell excludes that query pair-wide and deltas stay
/// paired.
struct PairSession {
    Runner& runner;
    LangPair pair;
    std::vector<Query> queries;
    QrelSet qrels;
    std::shared_ptr<const InvertedIndex> index;
    std::string cache_path;
    ExpansionCache cache;
    bool dirty = false;
    std::set<std::string> failed;
    // cell -> query id -> retrieval text
    std::map<std::string, std::map<std::string, std::string>> texts;

    PairSession(Runner& r, const LangPair& p)
        : runner(r),
          pair(p),
          queries(load_queries(r.query_set_for(p.query_lang).path, p.query_lang,
                               r.query_set_for(p.query_lang).format)),
          qrels(load_qrels(require_qrels(r, p).path, require_qrels(r, p).scheme)),
          index(r.index_for(p.doc_lang)),
          cache_path(r.config().output_dir.empty()
                         ? std::string()
                         : (fs::path(r.config().output_dir) / "cache" /
                            (p.str() + ".jsonl"))
                               .string()),
          cache(cache_path.empty() ? ExpansionCache() : make_cache(cache_path)) {}

    static const QrelsEntry& require_qrels(const Runner& r, const LangPair& p) {
        const QrelsEntry* e = r.config().find_qrels(p.query_lang, p.doc_lang);
        if (!e) throw ConfigError("no qrels for pair " + p.str());
        return *e;
    }

    static ExpansionCache make_cache(const std::string& path) {
        return ExpansionCache(path);
    }

    Backend& backend() { return runner.backend(); }

    void note_failure(const std::string& stage, const std::string& query_id,
                      const Error& e) {
        failed.insert(query_id);
        std::cerr << "[xpandir] " << pair.str() << " " << stage << " failed for query "
                  << query_id << ": " << e.what() << "\n";
    }

    void ensure_baseline() {
        auto& cell = texts[kBaselineCell];
        for (const Query& q : queries) {
            if (failed.count(q.id) || cell.count(q.id)) continue;
            if (const ExpandedQuery* hit =
                    cache.find(q.id, kBaselineCell, backend().id())) {
                cell[q.id] = hit->final_text;
                continue;
            }
            try {
                GenerationResult res = backend().generate(
                    translation_request(q.text, q.lang, pair.doc_lang));
                ExpandedQuery rec;
                rec.query_id = q.id;
                rec.source_lang = q.lang;
                rec.target_lang = pair.doc_lang;
                rec.original_text = q.text;
                rec.translated_text = res.text;
                rec.final_text = res.text;
                rec.trace.push_back({"translate", res.backend_id, res.latency_ms});
                cache.put(rec, kBaselineCell, backend().id());
                dirty = true;
                cell[q.id] = res.text;
            } catch (const Error& e) {
                if (!is_gateway_error(e)) throw;
                note_failure("baseline translation", q.id, e);
            }
        }
    }

    void ensure_plan(const ExpansionPlan& plan) {
        const std::string fp = plan.fingerprint();
        auto& cell = texts[fp];
        for (const Query& q : queries) {
            if (failed.count(q.id) || cell.count(q.id)) continue;
            if (const ExpandedQuery* hit = cache.find(q.id, fp, backend().id())) {
                cell[q.id] = hit->final_text;
                continue;
            }
            try {
                ExpandedQuery rec = expand_query(backend(), plan, q, pair.doc_lang);
                cache.put(rec, backend().id());
                dirty = true;
                cell[q.id] = rec.final_text;
            } catch (const Error& e) {
                if (!is_gateway_error(e)) throw;
                note_failure(fp, q.id, e);
            }
        }
    }

    void save_cache() {
        if (cache_path.empty()) return;
        if (!dirty && fs::exists(cache_path)) return;
        fs::create_directories(fs::path(cache_path).parent_path());
        cache.save_as(cache_path);
    }

    std::vector<RankedList> rank_lists(const std::string& cell) const {
        std::vector<RankedList> lists;
        auto it = texts.find(cell);
        if (it == texts.end()) return lists;
        for (const Query& q : queries) {
            if (failed.count(q.id)) continue;
            auto t = it->second.find(q.id);
            if (t == it->second.end()) continue;
            lists.push_back(index->retrieve(runner.config().bm25, t->second,
                                            pair.doc_lang, runner.config().k_retrieve,
                                            q.id));
        }
        return lists;
    }

    PairResult evaluate(const std::string& cell,
                        const std::vector<RankedList>& lists) const {
        PairResult result;
        result.pair = pair;
        result.cell = cell;
        result.reports = evaluate_run(lists, qrels, runner.config().metric_specs);
        result.n_failed = failed.size();
        return result;
    }
};

PairResult Runner::run_baseline(const LangPair& pair) {
    PairSession session(*this, pair);
    session.ensure_baseline();
    session.save_cache();
    return session.evaluate(kBaselineCell, session.rank_lists(kBaselineCell));
}

PairResult Runner::run_plan(const LangPair& pair, const ExpansionPlan& plan) {
    plan.validate();
    PairSession session(*this, pair);
    session.ensure_plan(plan);
    session.save_cache();
    const std::string fp = plan.fingerprint();
    return session.evaluate(fp, session.rank_lists(fp));
}

MatrixStats Runner::run_matrix(int jobs) {
    if (config_.output_dir.empty())
        throw ConfigError("run-matrix needs output_dir");
    if (config_.metric_specs.empty())
        throw ConfigError("run-matrix needs at least one metric");

    const std::vector<LangPair> pair_list = pairs();
    std::vector<std::string> cells;
    cells.push_back(kBaselineCell);
    for (const ExpansionPlan& plan : config_.plans) cells.push_back(plan.fingerprint());

    std::vector<std::vector<PairResult>> per_pair(pair_list.size());
    std::vector<std::exception_ptr> errors(pair_list.size());

    auto work = [&](std::size_t i) {
        try {
            PairSession session(*this, pair_list[i]);
            session.ensure_baseline();
            for (const ExpansionPlan& plan : config_.plans) session.ensure_plan(plan);
            session.save_cache();

            for (const std::string& cell : cells) {
                std::vector<RankedList> lists = session.rank_lists(cell);
                PairResult result = session.evaluate(cell, lists);

                fs::path dir = fs::path(config_.output_dir) / "cells" /
                               pair_list[i].str() / cell;
                fs::create_directories(dir);
                write_run((dir / "run.trec").string(), lists,
                          config_.run_tag + "." + cell);
                write_text_file(dir / "metrics.csv", emit_metrics_csv(result.reports));
                write_text_file(dir / "per_query.csv",
                                emit_per_query_csv(result.reports));
                per_pair[i].push_back(std::move(result));
            }
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };

    int n_workers = std::max(1, jobs);
    if (n_workers <= 1 || pair_list.size() <= 1) {
        for (std::size_t i = 0; i < pair_list.size(); ++i) work(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> workers;
        std::size_t n = std::min<std::size_t>(n_workers, pair_list.size());
        for (std::size_t w = 0; w < n; ++w)
            workers.emplace_back([&] {
                while (true) {
                    std::size_t i = next.fetch_add(1);
                    if (i >= pair_list.size()) break;
                    work(i);
                }
            });
        for (std::thread& t : workers) t.join();
    }
    for (const std::exception_ptr& e : errors)
        if (e) std::rethrow_exception(e);

    MatrixStats stats;
    stats.n_pairs = pair_list.size();
    for (std::vector<PairResult>& rs : per_pair)
        for (PairResult& r : rs) stats.results.push_back(std::move(r));
    stats.n_cells = stats.results.size();
    stats.gateway_calls = backend_->calls();

    AggregateView view =
        aggregate(stats.results, lang_classes_for(config_, stats.results));
    write_aggregates(config_.output_dir, view);
    return stats;
}

std::map<std::string, std::string> lang_classes_for(const ExperimentConfig& config,
                                                    const std::vector<PairResult>& results) {
    std::map<std::string, std::string> classes;
    for (const PairResult& r : results)
        for (const std::string& code : {r.pair.query_lang.str(), r.pair.doc_lang.str()})
            classes[code] = config.european_latin.count(code) ? kClassEuropeanLatin
                                                              : kClassOther;
    return classes;
}

namespace {

AggregateView::CellAgg finish_agg(AggregateView::CellAgg agg,
                                  const std::map<std::string, std::string>& classes) {
    std::map<std::string, std::pair<double, std::size_t>> col_sums;
    std::map<std::string, std::map<std::string, std::pair<double, std::size_t>>> quad_sums;
    for (const auto& [ql, row] : agg.pair_mean) {
        auto qc = classes.find(ql);
        if (qc == classes.end())
            throw ConfigError("no quadrant class for language " + ql);
        double row_sum = 0.0;
        for (const auto& [dl, value] : row) {
            auto dc = classes.find(dl);
            if (dc == classes.end())
                throw ConfigError("no quadrant class for language " + dl);
            row_sum += value;
            auto& col = col_sums[dl];
            col.first += value;
            col.second += 1;
            auto& quad = quad_sums[qc->second][dc->second];
            quad.first += value;
            quad.second += 1;
        }
        agg.by_query_lang[ql] = row_sum / static_cast<double>(row.size());
    }
    for (const auto& [dl, sum] : col_sums)
        agg.by_doc_lang[dl] = sum.first / static_cast<double>(sum.second);
    for (const auto& [qc, row] : quad_sums)
        for (const auto& [dc, sum] : row)
            agg.quadrant[qc][dc] = sum.first / static_cast<double>(sum.second);
    return agg;
}

AggregateView::CellAgg subtract_agg(const AggregateView::CellAgg& plan,
                                    const AggregateView::CellAgg& base) {
    AggregateView::CellAgg delta;
    for (const auto& [ql, row] : plan.pair_mean)
        for (const auto& [dl, value] : row)
            delta.pair_mean[ql][dl] = value - base.pair_mean.at(ql).at(dl);
    for (const auto& [ql, value] : plan.by_query_lang)
        delta.by_query_lang[ql] = value - base.by_query_lang.at(ql);
    for (const auto& [dl, value] : plan.by_doc_lang)
        delta.by_doc_lang[dl] = value - base.by_doc_lang.at(dl);
    for (const auto& [qc, row] : plan.quadrant)
        for (const auto& [dc, value] : row)
            delta.quadrant[qc][dc] = value - base.quadrant.at(qc).at(dc);
    return delta;
}

}  // namespace

AggregateView aggregate(const std::vector<PairResult>& results,
                        const std::map<std::string, std::string>& lang_classes) {
    std::set<std::string> baseline_pairs;
    for (const PairResult& r : results)
        if (r.cell == kBaselineCell) baseline_pairs.insert(r.pair.str());
    for (const PairResult& r : results)
        if (r.cell != kBaselineCell && !baseline_pairs.count(r.pair.str()))
            throw MissingBaseline(r.pair.str());

    AggregateView view;
    for (const PairResult& r : results)
        for (const MetricReport& report : r.reports)
            view.values[r.cell][report.spec.name()]
                .pair_mean[r.pair.query_lang.str()][r.pair.doc_lang.str()] = report.mean;

    for (auto& [cell, metrics] : view.values)
        for (auto& [metric, agg] : metrics) agg = finish_agg(std::move(agg), lang_classes);

    auto base_it = view.values.find(kBaselineCell);
    for (const auto& [cell, metrics] : view.values) {
        if (cell == kBaselineCell) continue;
        for (const auto& [metric, agg] : metrics) {
            if (base_it == view.values.end() || !base_it->second.count(metric))
                throw MissingBaseline("metric " + metric);
            view.deltas[cell][metric] = subtract_agg(agg, base_it->second.at(metric));
        }
    }
    return view;
}

namespace {

std::string heatmap_csv(const AggregateView::CellAgg& agg) {
    std::set<std::string> doc_langs;
    for (const auto& [ql, row] : agg.pair_mean)
        for (const auto& [dl, value] : row) doc_langs.insert(dl);

    std::string out = "query_lang";
    for (const std::string& dl : doc_langs) out += "," + dl;
    out += '\n';
    for (const auto& [ql, row] : agg.pair_mean) {
        out += ql;
        for (const std::string& dl : doc_langs) {
            out += ',';
            auto it = row.find(dl);
            if (it != row.end()) out += format_value(it->second);
        }
        out += '\n';
    }
    return out;
}

}  // namespace

void write_aggregates(const std::string& output_dir, const AggregateView& view) {
    fs::path base = fs::path(output_dir) / "aggregates";

    for (const auto& [cell, metrics] : view.values) {
        fs::path dir = base / cell;
        fs::create_directories(dir);
        for (const auto& [metric, agg] : metrics)
            write_text_file(dir / ("heatmap." + metric + ".csv"), heatmap_csv(agg));
    }
    for (const auto& [cell, metrics] : view.deltas) {
        fs::path dir = base / cell;
        for (const auto& [metric, agg] : metrics)
            write_text_file(dir / ("delta." + metric + ".csv"), heatmap_csv(agg));
    }

    std::string summary = "cell,metric,level,row,col,value,delta\n";
    auto delta_for = [&](const std::string& cell,
                         const std::string& metric) -> const AggregateView::CellAgg* {
        auto c = view.deltas.find(cell);
        if (c == view.deltas.end()) return nullptr;
        auto m = c->second.find(metric);
        return m == c->second.end() ? nullptr : &m->second;
    };
    auto row_out = [&](const std::string& cell, const std::string& metric,
                       const char* level, const std::string& row, const std::string& col,
                       double value, const double* delta) {
        summary += cell;
        summary += ',';
        summary += metric;
        summary += ',';
        summary += level;
        summary += ',';
        summary += row;
        summary += ',';
        summary += col;
        summary += ',';
        summary += format_value(value);
        summary += ',';
        if (delta) summary += format_value(*delta);
        summary += '\n';
    };
    for (const auto& [cell, metrics] : view.values)
        for (const auto& [metric, agg] : metrics) {
            const AggregateView::CellAgg* delta = delta_for(cell, metric);
            for (const auto& [ql, row] : agg.pair_mean)
                for (const auto& [dl, value] : row) {
                    const double* d = delta ? &delta->pair_mean.at(ql).at(dl) : nullptr;
                    row_out(cell, metric, "pair", ql, dl, value, d);
                }
            for (const auto& [ql, value] : agg.by_query_lang) {
                const double* d = delta ? &delta->by_query_lang.at(ql) : nullptr;
                row_out(cell, metric, "query_lang", ql, "", value, d);
            }
            for (const auto& [dl, value] : agg.by_doc_lang) {
                const double* d = delta ? &delta->by_doc_lang.at(dl) : nullptr;
                row_out(cell, metric, "doc_lang", "", dl, value, d);
            }
            for (const auto& [qc, row] : agg.quadrant)
                for (const auto& [dc, value] : row) {
                    const double* d = delta ? &delta->quadrant.at(qc).at(dc) : nullptr;
                    row_out(cell, metric, "quadrant", qc, dc, value, d);
                }
        }
    write_text_file(base / "summary.csv", summary);
}

std::vector<PairResult> load_pair_results(const std::string& output_dir) {
    fs::path cells_dir = fs::path(output_dir) / "cells";
    if (!fs::is_directory(cells_dir))
        throw IoError("no cells directory under " + output_dir);

    std::vector<std::string> pair_names;
    for (const auto& entry : fs::directory_iterator(cells_dir))
        if (entry.is_directory()) pair_names.push_back(entry.path().filename().string());
    std::sort(pair_names.begin(), pair_names.end());

    std::vector<PairResult> results;
    for (const std::string& pair_name : pair_names) {
        std::size_t dash = pair_name.find('-');
        if (dash == std::string::npos)
            throw IoError("cell directory \"" + pair_name + "\" is not a lang pair");
        LangPair pair{LangCode::parse(pair_name.substr(0, dash)),
                      LangCode::parse(pair_name.substr(dash + 1))};

        std::vector<std::string> cell_names;
        for (const auto& entry : fs::directory_iterator(cells_dir / pair_name))
            if (entry.is_directory()) cell_names.push_back(entry.path().filename().string());
        std::sort(cell_names.begin(), cell_names.end());

        for (const std::string& cell : cell_names) {
            fs::path csv = cells_dir / pair_name / cell / "metrics.csv";
            if (!fs::exists(csv)) continue;
            PairResult r;
            r.pair = pair;
            r.cell = cell;
            r.reports = load_metrics_csv(csv.string());
            results.push_back(std::move(r));
        }
    }
    return results;
}

}  // namespace xpandir
