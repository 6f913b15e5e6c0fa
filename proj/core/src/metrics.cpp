#include "xpandir/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "xpandir/error.hpp"

namespace xpandir {

MetricSpec MetricSpec::parse(std::string_view text, int threshold) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return std::tolower(c); });

    std::string kind_part = lower;
    std::string k_part;
    if (std::size_t at = lower.find('@'); at != std::string::npos) {
        kind_part = lower.substr(0, at);
        k_part = lower.substr(at + 1);
    }

    MetricSpec spec;
    spec.threshold = threshold;
    if (kind_part == "hit") spec.kind = MetricKind::Hit;
    else if (kind_part == "recall") spec.kind = MetricKind::Recall;
    else if (kind_part == "mrr") spec.kind = MetricKind::Mrr;
    else if (kind_part == "ndcg") spec.kind = MetricKind::Ndcg;
    else throw ConfigError("unknown metric \"" + std::string(text) + "\"");

    if (spec.kind == MetricKind::Mrr) {
        if (!k_part.empty())
            throw ConfigError("mrr takes no cutoff (got \"" + std::string(text) + "\")");
        return spec;
    }
    if (k_part.empty())
        throw ConfigError("metric \"" + kind_part + "\" requires a cutoff, e.g. " +
                          kind_part + "@10");
    try {
        std::size_t consumed = 0;
        long k = std::stol(k_part, &consumed);
        if (consumed != k_part.size() || k < 1) throw std::invalid_argument(k_part);
        spec.k = static_cast<std::size_t>(k);
    } catch (const std::exception&) {
        throw ConfigError("bad metric cutoff in \"" + std::string(text) + "\"");
    }
    return spec;
}

std::string MetricSpec::name() const {
    switch (kind) {
        case MetricKind::Hit: return "hit@" + std::to_string(k);
        case MetricKind::Recall: return "recall@" + std::to_string(k);
        case MetricKind::Mrr: return "mrr";
        case MetricKind::Ndcg: return "ndcg@" + std::to_string(k);
    }
    return {};
}

double hit_at_k(const RankedList& ranked, const std::set<std::string>& relevant,
                std::size_t k) {
    if (k < 1) throw ConfigError("metric cutoff must be at least 1");
    std::size_t depth = std::min(k, ranked.entries.size());
    for (std::size_t i = 0; i < depth; ++i)
        if (relevant.count(ranked.entries[i].doc_id)) return 1.0;
    return 0.0;
}

double recall_at_k(const RankedList& ranked, const std::set<std::string>& relevant,
                   std::size_t k) {
    if (k < 1) throw ConfigError("metric cutoff must be at least 1");
    if (relevant.empty()) throw NoRelevantDocs(ranked.query_id);
    std::size_t depth = std::min(k, ranked.entries.size());
    std::size_t found = 0;
    for (std::size_t i = 0; i < depth; ++i)
        if (relevant.count(ranked.entries[i].doc_id)) ++found;
    return static_cast<double>(found) / static_cast<double>(relevant.size());
}

double mrr(const RankedList& ranked, const std::set<std::string>& relevant) {
    for (std::size_t i = 0; i < ranked.entries.size(); ++i)
        if (relevant.count(ranked.entries[i].doc_id))
            return 1.0 / static_cast<double>(i + 1);
    return 0.0;
}

double ndcg_at_k(const RankedList& ranked, const std::map<std::string, int>& graded,
                 std::size_t k) {
    if (k < 1) throw ConfigError("metric cutoff must be at least 1");

    std::vector<int> ideal;
    ideal.reserve(graded.size());
    bool any_positive = false;
    for (const auto& [doc, g] : graded) {
        ideal.push_back(g);
        if (g > 0) any_positive = true;
    }
    if (!any_positive) throw NoRelevantDocs(ranked.query_id);
    std::sort(ideal.begin(), ideal.end(), std::greater<int>());
    if (ideal.size() > k) ideal.resize(k);

    auto gain = [](int g) { return std::pow(2.0, static_cast<double>(g)) - 1.0; };
    auto discount = [](std::size_t rank) {
        return 1.0 / std::log2(static_cast<double>(rank) + 1.0);
    };

    double dcg = 0.0;
    std::size_t depth = std::min(k, ranked.entries.size());
    for (std::size_t i = 0; i < depth; ++i) {
        auto it = graded.find(ranked.entries[i].doc_id);
        int g = it == graded.end() ? 0 : it->second;
        dcg += gain(g) * discount(i + 1);
    }
    double idcg = 0.0;
    for (std::size_t i = 0; i < ideal.size(); ++i) idcg += gain(ideal[i]) * discount(i + 1);
    return dcg / idcg;
}

std::vector<MetricReport> evaluate_run(const std::vector<RankedList>& run,
                                       const QrelSet& qrels,
                                       const std::vector<MetricSpec>& specs) {
    std::vector<MetricReport> reports;
    reports.reserve(specs.size());
    for (const MetricSpec& spec : specs) {
        MetricReport report;
        report.spec = spec;
        double sum = 0.0;
        for (const RankedList& ranked : run) {
            const auto* judged = qrels.judged(ranked.query_id);
            double value = 0.0;
            if (spec.kind == MetricKind::Ndcg) {
                bool positive = false;
                if (judged)
                    for (const auto& [doc, g] : *judged)
                        if (g > 0) { positive = true; break; }
                if (!positive) {
                    ++report.n_excluded;
                    continue;
                }
                value = ndcg_at_k(ranked, *judged, spec.k);
            } else {
                std::set<std::string> relevant =
                    relevant_docs(qrels, ranked.query_id, spec.threshold);
                if (relevant.empty()) {
                    ++report.n_excluded;
                    continue;
                }
                switch (spec.kind) {
                    case MetricKind::Hit: value = hit_at_k(ranked, relevant, spec.k); break;
                    case MetricKind::Recall:
                        value = recall_at_k(ranked, relevant, spec.k);
                        break;
                    case MetricKind::Mrr: value = mrr(ranked, relevant); break;
                    case MetricKind::Ndcg: break;  // handled above
                }
            }
            report.per_query.emplace(ranked.query_id, value);
            sum += value;
            ++report.n_queries;
        }
        report.mean = report.n_queries == 0
                          ? 0.0
                          : sum / static_cast<double>(report.n_queries);
        reports.push_back(std::move(report));
    }
    return reports;
}

namespace {

std::string format_value(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10f", v);
    return buf;
}

std::string k_cell(const MetricSpec& spec) {
    return spec.kind == MetricKind::Mrr ? std::string() : std::to_string(spec.k);
}

std::string kind_name(MetricKind kind) {
    switch (kind) {
        case MetricKind::Hit: return "hit";
        case MetricKind::Recall: return "recall";
        case MetricKind::Mrr: return "mrr";
        case MetricKind::Ndcg: return "ndcg";
    }
    return {};
}

}  // namespace

std::string emit_metrics_csv(const std::vector<MetricReport>& reports) {
    std::string out = "metric,k,mean,n_queries\n";
    for (const MetricReport& r : reports) {
        out += kind_name(r.spec.kind);
        out += ',';
        out += k_cell(r.spec);
        out += ',';
        out += format_value(r.mean);
        out += ',';
        out += std::to_string(r.n_queries);
        out += '\n';
    }
    return out;
}

std::string emit_per_query_csv(const std::vector<MetricReport>& reports) {
    std::string out = "metric,k,query_id,value\n";
    for (const MetricReport& r : reports)
        for (const auto& [qid, value] : r.per_query) {
            out += kind_name(r.spec.kind);
            out += ',';
            out += k_cell(r.spec);
            out += ',';
            out += qid;
            out += ',';
            out += format_value(value);
            out += '\n';
        }
    return out;
}

std::vector<MetricReport> load_metrics_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);

    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line) || line != "metric,k,mean,n_queries")
        throw MalformedRecord(path, 1, "expected header metric,k,mean,n_queries");
    ++line_no;

    std::vector<MetricReport> reports;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            std::size_t comma = line.find(',', start);
            fields.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (fields.size() != 4)
            throw MalformedRecord(path, line_no, "expected 4 fields");

        MetricReport report;
        std::string spec_text = fields[0];
        if (!fields[1].empty()) spec_text += "@" + fields[1];
        try {
            report.spec = MetricSpec::parse(spec_text);
        } catch (const Error& e) {
            throw MalformedRecord(path, line_no, e.what());
        }
        try {
            std::size_t used = 0;
            report.mean = std::stod(fields[2], &used);
            if (used != fields[2].size()) throw std::invalid_argument(fields[2]);
            report.n_queries = std::stoul(fields[3], &used);
            if (used != fields[3].size()) throw std::invalid_argument(fields[3]);
        } catch (const std::exception&) {
            throw MalformedRecord(path, line_no, "bad numeric field");
        }
        reports.push_back(std::move(report));
    }
    return reports;
}

}  // namespace xpandir
