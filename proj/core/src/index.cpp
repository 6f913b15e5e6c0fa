#include "xpandir/index.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "xpandir/error.hpp"

namespace xpandir {

using ordered_json = nlohmann::ordered_json;

namespace {
constexpr int kArtifactVersion = 1;
constexpr const char* kArtifactFormat = "xpandir-index";
}  // namespace

InvertedIndex InvertedIndex::build(const Collection& collection) {
    InvertedIndex idx;
    idx.lang_ = collection.doc_lang();
    idx.analyzer_ = collection.analyzer();

    const auto& docs = collection.documents();
    if (docs.empty()) throw EmptyCollection("cannot index an empty collection");

    idx.doc_ids_.reserve(docs.size());
    for (const Document& d : docs) idx.doc_ids_.push_back(d.id);
    std::sort(idx.doc_ids_.begin(), idx.doc_ids_.end());
    idx.ord_by_id_.reserve(idx.doc_ids_.size());
    for (std::uint32_t i = 0; i < idx.doc_ids_.size(); ++i)
        idx.ord_by_id_.emplace(idx.doc_ids_[i], i);

    idx.doc_lengths_.assign(idx.doc_ids_.size(), 0);
    // Walk docs in ordinal order so posting lists come out sorted.
    for (std::uint32_t ord = 0; ord < idx.doc_ids_.size(); ++ord) {
        const Document& d = collection.at(idx.doc_ids_[ord]);
        TokenStream ts = analyze(scored_text(d), idx.lang_, idx.analyzer_);
        idx.doc_lengths_[ord] = static_cast<std::uint32_t>(ts.tokens.size());
        idx.total_tokens_ += ts.tokens.size();
        std::map<std::string, std::uint32_t> tf;
        for (const std::string& t : ts.tokens) ++tf[t];
        for (const auto& [term, count] : tf)
            idx.postings_[term].push_back({ord, count});
    }
    idx.avgdl_ = static_cast<double>(idx.total_tokens_) /
                 static_cast<double>(idx.doc_ids_.size());
    return idx;
}

std::uint32_t InvertedIndex::ord_of(std::string_view doc_id) const {
    auto it = ord_by_id_.find(std::string(doc_id));
    if (it == ord_by_id_.end()) throw UnknownDocument(std::string(doc_id));
    return it->second;
}

std::size_t InvertedIndex::doc_length(std::string_view doc_id) const {
    return doc_lengths_[ord_of(doc_id)];
}

std::size_t InvertedIndex::df(const std::string& term) const {
    auto it = postings_.find(term);
    return it == postings_.end() ? 0 : it->second.size();
}

double InvertedIndex::idf(std::size_t df) const {
    double n = static_cast<double>(doc_ids_.size());
    double d = static_cast<double>(df);
    return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

double InvertedIndex::term_weight(const Bm25Params& params, double idf_t,
                                  std::uint32_t tf, std::size_t dl) const {
    double tfd = static_cast<double>(tf);
    double norm = params.k1 * (1.0 - params.b +
                               params.b * static_cast<double>(dl) / avgdl_);
    return idf_t * (tfd * (params.k1 + 1.0)) / (tfd + norm);
}

double InvertedIndex::bm25_score(const Bm25Params& params,
                                 const std::vector<std::string>& query_tokens,
                                 std::string_view doc_id) const {
    std::uint32_t ord = ord_of(doc_id);
    std::size_t dl = doc_lengths_[ord];
    double score = 0.0;
    for (const std::string& t : query_tokens) {
        auto it = postings_.find(t);
        if (it == postings_.end()) continue;
        const auto& list = it->second;
        auto pos = std::lower_bound(list.begin(), list.end(), ord,
                                    [](const Posting& p, std::uint32_t o) {
                                        return p.doc < o;
                                    });
        if (pos == list.end() || pos->doc != ord) continue;
        score += term_weight(params, idf(list.size()), pos->tf, dl);
    }
    return score;
}

RankedList InvertedIndex::retrieve(const Bm25Params& params, std::string_view query_text,
                                   const LangCode& query_lang, std::size_t k_retrieve,
                                   std::string query_id) const {
    if (k_retrieve == 0) throw ConfigError("k_retrieve must be at least 1");
    TokenStream ts = analyze(query_text, query_lang, analyzer_);

    // Term-at-a-time accumulation; per document the additions happen in query
    // token order, matching bm25_score exactly.
    std::vector<double> scores(doc_ids_.size(), 0.0);
    for (const std::string& t : ts.tokens) {
        auto it = postings_.find(t);
        if (it == postings_.end()) continue;
        double idf_t = idf(it->second.size());
        for (const Posting& p : it->second)
            scores[p.doc] += term_weight(params, idf_t, p.tf, doc_lengths_[p.doc]);
    }

    std::vector<std::uint32_t> hit;
    for (std::uint32_t ord = 0; ord < scores.size(); ++ord)
        if (scores[ord] > 0.0) hit.push_back(ord);
    std::stable_sort(hit.begin(), hit.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;  // ordinal order is doc_id order
    });
    if (hit.size() > k_retrieve) hit.resize(k_retrieve);

    RankedList out;
    out.query_id = std::move(query_id);
    out.depth = k_retrieve;
    out.entries.reserve(hit.size());
    for (std::uint32_t ord : hit) out.entries.push_back({doc_ids_[ord], scores[ord]});
    return out;
}

void InvertedIndex::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);

    ordered_json header;
    header["format"] = kArtifactFormat;
    header["version"] = kArtifactVersion;
    header["lang"] = lang_.str();
    header["doc_count"] = doc_ids_.size();
    // Store the integer token count, not avgdl, so reload is bit-exact.
    header["total_tokens"] = total_tokens_;
    std::vector<std::string> stopwords(analyzer_.stopwords.begin(),
                                       analyzer_.stopwords.end());
    std::sort(stopwords.begin(), stopwords.end());
    header["analyzer"] = {{"stopwords", stopwords},
                          {"stem_english", analyzer_.stem_english}};
    out << header.dump() << '\n';

    for (std::size_t i = 0; i < doc_ids_.size(); ++i) {
        ordered_json rec;
        rec["id"] = doc_ids_[i];
        rec["len"] = doc_lengths_[i];
        out << rec.dump() << '\n';
    }
    for (const auto& [term, list] : postings_) {
        ordered_json rec;
        rec["t"] = term;
        auto& p = rec["p"] = ordered_json::array();
        for (const Posting& e : list) p.push_back({e.doc, e.tf});
        out << rec.dump() << '\n';
    }
    if (!out) throw IoError("write failed for " + path);
}

InvertedIndex InvertedIndex::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);

    std::string line;
    std::size_t line_no = 0;
    auto next_json = [&](const char* what) {
        if (!std::getline(in, line))
            throw MalformedRecord(path, line_no + 1, std::string("missing ") + what);
        ++line_no;
        try {
            return ordered_json::parse(line);
        } catch (const ordered_json::parse_error& e) {
            throw MalformedRecord(path, line_no, e.what());
        }
    };

    ordered_json header = next_json("header");
    if (header.value("format", "") != kArtifactFormat ||
        header.value("version", -1) != kArtifactVersion)
        throw MalformedRecord(path, 1, "not a version-" +
                                           std::to_string(kArtifactVersion) +
                                           " index artifact");

    InvertedIndex idx;
    idx.lang_ = LangCode::parse(header.at("lang").get<std::string>());
    idx.total_tokens_ = header.at("total_tokens").get<std::size_t>();
    const auto& an = header.at("analyzer");
    idx.analyzer_.stem_english = an.at("stem_english").get<bool>();
    for (const auto& w : an.at("stopwords"))
        idx.analyzer_.stopwords.insert(w.get<std::string>());

    std::size_t doc_count = header.at("doc_count").get<std::size_t>();
    if (doc_count == 0) throw MalformedRecord(path, 1, "doc_count is 0");
    idx.doc_ids_.reserve(doc_count);
    idx.doc_lengths_.reserve(doc_count);
    for (std::size_t i = 0; i < doc_count; ++i) {
        ordered_json rec = next_json("doc record");
        idx.doc_ids_.push_back(rec.at("id").get<std::string>());
        idx.doc_lengths_.push_back(rec.at("len").get<std::uint32_t>());
        if (i > 0 && !(idx.doc_ids_[i - 1] < idx.doc_ids_[i]))
            throw MalformedRecord(path, line_no, "doc ids out of order");
    }
    idx.ord_by_id_.reserve(doc_count);
    for (std::uint32_t i = 0; i < idx.doc_ids_.size(); ++i)
        idx.ord_by_id_.emplace(idx.doc_ids_[i], i);
    idx.avgdl_ = static_cast<double>(idx.total_tokens_) / static_cast<double>(doc_count);

    while (std::getline(in, line)) {
        ++line_no;
        ordered_json rec;
        try {
            rec = ordered_json::parse(line);
        } catch (const ordered_json::parse_error& e) {
            throw MalformedRecord(path, line_no, e.what());
        }
        std::string term = rec.at("t").get<std::string>();
        std::vector<Posting>& list = idx.postings_[term];
        for (const auto& pair : rec.at("p")) {
            Posting p{pair.at(0).get<std::uint32_t>(), pair.at(1).get<std::uint32_t>()};
            if (p.doc >= doc_count)
                throw MalformedRecord(path, line_no, "posting ordinal out of range");
            if (!list.empty() && list.back().doc >= p.doc)
                throw MalformedRecord(path, line_no, "posting list out of order");
            list.push_back(p);
        }
    }
    return idx;
}

}  // namespace xpandir
