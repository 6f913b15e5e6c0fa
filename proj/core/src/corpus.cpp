#include "xpandir/corpus.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>
#include <unordered_set>

#include "xpandir/error.hpp"

namespace xpandir {

using ordered_json = nlohmann::ordered_json;

namespace {

// At most the top-100 pool plus the source article per query in the graded
// scheme.
constexpr std::size_t kMaxGradedJudgments = 101;

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    return in;
}

std::string trim(std::string_view s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

std::string json_string_field(const ordered_json& rec, const char* key,
                              const std::string& path, std::size_t line_no) {
    auto it = rec.find(key);
    if (it == rec.end() || !it->is_string())
        throw MalformedRecord(path, line_no,
                              std::string("missing or non-string key \"") + key + "\"");
    return it->get<std::string>();
}

ordered_json parse_json_line(const std::string& line, const std::string& path,
                             std::size_t line_no) {
    ordered_json rec;
    try {
        rec = ordered_json::parse(line);
    } catch (const ordered_json::parse_error& e) {
        throw MalformedRecord(path, line_no, e.what());
    }
    if (!rec.is_object()) throw MalformedRecord(path, line_no, "not a JSON object");
    return rec;
}

void check_record_lang(const ordered_json& rec, const LangCode& lang,
                       const std::string& path, std::size_t line_no) {
    auto it = rec.find("lang");
    if (it == rec.end()) return;
    if (!it->is_string() || it->get<std::string>() != lang.str())
        throw MalformedRecord(path, line_no,
                              "record lang does not match collection lang \"" +
                                  lang.str() + "\"");
}

}  // namespace

std::string scored_text(const Document& doc) {
    if (doc.title.empty()) return doc.body;
    return doc.title + "\n" + doc.body;
}

Collection::Collection(std::vector<Document> docs, LangCode doc_lang,
                       AnalyzerOptions analyzer)
    : docs_(std::move(docs)), lang_(std::move(doc_lang)), analyzer_(std::move(analyzer)) {
    if (docs_.empty()) throw EmptyCollection("collection holds no documents");
    by_id_.reserve(docs_.size());
    for (std::size_t i = 0; i < docs_.size(); ++i) {
        const Document& d = docs_[i];
        if (d.lang != lang_)
            throw ConfigError("document \"" + d.id + "\" has lang " + d.lang.str() +
                              ", collection is " + lang_.str());
        if (!by_id_.emplace(d.id, i).second) throw DuplicateId(d.id);
        stats_.total_tokens += analyze(scored_text(d), lang_, analyzer_).tokens.size();
    }
    stats_.doc_count = docs_.size();
    stats_.avg_doc_length =
        static_cast<double>(stats_.total_tokens) / static_cast<double>(stats_.doc_count);
}

const Document* Collection::find(std::string_view doc_id) const {
    auto it = by_id_.find(std::string(doc_id));
    return it == by_id_.end() ? nullptr : &docs_[it->second];
}

const Document& Collection::at(std::string_view doc_id) const {
    const Document* d = find(doc_id);
    if (!d) throw UnknownDocument(std::string(doc_id));
    return *d;
}

QrelSet::QrelSet(std::map<std::string, GradeMap> entries, QrelScheme scheme)
    : entries_(std::move(entries)), scheme_(scheme) {
    for (const auto& [qid, grades] : entries_) {
        if (scheme_ == QrelScheme::SinglePositive) {
            std::size_t positives = 0;
            for (const auto& [doc, g] : grades)
                if (g >= 1) ++positives;
            if (positives > 1) throw MultiplePositives(qid);
            if (positives == 0)
                throw ConfigError("single-positive qrels hold no positive for query \"" +
                                  qid + "\"");
        } else if (grades.size() > kMaxGradedJudgments) {
            throw ConfigError("query \"" + qid + "\" has " +
                              std::to_string(grades.size()) + " judged docs, limit " +
                              std::to_string(kMaxGradedJudgments));
        }
    }
}

const QrelSet::GradeMap* QrelSet::judged(std::string_view query_id) const {
    auto it = entries_.find(std::string(query_id));
    return it == entries_.end() ? nullptr : &it->second;
}

std::optional<int> QrelSet::grade(std::string_view query_id,
                                  std::string_view doc_id) const {
    const GradeMap* m = judged(query_id);
    if (!m) return std::nullopt;
    auto it = m->find(std::string(doc_id));
    if (it == m->end()) return std::nullopt;
    return it->second;
}

std::set<std::string> relevant_docs(const QrelSet& qrels, std::string_view query_id,
                                    int threshold) {
    if (threshold < 1 || threshold > 6)
        throw ConfigError("relevance threshold " + std::to_string(threshold) +
                          " outside [1,6]");
    std::set<std::string> out;
    if (const auto* grades = qrels.judged(query_id))
        for (const auto& [doc_id, g] : *grades)
            if (g >= threshold) out.insert(doc_id);
    return out;
}

Collection load_documents(const std::string& path, const LangCode& lang, Format format,
                          const AnalyzerOptions& analyzer) {
    std::ifstream in = open_input(path);
    std::vector<Document> docs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty()) throw MalformedRecord(path, line_no, "empty line");
        Document doc;
        doc.lang = lang;
        if (format == Format::Jsonl) {
            ordered_json rec = parse_json_line(line, path, line_no);
            doc.id = json_string_field(rec, "id", path, line_no);
            check_record_lang(rec, lang, path, line_no);
            if (auto it = rec.find("title"); it != rec.end()) {
                if (!it->is_string())
                    throw MalformedRecord(path, line_no, "non-string \"title\"");
                doc.title = it->get<std::string>();
            }
            doc.body = json_string_field(rec, "text", path, line_no);
        } else {
            std::size_t tab = line.find('\t');
            if (tab == std::string::npos)
                throw MalformedRecord(path, line_no, "expected doc_id<TAB>passage");
            doc.id = line.substr(0, tab);
            doc.body = line.substr(tab + 1);
        }
        if (doc.id.empty()) throw MalformedRecord(path, line_no, "empty doc id");
        if (doc.body.empty()) throw MalformedRecord(path, line_no, "empty document body");
        docs.push_back(std::move(doc));
    }
    if (docs.empty()) throw EmptyCollection(path + " holds no documents");
    return Collection(std::move(docs), lang, analyzer);
}

std::vector<Query> load_queries(const std::string& path, const LangCode& lang,
                                Format format) {
    std::ifstream in = open_input(path);
    std::vector<Query> queries;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty()) throw MalformedRecord(path, line_no, "empty line");
        Query q;
        q.lang = lang;
        if (format == Format::Jsonl) {
            ordered_json rec = parse_json_line(line, path, line_no);
            q.id = json_string_field(rec, "id", path, line_no);
            check_record_lang(rec, lang, path, line_no);
            q.text = trim(json_string_field(rec, "text", path, line_no));
        } else {
            std::size_t tab = line.find('\t');
            if (tab == std::string::npos)
                throw MalformedRecord(path, line_no, "expected query_id<TAB>text");
            q.id = line.substr(0, tab);
            q.text = trim(line.substr(tab + 1));
        }
        if (q.id.empty()) throw MalformedRecord(path, line_no, "empty query id");
        if (q.text.empty())
            throw MalformedRecord(path, line_no, "query text empty after trim");
        if (!seen.insert(q.id).second) throw DuplicateId(q.id);
        queries.push_back(std::move(q));
    }
    if (queries.empty()) throw EmptyCollection(path + " holds no queries");
    return queries;
}

QrelSet load_qrels(const std::string& path, QrelScheme scheme) {
    std::ifstream in = open_input(path);
    std::map<std::string, QrelSet::GradeMap> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty()) throw MalformedRecord(path, line_no, "empty line");
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            std::size_t sp = line.find(' ', start);
            if (sp == std::string::npos) {
                fields.push_back(line.substr(start));
                break;
            }
            fields.push_back(line.substr(start, sp - start));
            start = sp + 1;
        }
        if (fields.size() != 4 || fields[0].empty() || fields[2].empty())
            throw MalformedRecord(path, line_no,
                                  "expected `query_id 0 doc_id grade`, single-space "
                                  "separated");
        if (fields[1] != "0")
            throw MalformedRecord(path, line_no, "second field must be literal 0");
        int grade = 0;
        try {
            std::size_t consumed = 0;
            grade = std::stoi(fields[3], &consumed);
            if (consumed != fields[3].size()) throw std::invalid_argument(fields[3]);
        } catch (const std::exception&) {
            throw MalformedRecord(path, line_no, "grade is not an integer");
        }
        if (grade < 0 || grade > 6) throw GradeOutOfRange(path, line_no, grade);
        auto [it, inserted] = entries[fields[0]].emplace(fields[2], grade);
        if (!inserted)
            throw MalformedRecord(path, line_no,
                                  "duplicate judgment for (" + fields[0] + ", " +
                                      fields[2] + ")");
    }
    if (entries.empty()) throw EmptyCollection(path + " holds no judgments");
    return QrelSet(std::move(entries), scheme);
}

std::string emit_documents_jsonl(const std::vector<Document>& docs) {
    std::string out;
    for (const Document& d : docs) {
        ordered_json rec;
        rec["id"] = d.id;
        rec["lang"] = d.lang.str();
        if (!d.title.empty()) rec["title"] = d.title;
        rec["text"] = d.body;
        out += rec.dump();
        out += '\n';
    }
    return out;
}

std::string emit_documents_tsv(const std::vector<Document>& docs) {
    std::string out;
    for (const Document& d : docs) {
        if (!d.title.empty())
            throw ConfigError("TSV cannot represent the title of doc \"" + d.id + "\"");
        out += d.id;
        out += '\t';
        out += d.body;
        out += '\n';
    }
    return out;
}

std::string emit_queries_tsv(const std::vector<Query>& queries) {
    std::string out;
    for (const Query& q : queries) {
        out += q.id;
        out += '\t';
        out += q.text;
        out += '\n';
    }
    return out;
}

std::string emit_queries_jsonl(const std::vector<Query>& queries) {
    std::string out;
    for (const Query& q : queries) {
        ordered_json rec;
        rec["id"] = q.id;
        rec["lang"] = q.lang.str();
        rec["text"] = q.text;
        out += rec.dump();
        out += '\n';
    }
    return out;
}

std::string emit_qrels(const QrelSet& qrels) {
    std::string out;
    for (const auto& [qid, grades] : qrels.entries())
        for (const auto& [doc_id, g] : grades) {
            out += qid;
            out += " 0 ";
            out += doc_id;
            out += ' ';
            out += std::to_string(g);
            out += '\n';
        }
    return out;
}

}  // namespace xpandir
