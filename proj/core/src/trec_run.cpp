#include "xpandir/trec_run.hpp"

#include <cstdio>
#include <fstream>
#include <unordered_set>

#include "xpandir/error.hpp"

namespace xpandir {

namespace {

std::string format_score(double score) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", score);
    return buf;
}

}  // namespace

std::string emit_run(const std::vector<RankedList>& lists, const std::string& run_tag) {
    std::string out;
    for (const RankedList& list : lists) {
        std::size_t rank = 0;
        for (const ScoredDoc& e : list.entries) {
            ++rank;
            out += list.query_id;
            out += " Q0 ";
            out += e.doc_id;
            out += ' ';
            out += std::to_string(rank);
            out += ' ';
            out += format_score(e.score);
            out += ' ';
            out += run_tag;
            out += '\n';
        }
    }
    return out;
}

void write_run(const std::string& path, const std::vector<RankedList>& lists,
               const std::string& run_tag) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << emit_run(lists, run_tag);
    if (!out) throw IoError("write failed for " + path);
}

RunFile load_run(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);

    RunFile run;
    std::unordered_set<std::string> finished_queries;
    std::unordered_set<std::string> docs_in_query;
    RankedList* current = nullptr;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
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
        if (fields.size() != 6)
            throw MalformedRecord(path, line_no,
                                  "expected `query_id Q0 doc_id rank score run_tag`");
        if (fields[1] != "Q0")
            throw MalformedRecord(path, line_no, "second field must be Q0");
        if (fields[0].empty() || fields[2].empty() || fields[5].empty())
            throw MalformedRecord(path, line_no, "empty field");

        if (run.run_tag.empty())
            run.run_tag = fields[5];
        else if (fields[5] != run.run_tag)
            throw MalformedRecord(path, line_no,
                                  "run tag changes from \"" + run.run_tag + "\" to \"" +
                                      fields[5] + "\"");

        unsigned long rank = 0;
        try {
            std::size_t consumed = 0;
            rank = std::stoul(fields[3], &consumed);
            if (consumed != fields[3].size()) throw std::invalid_argument(fields[3]);
        } catch (const std::exception&) {
            throw MalformedRecord(path, line_no, "rank is not an integer");
        }
        double score = 0.0;
        try {
            std::size_t consumed = 0;
            score = std::stod(fields[4], &consumed);
            if (consumed != fields[4].size()) throw std::invalid_argument(fields[4]);
        } catch (const std::exception&) {
            throw MalformedRecord(path, line_no, "score is not a number");
        }

        if (!current || current->query_id != fields[0]) {
            if (finished_queries.count(fields[0]))
                throw MalformedRecord(path, line_no,
                                      "query \"" + fields[0] +
                                          "\" reappears after its block ended");
            if (current) finished_queries.insert(current->query_id);
            run.lists.emplace_back();
            current = &run.lists.back();
            current->query_id = fields[0];
            docs_in_query.clear();
        }
        if (rank != current->entries.size() + 1)
            throw MalformedRecord(path, line_no,
                                  "rank " + fields[3] + " breaks the 1-based sequence");
        if (!docs_in_query.insert(fields[2]).second)
            throw MalformedRecord(path, line_no,
                                  "doc \"" + fields[2] + "\" repeated within query \"" +
                                      fields[0] + "\"");
        current->entries.push_back({fields[2], score});
    }
    for (RankedList& list : run.lists) list.depth = list.entries.size();
    return run;
}

}  // namespace xpandir
