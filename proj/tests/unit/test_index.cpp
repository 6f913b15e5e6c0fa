#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "testutil.hpp"
#include "xpandir/analyzer.hpp"
#include "xpandir/corpus.hpp"
#include "xpandir/error.hpp"
#include "xpandir/index.hpp"

using namespace xpandir;
using xpandir::testutil::TempDir;

namespace {

LangCode en() { return LangCode::parse("en"); }

Collection tiny() {
    std::vector<Document> docs{
        {"a", en(), "", "cat dog"},
        {"b", en(), "", "cat cat fish"},
        {"c", en(), "", "bird"},
    };
    return Collection(std::move(docs), en(), {});
}

}  // namespace

TEST_CASE("bm25 matches a hand computation") {
    InvertedIndex index = InvertedIndex::build(tiny());
    CHECK(index.doc_count() == 3);
    CHECK(index.total_tokens() == 6);
    CHECK(index.avgdl() == doctest::Approx(2.0));
    CHECK(index.df("cat") == 2);
    CHECK(index.df("absent") == 0);
    CHECK(index.doc_length("b") == 3);

    // idf(cat) = ln(1 + (3-2+0.5)/(2+0.5)) = ln(1.6)
    // doc b: tf=2, dl=3 -> 2*2.2 / (2 + 1.2*(0.25 + 0.75*1.5)) = 4.4/3.65
    double expected = std::log(1.6) * (2.0 * 2.2) / (2.0 + 1.2 * (0.25 + 0.75 * 3.0 / 2.0));
    CHECK(index.bm25_score({}, {"cat"}, "b") == doctest::Approx(expected).epsilon(1e-12));

    // absent terms contribute nothing; unknown doc ids throw
    CHECK(index.bm25_score({}, {"absent"}, "a") == 0.0);
    CHECK_THROWS_AS(index.bm25_score({}, {"cat"}, "zz"), UnknownDocument);
}

TEST_CASE("duplicate query tokens contribute once per occurrence") {
    InvertedIndex index = InvertedIndex::build(tiny());
    double once = index.bm25_score({}, {"cat"}, "a");
    double twice = index.bm25_score({}, {"cat", "cat"}, "a");
    CHECK(twice == doctest::Approx(2.0 * once).epsilon(1e-12));
}

TEST_CASE("retrieve drops zero scores, breaks ties by doc id, and truncates") {
    std::vector<Document> docs{
        {"d1", en(), "", "alpha beta"},
        {"d2", en(), "", "alpha beta"},  // same content: tied score
        {"d3", en(), "", "alpha"},
        {"d4", en(), "", "unrelated"},
    };
    InvertedIndex index = InvertedIndex::build(Collection(std::move(docs), en(), {}));

    RankedList top = index.retrieve({}, "alpha beta", en(), 10, "q1");
    CHECK(top.query_id == "q1");
    CHECK(top.depth == 10);
    REQUIRE(top.entries.size() == 3);  // d4 scored zero and is gone
    CHECK(top.entries[0].doc_id == "d1");
    CHECK(top.entries[1].doc_id == "d2");
    CHECK(top.entries[0].score == top.entries[1].score);
    CHECK(top.entries[2].doc_id == "d3");

    CHECK(index.retrieve({}, "alpha", en(), 2).entries.size() == 2);
    CHECK(index.retrieve({}, "zzz", en(), 10).entries.empty());
    CHECK_THROWS_AS(index.retrieve({}, "alpha", en(), 0), ConfigError);
}

TEST_CASE("retrieval agrees with the exhaustive oracle on random corpora") {
    std::mt19937_64 rng(42);
    std::uniform_int_distribution<int> n_docs(2, 40);
    std::uniform_int_distribution<int> doc_len(1, 30);
    std::uniform_int_distribution<int> vocab(0, 24);  // tiny vocabulary forces ties
    std::uniform_int_distribution<int> q_len(1, 6);

    for (int iter = 0; iter < 50; ++iter) {
        oracle::TokenizedCorpus ref;
        std::vector<Document> docs;
        int nd = n_docs(rng);
        for (int d = 0; d < nd; ++d) {
            std::string id = "d" + std::to_string(d);
            std::string body;
            std::vector<std::string> tokens;
            int len = doc_len(rng);
            for (int t = 0; t < len; ++t) {
                std::string tok = "w" + std::to_string(vocab(rng));
                if (t) body += ' ';
                body += tok;
                tokens.push_back(tok);
            }
            ref[id] = tokens;
            docs.push_back({id, en(), "", body});
        }
        InvertedIndex index = InvertedIndex::build(Collection(std::move(docs), en(), {}));

        std::string query;
        int ql = q_len(rng);
        for (int t = 0; t < ql; ++t) {
            if (t) query += ' ';
            query += "w" + std::to_string(vocab(rng));
        }

        auto expected = oracle::retrieve(ref, analyze(query, en()).tokens, 10, 1.2, 0.75);
        RankedList got = index.retrieve({}, query, en(), 10);
        REQUIRE(got.entries.size() == expected.size());
        for (std::size_t i = 0; i < expected.size(); ++i) {
            CHECK(got.entries[i].doc_id == expected[i].doc_id);
            CHECK(got.entries[i].score == doctest::Approx(expected[i].score).epsilon(1e-9));
        }
    }
}

TEST_CASE("index artifacts round-trip through save and load") {
    TempDir tmp("index");
    AnalyzerOptions opts;
    opts.stopwords = {"the"};
    opts.stem_english = true;
    std::vector<Document> docs{
        {"d1", en(), "Title Words", "the running cats"},
        {"d2", en(), "", "dogs barked"},
    };
    InvertedIndex index = InvertedIndex::build(Collection(std::move(docs), en(), opts));
    index.save(tmp.file("idx.jsonl"));

    InvertedIndex loaded = InvertedIndex::load(tmp.file("idx.jsonl"));
    CHECK(loaded.doc_lang() == index.doc_lang());
    CHECK(loaded.doc_count() == index.doc_count());
    CHECK(loaded.total_tokens() == index.total_tokens());
    CHECK(loaded.avgdl() == index.avgdl());
    CHECK(loaded.doc_ids() == index.doc_ids());
    CHECK(loaded.postings() == index.postings());
    CHECK(loaded.analyzer().stopwords == index.analyzer().stopwords);
    CHECK(loaded.analyzer().stem_english);

    // identical scoring after the round trip, stemming still applied
    RankedList a = index.retrieve({}, "running", en(), 5);
    RankedList b = loaded.retrieve({}, "running", en(), 5);
    REQUIRE(a.entries.size() == 1);
    REQUIRE(b.entries.size() == 1);
    CHECK(a.entries[0].doc_id == b.entries[0].doc_id);
    CHECK(a.entries[0].score == b.entries[0].score);

    // a second save is byte-identical
    loaded.save(tmp.file("idx2.jsonl"));
    CHECK(testutil::slurp(tmp.path / "idx.jsonl") == testutil::slurp(tmp.path / "idx2.jsonl"));
}

TEST_CASE("index load rejects tampered artifacts") {
    TempDir tmp("index-bad");
    testutil::spit(tmp.path / "bad.jsonl", "{\"format\":\"other\",\"version\":1}\n");
    CHECK_THROWS_AS(InvertedIndex::load(tmp.file("bad.jsonl")), MalformedRecord);
    testutil::spit(tmp.path / "empty.jsonl", "");
    CHECK_THROWS_AS(InvertedIndex::load(tmp.file("empty.jsonl")), MalformedRecord);
    CHECK_THROWS_AS(InvertedIndex::load(tmp.file("nope.jsonl")), IoError);
}
