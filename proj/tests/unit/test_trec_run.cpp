#include <string>
#include <vector>

#include "doctest.h"
#include "testutil.hpp"
#include "xpandir/error.hpp"
#include "xpandir/trec_run.hpp"

using namespace xpandir;
using xpandir::testutil::TempDir;
using xpandir::testutil::slurp;
using xpandir::testutil::spit;

namespace {

std::vector<RankedList> sample_lists() {
    return {
        {"q1", {{"d3", 2.5}, {"d1", 1.25}}, 10},
        {"q2", {{"d2", 0.125}}, 10},
    };
}

}  // namespace

TEST_CASE("emit_run writes the six-field line format") {
    CHECK(emit_run(sample_lists(), "tag") ==
          "q1 Q0 d3 1 2.500000 tag\n"
          "q1 Q0 d1 2 1.250000 tag\n"
          "q2 Q0 d2 1 0.125000 tag\n");
    // queries without hits produce no lines
    CHECK(emit_run({{"q9", {}, 10}}, "tag") == "");
    CHECK(emit_run({}, "tag") == "");
}

TEST_CASE("run files round-trip byte-identically") {
    TempDir tmp("run");
    std::string text = emit_run(sample_lists(), "mytag");
    spit(tmp.path / "run.trec", text);

    RunFile run = load_run(tmp.file("run.trec"));
    CHECK(run.run_tag == "mytag");
    REQUIRE(run.lists.size() == 2);
    CHECK(run.lists[0].query_id == "q1");
    CHECK(run.lists[0].entries.size() == 2);
    CHECK(run.lists[0].entries[0].doc_id == "d3");
    CHECK(run.lists[0].entries[0].score == doctest::Approx(2.5));

    CHECK(emit_run(run.lists, run.run_tag) == text);

    spit(tmp.path / "empty.trec", "");
    CHECK(load_run(tmp.file("empty.trec")).lists.empty());
}

TEST_CASE("write_run then load_run preserves content") {
    TempDir tmp("run-write");
    write_run(tmp.file("r.trec"), sample_lists(), "t");
    CHECK(slurp(tmp.path / "r.trec") == emit_run(sample_lists(), "t"));
}

TEST_CASE("malformed run lines carry their line number") {
    TempDir tmp("run-err");

    auto expect_line = [&](const std::string& content, std::size_t line) {
        spit(tmp.path / "bad.trec", content);
        try {
            load_run(tmp.file("bad.trec"));
            FAIL("expected MalformedRecord for: " << content);
        } catch (const MalformedRecord& e) {
            CHECK(e.line() == line);
        }
    };

    expect_line("q1 Q0 d1 1\n", 1);                                  // field count
    expect_line("q1 QX d1 1 1.000000 t\n", 1);                       // literal Q0
    expect_line("q1 Q0 d1 2 1.000000 t\n", 1);                       // rank must start at 1
    expect_line("q1 Q0 d1 1 1.000000 t\nq1 Q0 d2 3 0.500000 t\n", 2);  // rank gap
    expect_line("q1 Q0 d1 1 1.000000 t\nq1 Q0 d1 2 0.500000 t\n", 2);  // duplicate doc
    expect_line("q1 Q0 d1 1 1.000000 t\nq1 Q0 d2 2 0.500000 x\n", 2);  // tag flips
    expect_line("q1 Q0 d1 1 abc t\n", 1);                            // score not numeric
    expect_line("q1 Q0 d1 one 1.000000 t\n", 1);                     // rank not numeric
    // interleaved query blocks: q1 resumes after q2 started
    expect_line(
        "q1 Q0 d1 1 1.000000 t\nq2 Q0 d2 1 1.000000 t\nq1 Q0 d3 2 0.500000 t\n", 3);
}
