#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "testutil.hpp"
#include "xpandir/error.hpp"
#include "xpandir/metrics.hpp"

using namespace xpandir;

namespace {

RankedList ranked(std::string qid, std::vector<std::string> ids, std::size_t depth = 100) {
    RankedList list;
    list.query_id = std::move(qid);
    list.depth = depth;
    double score = static_cast<double>(ids.size());
    for (std::string& id : ids) list.entries.push_back({std::move(id), score--});
    return list;
}

}  // namespace

TEST_CASE("metric spec grammar parses and round-trips") {
    MetricSpec hit = MetricSpec::parse("hit@5");
    CHECK(hit.kind == MetricKind::Hit);
    CHECK(hit.k == 5);
    CHECK(hit.name() == "hit@5");

    CHECK(MetricSpec::parse("Recall@50").name() == "recall@50");
    CHECK(MetricSpec::parse("nDCG@10").name() == "ndcg@10");
    CHECK(MetricSpec::parse("MRR").name() == "mrr");
    CHECK(MetricSpec::parse("recall@10", 3).threshold == 3);

    CHECK_THROWS_AS(MetricSpec::parse("mrr@5"), ConfigError);
    CHECK_THROWS_AS(MetricSpec::parse("recall"), ConfigError);
    CHECK_THROWS_AS(MetricSpec::parse("recall@0"), ConfigError);
    CHECK_THROWS_AS(MetricSpec::parse("recall@x"), ConfigError);
    CHECK_THROWS_AS(MetricSpec::parse("precision@5"), ConfigError);
}

TEST_CASE("hit@k flags any relevant doc in the top k") {
    RankedList list = ranked("q", {"d1", "d2", "d3"});
    CHECK(hit_at_k(list, {"d3"}, 3) == 1.0);
    CHECK(hit_at_k(list, {"d3"}, 2) == 0.0);
    CHECK(hit_at_k(list, {"zz"}, 3) == 0.0);
    CHECK(hit_at_k(list, {}, 3) == 0.0);
    CHECK(hit_at_k(ranked("q", {}), {"d1"}, 5) == 0.0);
}

TEST_CASE("recall@k divides by the relevant set size") {
    RankedList list = ranked("q", {"d1", "d2", "d3", "d4"});
    CHECK(recall_at_k(list, {"d1", "d4"}, 4) == 1.0);
    CHECK(recall_at_k(list, {"d1", "d4"}, 2) == 0.5);
    CHECK(recall_at_k(list, {"d1", "zz"}, 4) == 0.5);
    CHECK(recall_at_k(list, {"zz"}, 4) == 0.0);
    CHECK_THROWS_AS(recall_at_k(list, {}, 4), NoRelevantDocs);
}

TEST_CASE("mrr is the reciprocal rank within the retrieved list") {
    CHECK(mrr(ranked("q", {"d1", "d2", "d3"}), {"d1"}) == 1.0);
    CHECK(mrr(ranked("q", {"d1", "d2", "d3"}), {"d3"}) == doctest::Approx(1.0 / 3));
    CHECK(mrr(ranked("q", {"d1", "d2", "d3"}), {"d2", "d3"}) == 0.5);
    CHECK(mrr(ranked("q", {"d1"}), {"zz"}) == 0.0);
    CHECK(mrr(ranked("q", {}), {"d1"}) == 0.0);
}

TEST_CASE("ndcg@k uses exponential gain and the all-judged ideal") {
    RankedList list = ranked("q", {"d1", "d2", "d3"});
    std::map<std::string, int> grades{{"d1", 3}, {"d2", 0}, {"d3", 1}, {"d4", 2}};

    double dcg = (std::pow(2.0, 3) - 1.0) / std::log2(2.0) +
                 (std::pow(2.0, 1) - 1.0) / std::log2(4.0);
    double idcg = (std::pow(2.0, 3) - 1.0) / std::log2(2.0) +
                  (std::pow(2.0, 2) - 1.0) / std::log2(3.0) +
                  (std::pow(2.0, 1) - 1.0) / std::log2(4.0);
    CHECK(ndcg_at_k(list, grades, 3) == doctest::Approx(dcg / idcg).epsilon(1e-12));

    // perfect single-doc ranking
    CHECK(ndcg_at_k(ranked("q", {"d1"}), {{"d1", 2}}, 10) == 1.0);
    // unjudged retrieved docs count as grade zero
    CHECK(ndcg_at_k(ranked("q", {"x", "d1"}), {{"d1", 1}}, 10) ==
          doctest::Approx((1.0 / std::log2(3.0)) / 1.0));
    CHECK_THROWS_AS(ndcg_at_k(list, {{"d1", 0}}, 3), NoRelevantDocs);
    CHECK_THROWS_AS(ndcg_at_k(list, {}, 3), NoRelevantDocs);
}

TEST_CASE("evaluate_run macro-averages and excludes unjudged queries") {
    std::map<std::string, QrelSet::GradeMap> entries{
        {"q1", {{"d1", 2}, {"d2", 1}}},
        {"q2", {{"d5", 1}}},
        {"q3", {{"d9", 0}}},
    };
    QrelSet qrels(entries, QrelScheme::Graded);

    std::vector<RankedList> run{
        ranked("q1", {"d1", "d2"}),
        ranked("q2", {"d5", "d6"}),
        ranked("q3", {"d9"}),
        ranked("q4", {"d1"}),  // no judgments at all
    };

    SUBCASE("threshold 1 includes q1 and q2") {
        auto reports = evaluate_run(run, qrels, {MetricSpec::parse("recall@10")});
        REQUIRE(reports.size() == 1);
        const MetricReport& r = reports[0];
        CHECK(r.n_queries == 2);
        CHECK(r.n_excluded == 2);  // q3 (no positive), q4 (unjudged)
        CHECK(r.per_query.at("q1") == 1.0);
        CHECK(r.per_query.at("q2") == 1.0);
        CHECK(r.per_query.count("q3") == 0);
        CHECK(r.mean == 1.0);
    }

    SUBCASE("threshold 2 drops q2 from binary metrics") {
        auto reports = evaluate_run(run, qrels, {MetricSpec::parse("recall@10", 2),
                                                 MetricSpec::parse("ndcg@10", 2)});
        CHECK(reports[0].n_queries == 1);  // recall: only q1 has grade >= 2
        CHECK(reports[0].n_excluded == 3);
        // ndcg ignores the threshold: any positive grade keeps the query
        CHECK(reports[1].n_queries == 2);
        CHECK(reports[1].n_excluded == 2);
    }

    SUBCASE("mean averages only included queries") {
        std::vector<RankedList> partial{
            ranked("q1", {"zz", "d1"}),  // mrr 0.5
            ranked("q2", {"d5"}),        // mrr 1.0
        };
        auto reports = evaluate_run(partial, qrels, {MetricSpec::parse("mrr")});
        CHECK(reports[0].mean == doctest::Approx(0.75));
        CHECK(reports[0].n_queries == 2);
        CHECK(reports[0].n_excluded == 0);
    }
}

TEST_CASE("metric csv emitters and loader round-trip") {
    std::map<std::string, QrelSet::GradeMap> entries{{"q1", {{"d1", 1}}}};
    QrelSet qrels(entries, QrelScheme::Graded);
    std::vector<RankedList> run{ranked("q1", {"d1", "d2"})};
    auto reports = evaluate_run(
        run, qrels, {MetricSpec::parse("hit@5"), MetricSpec::parse("mrr")});

    std::string csv = emit_metrics_csv(reports);
    CHECK(csv ==
          "metric,k,mean,n_queries\n"
          "hit,5,1.0000000000,1\n"
          "mrr,,1.0000000000,1\n");
    CHECK(emit_per_query_csv(reports) ==
          "metric,k,query_id,value\n"
          "hit,5,q1,1.0000000000\n"
          "mrr,,q1,1.0000000000\n");

    testutil::TempDir tmp("metrics");
    testutil::spit(tmp.path / "m.csv", csv);
    auto loaded = load_metrics_csv(tmp.file("m.csv"));
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0].spec.name() == "hit@5");
    CHECK(loaded[0].mean == 1.0);
    CHECK(loaded[0].n_queries == 1);
    CHECK(loaded[1].spec.name() == "mrr");

    testutil::spit(tmp.path / "bad.csv", "metric,k,mean,n_queries\nhit,5,abc,1\n");
    CHECK_THROWS_AS(load_metrics_csv(tmp.file("bad.csv")), MalformedRecord);
    testutil::spit(tmp.path / "hdr.csv", "wrong header\n");
    CHECK_THROWS_AS(load_metrics_csv(tmp.file("hdr.csv")), MalformedRecord);
}
