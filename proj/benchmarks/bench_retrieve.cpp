#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "xpandir/corpus.hpp"
#include "xpandir/index.hpp"

namespace {

using namespace xpandir;

// Zipf-ish synthetic corpus: small shared vocabulary, skewed frequencies.
Collection make_collection(std::size_t n_docs, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> doc_len(20, 120);
    std::uniform_int_distribution<int> word(0, 1999);
    std::uniform_int_distribution<int> head(0, 49);

    std::vector<Document> docs;
    docs.reserve(n_docs);
    for (std::size_t i = 0; i < n_docs; ++i) {
        Document d;
        d.id = "d" + std::to_string(i);
        d.lang = LangCode::parse("en");
        int len = doc_len(rng);
        for (int j = 0; j < len; ++j) {
            if (j) d.body += ' ';
            int w = (rng() % 4 == 0) ? word(rng) : head(rng);
            d.body += "w" + std::to_string(w);
        }
        docs.push_back(std::move(d));
    }
    return Collection(std::move(docs), LangCode::parse("en"), {});
}

std::string make_query(std::uint64_t seed, int words) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> head(0, 49);
    std::string q;
    for (int i = 0; i < words; ++i) {
        if (i) q += ' ';
        q += "w" + std::to_string(head(rng));
    }
    return q;
}

void BM_Retrieve(benchmark::State& state) {
    static const InvertedIndex index =
        InvertedIndex::build(make_collection(static_cast<std::size_t>(1 << 13), 11));
    std::string query = make_query(3, static_cast<int>(state.range(0)));
    Bm25Params params;
    for (auto _ : state)
        benchmark::DoNotOptimize(index.retrieve(params, query, index.doc_lang(), 100));
}

void BM_BuildIndex(benchmark::State& state) {
    Collection coll = make_collection(static_cast<std::size_t>(state.range(0)), 11);
    for (auto _ : state) benchmark::DoNotOptimize(InvertedIndex::build(coll));
}

BENCHMARK(BM_Retrieve)->Arg(2)->Arg(8)->Arg(32);
BENCHMARK(BM_BuildIndex)->Arg(1 << 10)->Arg(1 << 12);

}  // namespace
