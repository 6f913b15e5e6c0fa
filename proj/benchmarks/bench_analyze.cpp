#include <benchmark/benchmark.h>

#include <random>
#include <string>

#include "xpandir/analyzer.hpp"

namespace {

using namespace xpandir;

// Latin text with digits and punctuation, roughly sentence-shaped.
std::string latin_text(std::size_t words, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> len(2, 11);
    std::uniform_int_distribution<int> ch('a', 'z');
    std::string out;
    for (std::size_t i = 0; i < words; ++i) {
        if (i) out += (i % 12 == 0) ? ". " : " ";
        int n = len(rng);
        for (int j = 0; j < n; ++j) out += static_cast<char>(ch(rng));
        if (i % 7 == 0) out += std::to_string(rng() % 1000);
    }
    return out;
}

std::string cjk_text(std::size_t chars, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> cp(0x4E00, 0x51FF);
    std::string out;
    for (std::size_t i = 0; i < chars; ++i) {
        char32_t c = static_cast<char32_t>(cp(rng));
        out += static_cast<char>(0xE0 | (c >> 12));
        out += static_cast<char>(0x80 | ((c >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (c & 0x3F));
    }
    return out;
}

void BM_AnalyzeLatin(benchmark::State& state) {
    std::string text = latin_text(static_cast<std::size_t>(state.range(0)), 7);
    LangCode en = LangCode::parse("en");
    for (auto _ : state) benchmark::DoNotOptimize(analyze(text, en));
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}

void BM_AnalyzeCjk(benchmark::State& state) {
    std::string text = cjk_text(static_cast<std::size_t>(state.range(0)), 7);
    LangCode zh = LangCode::parse("zh");
    for (auto _ : state) benchmark::DoNotOptimize(analyze(text, zh));
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}

void BM_AnalyzeStemmed(benchmark::State& state) {
    std::string text = latin_text(static_cast<std::size_t>(state.range(0)), 7);
    LangCode en = LangCode::parse("en");
    AnalyzerOptions opts;
    opts.stem_english = true;
    for (auto _ : state) benchmark::DoNotOptimize(analyze(text, en, opts));
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}

BENCHMARK(BM_AnalyzeLatin)->Arg(64)->Arg(512)->Arg(4096);
BENCHMARK(BM_AnalyzeCjk)->Arg(64)->Arg(512)->Arg(4096);
BENCHMARK(BM_AnalyzeStemmed)->Arg(512);

}  // namespace
