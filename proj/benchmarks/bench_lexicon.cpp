#include "affectreg/lexicon.hpp"
#include "affectreg/rng.hpp"

#include <benchmark/benchmark.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace affectreg;

namespace {

// Synthetic lexicons of realistic size, written once to a scratch dir.
const LexiconSet& synthetic_lexicons() {
    static const LexiconSet lex = [] {
        namespace fs = std::filesystem;
        const auto dir = fs::temp_directory_path() / "affectreg_bench_lex";
        fs::create_directories(dir);
        Rng rng(1);

        std::ostringstream nrc;
        for (int i = 0; i < 14000; ++i) {
            const std::string word = "w" + std::to_string(i);
            nrc << word << "\tsadness\t" << (i % 3 == 0) << "\n";
            nrc << word << "\tpositive\t" << (i % 5 == 0) << "\n";
        }
        std::ostringstream mpqa;
        for (int i = 0; i < 6800; ++i) {
            mpqa << "type=" << (i % 2 ? "strongsubj" : "weaksubj") << " len=1 word1=w"
                 << std::to_string(i * 2) << " pos1=adj stemmed1=n priorpolarity="
                 << (i % 3 ? "negative" : "positive") << "\n";
        }
        std::ostringstream vad;
        for (int i = 0; i < 19000; ++i) {
            vad << "w" << std::to_string(i) << "\t" << rng.uniform() << "\t" << rng.uniform()
                << "\t" << rng.uniform() << "\n";
        }
        std::ostringstream shifters;
        for (int i = 0; i < 10000; ++i) {
            shifters << "w" << std::to_string(i * 3) << (i % 4 ? "\tshifter" : "\tnonshifter")
                     << "\n";
        }
        auto write = [&](const char* name, const std::string& body) {
            std::ofstream out(dir / name);
            out << body;
            return (dir / name).string();
        };
        return LexiconSet::load(write("nrc.txt", nrc.str()), write("mpqa.tff", mpqa.str()),
                                write("vad.txt", vad.str()), write("shift.txt", shifters.str()));
    }();
    return lex;
}

std::string random_essay(std::size_t words, std::uint64_t seed) {
    Rng rng(seed);
    std::string text;
    for (std::size_t i = 0; i < words; ++i) {
        if (!text.empty()) text += ' ';
        text += "w" + std::to_string(rng.index(20000));
    }
    return text;
}

} // namespace

static void BM_extract_all(benchmark::State& state) {
    const auto& lex = synthetic_lexicons();
    const auto essay = random_essay(static_cast<std::size_t>(state.range(0)), 11);
    for (auto _ : state) {
        auto v = extract_all(essay, lex);
        benchmark::DoNotOptimize(v);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_extract_all)->Arg(80)->Arg(400);

static void BM_tokenize(benchmark::State& state) {
    const auto essay = random_essay(300, 13);
    for (auto _ : state) {
        auto tokens = tokenize(essay);
        benchmark::DoNotOptimize(tokens);
    }
}
BENCHMARK(BM_tokenize);
