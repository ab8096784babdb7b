#include "affectreg/rng.hpp"
#include "affectreg/svr.hpp"

#include <benchmark/benchmark.h>

using namespace affectreg;

static void BM_svr_fit(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(7);
    Matrix X(n, 8);
    for (double& v : X.data) v = rng.symmetric();
    std::vector<double> y(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < 8; ++j) dot += X.at(i, j);
        y[i] = 4.0 + dot / 4.0 + 0.1 * rng.symmetric();
        w[i] = sample_weight(std::clamp(y[i], 1.0, 7.0), 4.0);
    }
    SvrConfig config;
    config.kernel = state.range(1) ? KernelKind::poly3 : KernelKind::rbf;
    for (auto _ : state) {
        auto model = fit_svr(config, X, y, w);
        benchmark::DoNotOptimize(model);
    }
}
BENCHMARK(BM_svr_fit)->Args({100, 0})->Args({100, 1})->Args({400, 0});

static void BM_svr_predict(benchmark::State& state) {
    Rng rng(9);
    Matrix X(200, 8);
    for (double& v : X.data) v = rng.symmetric();
    std::vector<double> y(200), w(200, 1.0);
    for (double& v : y) v = rng.uniform(1.0, 7.0);
    SvrConfig config;
    auto model = fit_svr(config, X, y, w);
    std::vector<double> probe(8, 0.25);
    for (auto _ : state) {
        benchmark::DoNotOptimize(predict(model, probe));
    }
}
BENCHMARK(BM_svr_predict);
