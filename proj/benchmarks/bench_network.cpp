#include "affectreg/ffn.hpp"
#include "affectreg/rng.hpp"

#include <benchmark/benchmark.h>

using namespace affectreg;

namespace {

Matrix random_batch(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(rows, cols);
    for (double& v : m.data) v = rng.symmetric();
    return m;
}

FfnModel paper_net(std::size_t input_dim) {
    DropoutSpec dropout;
    dropout.p = 0.5;
    return make_ffn(input_dim, {256, 128}, Activation::gelu, dropout, 1);
}

} // namespace

static void BM_forward_inference(benchmark::State& state) {
    const auto input_dim = static_cast<std::size_t>(state.range(0));
    auto model = paper_net(input_dim);
    auto batch = random_batch(64, input_dim, 2);
    for (auto _ : state) {
        auto out = forward(model, batch, false, nullptr, nullptr);
        benchmark::DoNotOptimize(out);
    }
    state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_forward_inference)->Arg(384)->Arg(1584);

static void BM_train_step(benchmark::State& state) {
    const auto input_dim = static_cast<std::size_t>(state.range(0));
    auto model = paper_net(input_dim);
    auto batch = random_batch(64, input_dim, 3);
    Rng rng(4);
    std::vector<double> gold(64);
    for (double& g : gold) g = rng.uniform(1.0, 7.0);

    std::vector<std::size_t> sizes;
    for (const auto& layer : model.layers) {
        sizes.push_back(layer.weights.size());
        sizes.push_back(layer.bias.size());
    }
    AdamW opt({}, sizes);
    for (auto _ : state) {
        ForwardCache cache;
        forward(model, batch, true, &rng, &cache);
        auto grads = backward(model, cache, gold);
        opt.begin_step();
        for (std::size_t l = 0; l < model.layers.size(); ++l) {
            opt.step(2 * l, model.layers[l].weights, grads.layers[l].weights, 1e-4);
            opt.step(2 * l + 1, model.layers[l].bias, grads.layers[l].bias, 1e-4);
        }
    }
    state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_train_step)->Arg(384)->Arg(1584);

static void BM_gelu(benchmark::State& state) {
    Rng rng(5);
    std::vector<double> xs(4096);
    for (double& x : xs) x = rng.uniform(-4.0, 4.0);
    for (auto _ : state) {
        double sum = 0.0;
        for (double x : xs) sum += gelu(x);
        benchmark::DoNotOptimize(sum);
    }
    state.SetItemsProcessed(state.iterations() * xs.size());
}
BENCHMARK(BM_gelu);

BENCHMARK_MAIN();
