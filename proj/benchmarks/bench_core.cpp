#include <benchmark/benchmark.h>

#include <poac/autodiff.hpp>
#include <poac/optim.hpp>
#include <poac/rng.hpp>

using namespace poac;

static void BM_MatmulForward(benchmark::State& state) {
    const size_t n = static_cast<size_t>(state.range(0));
    Rng rng(1);
    auto a = ad::constant(Tensor::randn({n, n}, rng));
    auto b = ad::constant(Tensor::randn({n, n}, rng));
    for (auto _ : state) {
        benchmark::DoNotOptimize(ad::matmul(a, b)->value.at(0));
    }
}
BENCHMARK(BM_MatmulForward)->Arg(32)->Arg(64)->Arg(128);

static void BM_MatmulBackward(benchmark::State& state) {
    const size_t n = static_cast<size_t>(state.range(0));
    Rng rng(1);
    auto a = ad::leaf(Tensor::randn({n, n}, rng), "a");
    auto b = ad::leaf(Tensor::randn({n, n}, rng), "b");
    for (auto _ : state) {
        auto root = ad::sum(ad::matmul(a, b));
        ad::backward(root);
        ad::zero_grad(root);
    }
}
BENCHMARK(BM_MatmulBackward)->Arg(32)->Arg(64);

static void BM_SoftmaxRows(benchmark::State& state) {
    Rng rng(1);
    auto x = ad::constant(Tensor::randn({64, 256}, rng));
    for (auto _ : state) {
        benchmark::DoNotOptimize(ad::softmax(x)->value.at(0));
    }
}
BENCHMARK(BM_SoftmaxRows);

BENCHMARK_MAIN();
