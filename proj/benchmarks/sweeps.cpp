#include "bmtf/mtf.hpp"
#include "bmtf/random.hpp"
#include "bmtf/rmtf.hpp"
#include "bmtf/simulate.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace bmtf;

// CP collection with N samples and the default 50 x 30 tensor.
Collection cp_collection(Index n) {
    SimSpec spec;
    spec.N = n;
    return simulate(spec).train;
}

HyperParams hp_for(Index k) {
    HyperParams hp;
    hp.K = k;
    return hp;
}

void BM_MtfSweep(benchmark::State& state) {
    const Collection c = cp_collection(state.range(0));
    MtfSampler sampler(c, hp_for(state.range(1)));
    RngStream rng(1);
    sampler.set_state(sampler.init_state(rng));
    for (auto _ : state) sampler.sweep(rng);
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_MtfSweep)->Args({100, 15})->Args({300, 15})->Args({300, 30})->Unit(benchmark::kMillisecond);

void BM_RmtfSweep(benchmark::State& state) {
    const Collection c = cp_collection(state.range(0));
    RmtfSampler sampler(c, hp_for(state.range(1)));
    RngStream rng(2);
    sampler.set_state(sampler.init_state(rng));
    for (auto _ : state) sampler.sweep(rng);
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_RmtfSweep)->Args({100, 15})->Args({300, 15})->Unit(benchmark::kMillisecond);

void BM_GaussianDrawRows(benchmark::State& state) {
    const Index k = state.range(0);
    RngStream rng(3);
    const Matrix a = rng.normal_matrix(2 * k, k);
    const GaussianPrecision g(a.transpose() * a + Matrix::Identity(k, k));
    const Matrix h = rng.normal_matrix(300, k);
    for (auto _ : state) benchmark::DoNotOptimize(g.draw_rows(h, rng));
}
BENCHMARK(BM_GaussianDrawRows)->Arg(5)->Arg(15)->Arg(30);

}  // namespace
BENCHMARK_MAIN();
