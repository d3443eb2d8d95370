#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "drpl/dual.hpp"

using namespace drpl;

static void BM_SolveDual(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z;
  std::vector<double> ys(static_cast<std::size_t>(state.range(0)));
  for (auto& y : ys) y = z(rng);
  for (auto _ : state) benchmark::DoNotOptimize(solve_dual(ys, {}, RadiusDelta(0.1)));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SolveDual)->RangeMultiplier(10)->Range(100, 100000)->Unit(benchmark::kMillisecond);

static void BM_LossGrad(benchmark::State& state) {
  double y = 0.3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(loss_grad(y, {0.7, -0.2}, RadiusDelta(0.1)));
    y += 1e-9;
  }
}
BENCHMARK(BM_LossGrad);
