#include <benchmark/benchmark.h>

#include "drpl/bench.hpp"
#include "drpl/estimator.hpp"
#include "drpl/propensity.hpp"

using namespace drpl;

static void BM_PropensityForest(benchmark::State& state) {
  const auto data = simulate_linear_boundary(static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(PropensityModel::fit(data, {}, 4));
}
BENCHMARK(BM_PropensityForest)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

static void BM_EstimateRings(benchmark::State& state) {
  const auto data = simulate_linear_boundary(static_cast<std::size_t>(state.range(0)), 5);
  for (auto _ : state) benchmark::DoNotOptimize(estimate_policy_value(data, target_policy_rings, RadiusDelta(0.1)));
}
BENCHMARK(BM_EstimateRings)->Arg(2000)->Arg(8000)->Unit(benchmark::kMillisecond);
