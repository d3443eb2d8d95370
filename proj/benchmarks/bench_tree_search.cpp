#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "drpl/tree_search.hpp"

using namespace drpl;

static void BM_TreeSearch(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const int depth = static_cast<int>(state.range(1));
  constexpr std::size_t dim = 5, actions = 3;
  std::mt19937_64 rng(2);
  std::normal_distribution<double> z;
  ScoreMatrix s{n, actions, std::vector<double>(n * actions)};
  std::vector<double> x(n * dim);
  for (auto& v : s.values) v = z(rng);
  for (auto& v : x) v = z(rng);
  for (auto _ : state) benchmark::DoNotOptimize(search_policy_tree(s, x, dim, depth));
}
BENCHMARK(BM_TreeSearch)
    ->Args({1000, 1})
    ->Args({10000, 1})
    ->Args({500, 2})
    ->Args({2000, 2})
    ->Unit(benchmark::kMillisecond);
