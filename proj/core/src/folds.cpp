#include "drpl/folds.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "drpl/error.hpp"
#include "drpl/rng.hpp"

namespace drpl {

FoldPlan make_folds(std::size_t n, std::size_t K, std::uint64_t seed) {
  if (K < 3) throw InvalidArgument("make_folds: K must be at least 3, got " + std::to_string(K));
  if (n < K) throw InvalidArgument("make_folds: n must be at least K");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(derive_seed(seed, {0x666f6c64}));
  // Fisher-Yates with an explicit draw so the order does not depend on the
  // standard library's shuffle implementation.
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(perm[i - 1], perm[j]);
  }
  FoldPlan plan;
  plan.K = K;
  plan.assignment.assign(n, 0);
  plan.rows.assign(K, {});
  for (std::size_t r = 0; r < n; ++r) plan.assignment[perm[r]] = r % K;
  for (std::size_t i = 0; i < n; ++i) plan.rows[plan.assignment[i]].push_back(i);
  return plan;
}

}  // namespace drpl
