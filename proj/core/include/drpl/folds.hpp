#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace drpl {

/// Random partition of row indices into K folds of near-equal size. Fold
/// roles follow the cyclic convention fold(k + 1), fold(k + 2) taken mod K.
struct FoldPlan {
  std::size_t K = 3;
  std::vector<std::size_t> assignment;        // row -> fold
  std::vector<std::vector<std::size_t>> rows;  // fold -> sorted rows

  std::size_t n() const { return assignment.size(); }
  std::size_t next(std::size_t k, std::size_t offset) const { return (k + offset) % K; }
};

/// Deterministic under seed. Throws InvalidArgument if K < 3 or n < K.
FoldPlan make_folds(std::size_t n, std::size_t K, std::uint64_t seed);

}  // namespace drpl
