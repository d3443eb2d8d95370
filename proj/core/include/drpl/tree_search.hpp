#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "drpl/policy_tree.hpp"

namespace drpl {

/// n x M reward scores; row i, column a is the estimated reward of action a
/// for unit i.
struct ScoreMatrix {
  std::size_t n = 0;
  std::size_t num_actions = 0;
  std::vector<double> values;

  double at(std::size_t i, std::size_t a) const { return values[i * num_actions + a]; }
  double& at(std::size_t i, std::size_t a) { return values[i * num_actions + a]; }
  /// (1/n) sum_i S[i][tree(X_i)], summed in row order.
  double policy_value(const PolicyTree& tree, std::span<const double> x, std::size_t dim) const;
};

struct TreeSearchResult {
  PolicyTree tree;
  double value = 0.0;
};

/// Exact maximizer of (1/n) sum_i S[i][tree(X_i)] over axis-aligned trees of
/// depth <= depth (0, 1 or 2), with thresholds at midpoints between
/// consecutive distinct covariate values of the node being split. A split is
/// kept only if it strictly improves on the shallower tree; remaining ties go
/// to the lower feature, then the lower threshold, then the lower action.
/// Throws InvalidArgument("unsupported depth") for depth > 2.
TreeSearchResult search_policy_tree(const ScoreMatrix& scores, std::span<const double> x, std::size_t dim,
                                    int depth);

}  // namespace drpl
