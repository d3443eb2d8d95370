#pragma once

#include <span>

#include "drpl/dataset.hpp"
#include "drpl/dual.hpp"
#include "drpl/estimator.hpp"
#include "drpl/policy_tree.hpp"

namespace drpl {

struct JointDualValue {
  double alpha_star = 0.0;
  double value = 0.0;
};

/// Worst-case mean over a KL ball on the joint law:
/// max over alpha >= alpha_floor of -alpha log(E_w[e^{-y/alpha}]) - alpha delta,
/// with self-normalized weights (empty means uniform). Golden-section search
/// on log alpha over [log alpha_floor, log(10 range(y) + 1)]; delta = 0
/// returns the weighted mean.
JointDualValue joint_dro_value(std::span<const double> ys, std::span<const double> weights, RadiusDelta delta,
                               double alpha_floor = kDefaultAlphaFloor);

struct BaselineConfig {
  /// Folds and propensity learner for the cross-fitted IPW weights.
  std::size_t K = 3;
  std::uint64_t seed = 0;
  PropensityConfig propensity{};
  double alpha_floor = kDefaultAlphaFloor;
  /// Log-spaced alpha values scanned by the tree search.
  int alpha_grid = 20;
  int max_ratio_iterations = 30;
};

struct BaselineResult {
  PolicyTree tree;
  /// joint_dro_value of the tree's self-normalized on-policy rewards.
  JointDualValue value;
};

/// Joint-shift comparator: maximizes joint_dro_value of IPW-weighted on-policy
/// rewards over depth-limited trees. For each alpha on a grid the inner
/// problem is a ratio of additive scores and is solved exactly by Dinkelbach
/// iterations over the exact tree search; each candidate is then rescored with
/// the continuous alpha optimum and the best is returned.
BaselineResult learn_joint_dro(const Dataset& data, RadiusDelta delta, int depth, const BaselineConfig& cfg = {});

/// Evaluates the baseline objective for a fixed policy with the same weights.
JointDualValue joint_dro_policy_value(const Dataset& data, std::span<const double> weights, const Policy& policy,
                                      RadiusDelta delta, double alpha_floor = kDefaultAlphaFloor);

/// Cross-fitted inverse propensities 1 / pi0(A_i | X_i) (fold k predicted by a
/// model fit on the remaining folds).
std::vector<double> cross_fitted_ipw_weights(const Dataset& data, const BaselineConfig& cfg);

}  // namespace drpl
