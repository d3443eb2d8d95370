#pragma once

#include <vector>

#include "drpl/estimator.hpp"
#include "drpl/policy_tree.hpp"
#include "drpl/tree_search.hpp"

namespace drpl {

struct FoldNuisances {
  PropensityModel propensity;
  /// Indexed by action: theta_a fit on fold k+1, g_a fit on fold k+2.
  std::vector<DualFieldModel> fields;
  std::vector<RegressionModel> regressions;
};

/// Per-fold, per-action nuisances of the policy-learning algorithm.
struct NuisanceBundle {
  FoldPlan folds;
  double delta = 0.0;
  std::vector<FoldNuisances> per_fold;
};

struct LearnerConfig {
  EstimatorConfig estimator{};
  int depth = 2;
  /// If > 0, this fraction of rows is held out and the learned tree is
  /// re-estimated on it; otherwise the report is in-sample.
  double eval_fraction = 0.0;
};

struct LearnResult {
  PolicyTree tree;
  /// Objective value of the tree on the score matrix it was searched on.
  double search_value = 0.0;
  RobustValueReport report;
};

/// Fits K x (1 + 2M) nuisances. Seeds depend on (seed, fold, role) only, so
/// the cells for action a coincide with estimate_policy_value for the
/// constant policy a. Throws InsufficientSamples naming the fold and action.
NuisanceBundle fit_per_action_nuisances(const Dataset& data, RadiusDelta delta, const EstimatorConfig& cfg = {});

/// S[i][a] = -w_i [1{A_i = a} / pi0(a|X_i) (G_a - g_a) + g_a] with fold
/// weight w_i = n / (K |fold(i)|), so (1/n) sum_i S[i][pi(X_i)] is exactly
/// minus the mean of the per-fold estimates for every policy pi.
ScoreMatrix build_score_matrix(const Dataset& data, const NuisanceBundle& bundle);

/// Cross-fitted estimate of `policy` using the bundle's per-action nuisances.
RobustValueReport evaluate_with_bundle(const Dataset& data, const NuisanceBundle& bundle, const Policy& policy);

/// Nuisances -> scores -> exact tree search.
LearnResult learn(const Dataset& data, RadiusDelta delta, const LearnerConfig& cfg = {});

}  // namespace drpl
