#pragma once

#include <optional>
#include <vector>

#include "drpl/estimator.hpp"

namespace drpl::detail {

enum SeedRole : std::uint64_t { kRolePropensity = 1, kRoleField = 2, kRoleRegression = 3, kRoleRatio = 4 };

/// Target of the outcome nuisances: the dual loss G, or -Y for plain AIPW.
enum class OutcomeTarget { DualLoss, NegatedOutcome };

struct OutcomeNuisance {
  OutcomeTarget target = OutcomeTarget::DualLoss;
  std::optional<DualFieldModel> field;
  RegressionModel g;

  double big_g(Covariate x, double y, RadiusDelta delta) const {
    return target == OutcomeTarget::DualLoss ? g_hat_target(x, y, *field, delta) : -y;
  }
};

PropensityModel fit_fold_propensity(const Dataset& data, const FoldPlan& plan, std::size_t k,
                                    const EstimatorConfig& cfg);

/// Field on fold k+1 and regression on fold k+2, both restricted to rows with
/// A == selector(X). Errors name the fold (1-based).
OutcomeNuisance fit_fold_outcome(const Dataset& data, const FoldPlan& plan, std::size_t k, const Policy& selector,
                                 RadiusDelta delta, const EstimatorConfig& cfg, OutcomeTarget target);

double sample_sd(const std::vector<double>& v);

}  // namespace drpl::detail
