#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "drpl/basis.hpp"
#include "drpl/dataset.hpp"
#include "drpl/dual.hpp"
#include "drpl/dual_field.hpp"
#include "drpl/folds.hpp"
#include "drpl/propensity.hpp"
#include "drpl/regression.hpp"

namespace drpl {

/// Builds the sieve basis from the covariates of the rows a field is fit on.
using BasisFactory = std::function<BasisSpec(std::span<const double> x, std::size_t dim)>;

struct EstimatorConfig {
  std::size_t K = 3;
  std::uint64_t seed = 0;
  PropensityConfig propensity{};
  RegressionConfig regression{};
  DualFieldConfig field{};
  /// Defaults to BasisSpec::default_for.
  BasisFactory basis;
  /// Replaces the fitted propensity in every fold (e.g. the true logging policy).
  std::optional<PropensityModel> propensity_override;
  /// Replaces every fitted regression by the zero function.
  bool zero_regression = false;
  /// Upper clip applied to classifier-estimated density ratios.
  double ratio_cap = 20.0;
};

struct ReportDiagnostics {
  /// Fraction of evaluated rows whose raw propensity was raised to the floor.
  double clip_rate = 0.0;
  /// Mean fraction of field-training rows with the alpha floor active.
  double floor_fraction = 0.0;
  std::size_t field_samples_min = 0;
  std::size_t ratio_clipped = 0;
  bool in_sample = false;
  std::vector<std::string> warnings;
};

struct RobustValueReport {
  double estimate = 0.0;
  std::vector<double> per_fold;
  double std_error = 0.0;
  std::size_t n = 0;
  double delta = 0.0;
  ReportDiagnostics diagnostics;
  /// Per-row summands r * 1{A = pi(X)} / pi0 * (G - g) + g (source rows).
  std::vector<double> summands;
};

/// Cross-fitted doubly-robust estimate of the KL-robust value of `policy`.
RobustValueReport estimate_policy_value(const Dataset& data, const Policy& policy, RadiusDelta delta,
                                        const EstimatorConfig& cfg = {});

/// Same estimator on a grid of radii; folds, propensities and seeds are shared
/// across the grid so only the delta-dependent nuisances change.
std::vector<RobustValueReport> estimate_policy_value_sweep(const Dataset& data, const Policy& policy,
                                                           std::span<const double> deltas,
                                                           const EstimatorConfig& cfg = {});

/// Covariate-shift variant: the IPW term is reweighted by r(x) = dQ_X/dP_X
/// and the regression term is averaged over target covariates. Without
/// `ratio`, r is estimated per fold by a logistic discriminator on
/// [x, x^2] features and clipped at cfg.ratio_cap.
RobustValueReport estimate_policy_value_with_covariate_shift(const Dataset& data,
                                                             std::span<const double> target_x,
                                                             const Policy& policy, RadiusDelta delta,
                                                             const EstimatorConfig& cfg = {},
                                                             std::function<double(Covariate)> ratio = {});

/// Plain cross-fitted AIPW estimate of E[Y(pi(X))] with the same folds,
/// propensities and regression learner (Y in place of G).
RobustValueReport estimate_policy_value_aipw(const Dataset& data, const Policy& policy,
                                             const EstimatorConfig& cfg = {});

}  // namespace drpl
