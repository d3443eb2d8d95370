#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "drpl/basis.hpp"
#include "drpl/dataset.hpp"
#include "drpl/dual.hpp"

namespace drpl {

enum class FieldOptimizer {
  /// Damped Newton on the coefficients followed by a Nelder-Mead polish.
  NewtonThenSimplex,
  /// Restarted Nelder-Mead over the coefficients only.
  Simplex,
};

struct DualFieldConfig {
  double alpha_floor = kDefaultAlphaFloor;
  std::size_t min_samples = 20;
  FieldOptimizer optimizer = FieldOptimizer::NewtonThenSimplex;
  int newton_iterations = 100;
  int simplex_restarts = 1;
  int simplex_iterations = 1000;
  /// Ridge penalty on the non-constant coefficients (0 disables it). Without
  /// it the unpenalized ERM over a 30+ term spline overfits a few hundred
  /// rows and drives alpha(x) to the floor in places, where G explodes.
  double ridge = 1e-2;
  /// Scale the ridge by 1 / sd(y) so the penalty is invariant to reward units.
  bool scale_ridge = true;
  SolverConfig scalar{};
};

struct DualFieldDiagnostics {
  std::size_t samples = 0;
  /// Restricted empirical risk at the returned coefficients.
  double risk = 0.0;
  /// Best-so-far risk after the warm start and after each optimizer stage.
  std::vector<double> risk_trace;
  int newton_iterations = 0;
  int simplex_evaluations = 0;
  /// Fraction of training rows where the alpha floor is active.
  double floor_fraction = 0.0;
};

/// theta(x) = (max(<coef_alpha, phi(x)>, alpha_floor), <coef_eta, phi(x)>).
struct DualFieldModel {
  BasisSpec basis;
  std::vector<double> coef_alpha;
  std::vector<double> coef_eta;
  double alpha_floor = kDefaultAlphaFloor;
  DualFieldDiagnostics diagnostics;
};

/// Sieve ERM of the dual loss over all rows of x (row-major m x dim) with
/// outcomes ys. At delta = 0 the infimum sits at alpha -> inf; the field then
/// uses a large constant alpha and a least-squares eta so that the loss equals
/// -y up to O(1/alpha). Throws InsufficientSamples below cfg.min_samples.
DualFieldModel fit_dual_field(std::span<const double> x, std::size_t dim, std::span<const double> ys,
                              RadiusDelta delta, const BasisSpec& basis, const DualFieldConfig& cfg = {});

/// ERM restricted to rows with A_i == selector(X_i).
DualFieldModel fit_dual_field(const Dataset& data, const Policy& selector, RadiusDelta delta, const BasisSpec& basis,
                              const DualFieldConfig& cfg = {});

DualParams eval_dual_field(const DualFieldModel& model, Covariate x);

/// G(x, y) = loss(y, theta(x), delta).
double g_hat_target(Covariate x, double y, const DualFieldModel& field, RadiusDelta delta);

}  // namespace drpl
