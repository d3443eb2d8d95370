#pragma once

#include <functional>
#include <span>
#include <vector>

namespace drpl {

struct NelderMeadOptions {
  int max_iterations = 2000;
  /// Converged once every vertex lies within this inf-norm distance of the best one.
  double x_tolerance = 1e-9;
  /// Dimension-dependent coefficients (Gao & Han); better behaved above ~5 parameters.
  bool adaptive = false;
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

using Objective = std::function<double(std::span<const double>)>;

/// Unconstrained Nelder-Mead simplex search. The initial simplex is `start`
/// plus one vertex per coordinate displaced by `step[j]`. Non-finite objective
/// values are treated as +inf.
NelderMeadResult nelder_mead(const Objective& f, std::span<const double> start, std::span<const double> step,
                             const NelderMeadOptions& options = {});

}  // namespace drpl
