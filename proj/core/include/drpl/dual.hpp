#pragma once

#include <span>
#include <vector>

#include "drpl/error.hpp"

namespace drpl {

inline constexpr double kDefaultAlphaFloor = 1e-3;

/// Radius of the KL ball, in nats.
class RadiusDelta {
 public:
  RadiusDelta() = default;
  explicit RadiusDelta(double delta);
  double value() const { return delta_; }

 private:
  double delta_ = 0.0;
};

/// Dual variables theta = (alpha, eta) of the KL worst-case problem.
struct DualParams {
  double alpha = 1.0;
  double eta = 0.0;
};

/// Finite-support law used by the brute-force primal oracle.
struct DiscreteDist {
  std::vector<double> values;
  std::vector<double> probs;

  /// Throws InvalidArgument unless lengths match, values are finite and probs
  /// are non-negative and sum to one within 1e-12.
  void validate() const;
};

struct LossGradient {
  double d_alpha = 0.0;
  double d_eta = 0.0;
};

/// Dual loss  alpha * exp(-(y + eta)/alpha - 1) + eta + alpha * delta.
/// Its conditional expectation, minimized over theta, is minus the worst-case
/// conditional mean over the KL ball. Returns +inf if the exponential overflows.
double loss(double y, DualParams theta, RadiusDelta delta);

/// Analytic partial derivatives of `loss` in alpha and eta.
LossGradient loss_grad(double y, DualParams theta, RadiusDelta delta);

struct SolverConfig {
  double alpha_floor = kDefaultAlphaFloor;
  int restarts = 5;
  int max_iterations = 2000;
  double x_tolerance = 1e-9;
  /// Golden-section steps (x4) on the profiled objective after the restarts.
  int polish_iterations = 50;
};

struct DualSolution {
  DualParams theta;
  /// Minimum of the weighted mean loss; the worst-case mean is -value.
  double value = 0.0;
  bool converged = false;
  int restarts_run = 0;
  int iterations = 0;
};

/// Thrown when no restart converges; carries the best iterate found.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, DualSolution best) : Error(what), best_(best) {}
  const DualSolution& best() const { return best_; }

 private:
  DualSolution best_;
};

/// Minimizes the weighted empirical mean of `loss` over
/// alpha >= alpha_floor, |eta| <= 2 (max|y| + 1) with restarted Nelder-Mead.
/// Empty `weights` means uniform. At delta = 0 the infimum is approached as
/// alpha -> inf; the exact limit -mean(y) is returned with a large finite alpha.
DualSolution solve_dual(std::span<const double> ys, std::span<const double> weights, RadiusDelta delta,
                        const SolverConfig& cfg = {});

/// Weighted mean loss of the sample at theta (the dual objective).
double dual_objective(std::span<const double> ys, std::span<const double> weights, DualParams theta,
                      RadiusDelta delta);

/// Exact inf of E_Q[Y] over KL(Q || P) <= delta for finite-support P, found by
/// bisection on the exponential tilt Q ~ P exp(-y / t).
double worst_case_mean_discrete(const DiscreteDist& dist, RadiusDelta delta);

/// Binary KL divergence D(p || q) in nats.
double binary_kl(double p, double q);

/// g_delta(q) = inf{p : D(p || q) <= delta}: the worst-case mean of Bern(q).
double bernoulli_worst_mean(double q, RadiusDelta delta);

/// Worst-case mean of N(mu, sigma^2) over a KL ball: mu - sigma * sqrt(2 delta).
double gaussian_worst_mean(double mu, double sigma, RadiusDelta delta);

}  // namespace drpl
