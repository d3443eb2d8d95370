#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "drpl/dataset.hpp"
#include "drpl/dual.hpp"
#include "drpl/dual_field.hpp"
#include "drpl/estimator.hpp"

namespace drpl {

// ---- Linear-boundary Gaussian design (X uniform on the unit 5-ball) ----

inline constexpr std::size_t kLinearBoundaryDim = 5;
inline constexpr std::size_t kLinearBoundaryActions = 3;
extern const std::array<std::array<double, 5>, 3> kLinearBoundaryBeta;
extern const std::array<double, 3> kLinearBoundarySigma;

/// argmax_a beta_a' x (0-based, lowest index on ties).
int linear_boundary_region(Covariate x);

/// Logging policy: 0.5 on the region action, 0.25 on each other action.
double linear_boundary_propensity(Covariate x, int action);

/// n logged rows (X, A, Y(A)). Deterministic under seed.
Dataset simulate_linear_boundary(std::size_t n, std::uint64_t seed);

/// n rows with all potential outcomes and each arm's (mu, sigma). The same
/// seed yields the same covariates and outcomes as simulate_linear_boundary.
PotentialOutcomeTable simulate_linear_boundary_outcomes(std::size_t n, std::uint64_t seed);

/// Ring policy: action 0 if |x| <= 1/3, 1 if |x| <= 2/3, else 2. Throws
/// InvalidArgument if |x| > 1.
int target_policy_rings(Covariate x);

/// Monte Carlo value of E_X[mu_pi(X) - sigma_pi(X) sqrt(2 delta)], the robust
/// value of `policy` under the Gaussian design.
double linear_boundary_robust_value(const Policy& policy, RadiusDelta delta, std::size_t samples,
                                    std::uint64_t seed);

// ---- Evaluation metrics ----

struct EmpiricalValueConfig {
  DualFieldConfig field{};
  /// Defaults to BasisSpec::default_for on the test covariates.
  BasisFactory basis;
};

/// -(1/n) sum_i loss(Y_i(pi(X_i)), theta(X_i)) with theta fit by sieve ERM on
/// the test set's chosen-action outcomes.
double empirical_robust_value(const PotentialOutcomeTable& test, const Policy& policy, RadiusDelta delta,
                              const EmpiricalValueConfig& cfg = {});

/// Moves every arm's Normal law to KL distance delta (mean shift of
/// sigma sqrt(2 delta) with an independent random sign) and redraws outcomes.
/// Throws InvalidArgument without (mu, sigma) metadata.
PotentialOutcomeTable kl_sphere_perturb(const PotentialOutcomeTable& test, RadiusDelta delta, std::uint64_t seed);

/// min over sets of the mean realized reward of `policy`.
double v_min_metric(const Policy& policy, std::span<const PotentialOutcomeTable> sets);

// ---- Bernoulli designs ----

struct BernoulliDesign {
  std::size_t dim = 3;
  std::size_t num_actions = 3;
  /// Success probability of every arm at every x.
  double q = 0.5;
  /// If set, the logging policy prefers action floor(M x_1) with probability
  /// 0.6; otherwise actions are uniform.
  bool nonuniform_logging = false;
};

/// X uniform on [0,1]^dim, Y(a) ~ Bern(q) independently of x and a.
Dataset simulate_bernoulli_constant(std::size_t n, std::uint64_t seed, const BernoulliDesign& design = {});
double bernoulli_design_propensity(const BernoulliDesign& design, Covariate x, int action);

// ---- Lower-bound hard instances ----

struct HardInstanceConfig {
  std::size_t support = 4;   // d support points x_j = j (scalar covariate)
  double big_delta = 0.05;   // Delta in (0, 0.1)
  double epsilon = 0.2;      // mass on the two competing arms
  std::uint64_t sigma_seed = 0;
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  double y_bar = 1.0;
  std::size_t num_actions = 3;
  double delta = 0.1;        // KL radius used for the metadata
};

struct HardInstance {
  Dataset data;
  std::vector<int> sigma;  // +1 or -1 per support point
  Policy optimal_policy;
  double optimal_value = 0.0;
  /// Exact robust value V(pi) = (1/d) sum_j y_bar g_delta(q_{pi(x_j)}(x_j)).
  std::function<double(const Policy&)> robust_value;
  /// V(optimal) - V(pi).
  std::function<double(const Policy&)> regret;
};

/// Arms 0 and 1 play f_1 and f_{-1}: Y(0) ~ y_bar Bern((1 + s_j Delta)/2),
/// Y(1) ~ y_bar Bern((1 - s_j Delta)/2), other arms y_bar Bern(1/4); the
/// logging policy puts epsilon/2 on arms 0 and 1.
HardInstance hard_instance_generator(const HardInstanceConfig& cfg);

}  // namespace drpl
