#include "drpl/bench.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "drpl/error.hpp"
#include "drpl/parallel.hpp"
#include "drpl/rng.hpp"

namespace drpl {

const std::array<std::array<double, 5>, 3> kLinearBoundaryBeta = {{
    {1.0, 0.0, 0.0, 0.0, 0.0},
    {-0.5, 0.86602540378443865, 0.0, 0.0, 0.0},
    {-0.5, -0.86602540378443865, 0.0, 0.0, 0.0},
}};
const std::array<double, 3> kLinearBoundarySigma = {0.2, 0.5, 0.8};

namespace {

double linear_mean(Covariate x, std::size_t a) {
  double m = 0.0;
  for (std::size_t j = 0; j < kLinearBoundaryDim; ++j) m += kLinearBoundaryBeta[a][j] * x[j];
  return m;
}

void draw_ball_point(Rng& rng, std::span<double> x) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (auto& v : x) {
      v = normal(rng);
      norm += v * v;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  const double r = std::pow(unif(rng), 1.0 / static_cast<double>(x.size()));
  for (auto& v : x) v *= r / norm;
}

int draw_action(Rng& rng, std::span<const double> probs) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  double acc = 0.0;
  for (std::size_t a = 0; a < probs.size(); ++a) {
    acc += probs[a];
    if (u < acc) return static_cast<int>(a);
  }
  return static_cast<int>(probs.size() - 1);
}

// Shared generator: covariates, logged action and every potential outcome.
void linear_boundary_rows(std::size_t n, std::uint64_t seed, PotentialOutcomeTable& table, std::vector<int>& actions) {
  constexpr std::size_t d = kLinearBoundaryDim, M = kLinearBoundaryActions;
  table = {};
  table.dim = d;
  table.num_actions = M;
  table.x.resize(n * d);
  table.outcomes.resize(n * M);
  table.mu.resize(n * M);
  table.sigma.resize(n * M);
  actions.resize(n);
  Rng rng(derive_seed(seed, {0x6c696e62}));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::array<double, M> probs{};
  for (std::size_t i = 0; i < n; ++i) {
    std::span<double> xi(table.x.data() + i * d, d);
    draw_ball_point(rng, xi);
    for (std::size_t a = 0; a < M; ++a) probs[a] = linear_boundary_propensity(xi, static_cast<int>(a));
    actions[i] = draw_action(rng, probs);
    for (std::size_t a = 0; a < M; ++a) {
      const double mu = linear_mean(xi, a), sd = kLinearBoundarySigma[a];
      table.mu[i * M + a] = mu;
      table.sigma[i * M + a] = sd;
      table.outcomes[i * M + a] = mu + sd * normal(rng);
    }
  }
}

}  // namespace

int linear_boundary_region(Covariate x) {
  if (x.size() != kLinearBoundaryDim) throw InvalidArgument("linear boundary design: covariate must have 5 entries");
  int best = 0;
  double bv = linear_mean(x, 0);
  for (std::size_t a = 1; a < kLinearBoundaryActions; ++a) {
    const double v = linear_mean(x, a);
    if (v > bv) {
      bv = v;
      best = static_cast<int>(a);
    }
  }
  return best;
}

double linear_boundary_propensity(Covariate x, int action) {
  if (action < 0 || static_cast<std::size_t>(action) >= kLinearBoundaryActions)
    throw InvalidArgument("linear boundary design: action out of range");
  return linear_boundary_region(x) == action ? 0.5 : 0.25;
}

Dataset simulate_linear_boundary(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw InvalidArgument("simulate: n must be positive");
  PotentialOutcomeTable t;
  std::vector<int> actions;
  linear_boundary_rows(n, seed, t, actions);
  Dataset d;
  d.dim = t.dim;
  d.num_actions = t.num_actions;
  d.x = std::move(t.x);
  d.actions = std::move(actions);
  d.rewards.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    d.rewards[i] = t.outcomes[i * kLinearBoundaryActions + static_cast<std::size_t>(d.actions[i])];
  return d;
}

PotentialOutcomeTable simulate_linear_boundary_outcomes(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw InvalidArgument("simulate: n must be positive");
  PotentialOutcomeTable t;
  std::vector<int> actions;
  linear_boundary_rows(n, seed, t, actions);
  return t;
}

int target_policy_rings(Covariate x) {
  double r2 = 0.0;
  for (double v : x) r2 += v * v;
  const double r = std::sqrt(r2);
  if (!(r <= 1.0 + 1e-12)) throw InvalidArgument("target_policy_rings: covariate outside the unit ball");
  if (r <= 1.0 / 3.0) return 0;
  if (r <= 2.0 / 3.0) return 1;
  return 2;
}

double linear_boundary_robust_value(const Policy& policy, RadiusDelta delta, std::size_t samples,
                                    std::uint64_t seed) {
  if (samples == 0) throw InvalidArgument("linear_boundary_robust_value: samples must be positive");
  Rng rng(derive_seed(seed, {0x74727574}));
  std::array<double, kLinearBoundaryDim> x{};
  double acc = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    draw_ball_point(rng, x);
    const int a = policy(x);
    acc += gaussian_worst_mean(linear_mean(x, static_cast<std::size_t>(a)), kLinearBoundarySigma[static_cast<std::size_t>(a)], delta);
  }
  return acc / static_cast<double>(samples);
}

double empirical_robust_value(const PotentialOutcomeTable& test, const Policy& policy, RadiusDelta delta,
                              const EmpiricalValueConfig& cfg) {
  test.validate();
  if (test.empty()) throw InvalidArgument("empirical_robust_value: empty test set");
  const auto y = test.chosen_outcomes(policy);
  if (delta.value() == 0.0) {
    double mean = 0.0;
    for (double v : y) mean += v;
    return mean / static_cast<double>(y.size());
  }
  const BasisSpec basis = cfg.basis ? cfg.basis(test.x, test.dim) : BasisSpec::default_for(test.x, test.dim);
  const auto field = fit_dual_field(test.x, test.dim, y, delta, basis, cfg.field);
  double acc = 0.0;
  for (std::size_t i = 0; i < test.size(); ++i) acc += g_hat_target(test.covariate(i), y[i], field, delta);
  return -acc / static_cast<double>(test.size());
}

PotentialOutcomeTable kl_sphere_perturb(const PotentialOutcomeTable& test, RadiusDelta delta, std::uint64_t seed) {
  test.validate();
  if (!test.has_metadata()) throw InvalidArgument("kl_sphere_perturb: test table lacks (mu, sigma) metadata");
  PotentialOutcomeTable out = test;
  Rng rng(derive_seed(seed, {0x6b6c7370}));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  const double r = std::sqrt(2.0 * delta.value());
  for (std::size_t k = 0; k < out.outcomes.size(); ++k) {
    const double sign = coin(rng) ? 1.0 : -1.0;
    out.mu[k] = test.mu[k] + sign * test.sigma[k] * r;
    out.outcomes[k] = out.mu[k] + test.sigma[k] * normal(rng);
  }
  return out;
}

double v_min_metric(const Policy& policy, std::span<const PotentialOutcomeTable> sets) {
  if (sets.empty()) throw InvalidArgument("v_min_metric: need at least one set");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : sets) {
    const auto y = s.chosen_outcomes(policy);
    if (y.empty()) throw InvalidArgument("v_min_metric: empty set");
    double acc = 0.0;
    for (double v : y) acc += v;
    best = std::min(best, acc / static_cast<double>(y.size()));
  }
  return best;
}

double bernoulli_design_propensity(const BernoulliDesign& design, Covariate x, int action) {
  const std::size_t M = design.num_actions;
  if (action < 0 || static_cast<std::size_t>(action) >= M) throw InvalidArgument("bernoulli design: action out of range");
  if (!design.nonuniform_logging || M == 1) return 1.0 / static_cast<double>(M);
  const auto pref = std::min(M - 1, static_cast<std::size_t>(std::max(0.0, x[0]) * static_cast<double>(M)));
  return static_cast<std::size_t>(action) == pref ? 0.6 : 0.4 / static_cast<double>(M - 1);
}

Dataset simulate_bernoulli_constant(std::size_t n, std::uint64_t seed, const BernoulliDesign& design) {
  if (n == 0 || design.dim == 0 || design.num_actions == 0) throw InvalidArgument("bernoulli design: empty shape");
  if (!(design.q >= 0.0 && design.q <= 1.0)) throw InvalidArgument("bernoulli design: q must lie in [0, 1]");
  Dataset d;
  d.dim = design.dim;
  d.num_actions = design.num_actions;
  d.x.resize(n * design.dim);
  d.actions.resize(n);
  d.rewards.resize(n);
  Rng rng(derive_seed(seed, {0x6265726e}));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> probs(design.num_actions);
  for (std::size_t i = 0; i < n; ++i) {
    std::span<double> xi(d.x.data() + i * design.dim, design.dim);
    for (auto& v : xi) v = unif(rng);
    for (std::size_t a = 0; a < design.num_actions; ++a) probs[a] = bernoulli_design_propensity(design, xi, static_cast<int>(a));
    d.actions[i] = draw_action(rng, probs);
    d.rewards[i] = unif(rng) < design.q ? 1.0 : 0.0;
  }
  return d;
}

HardInstance hard_instance_generator(const HardInstanceConfig& cfg) {
  if (cfg.support == 0) throw InvalidArgument("hard instance: support must be positive");
  if (!(cfg.big_delta >= 0.0 && cfg.big_delta < 0.1)) throw InvalidArgument("hard instance: Delta must lie in [0, 0.1)");
  if (!(cfg.epsilon > 0.0 && cfg.epsilon <= 1.0)) throw InvalidArgument("hard instance: epsilon must lie in (0, 1]");
  if (cfg.num_actions < 2) throw InvalidArgument("hard instance: need at least two actions");
  if (cfg.num_actions == 2 && cfg.epsilon != 1.0) throw InvalidArgument("hard instance: with two actions epsilon must be 1");
  if (!(cfg.delta >= 0.0 && cfg.delta <= 0.2)) throw InvalidArgument("hard instance: delta must lie in [0, 0.2]");
  if (!(cfg.y_bar > 0.0)) throw InvalidArgument("hard instance: y_bar must be positive");
  if (cfg.n == 0) throw InvalidArgument("hard instance: n must be positive");

  const std::size_t d = cfg.support, M = cfg.num_actions;
  HardInstance h;
  Rng srng(derive_seed(cfg.sigma_seed, {0x7369676d}));
  std::bernoulli_distribution coin(0.5);
  h.sigma.resize(d);
  for (auto& s : h.sigma) s = coin(srng) ? 1 : -1;

  auto arm_q = [sigma = h.sigma, D = cfg.big_delta](std::size_t j, std::size_t a) {
    if (a == 0) return 0.5 * (1.0 + sigma[j] * D);
    if (a == 1) return 0.5 * (1.0 - sigma[j] * D);
    return 0.25;
  };

  h.data.dim = 1;
  h.data.num_actions = M;
  Rng rng(derive_seed(cfg.seed, {0x68617264}));
  std::uniform_int_distribution<std::size_t> pick(0, d - 1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> probs(M, M > 2 ? (1.0 - cfg.epsilon) / static_cast<double>(M - 2) : 0.0);
  probs[0] = probs[1] = 0.5 * cfg.epsilon;
  for (std::size_t i = 0; i < cfg.n; ++i) {
    const std::size_t j = pick(rng);
    const int a = draw_action(rng, probs);
    const double y = unif(rng) < arm_q(j, static_cast<std::size_t>(a)) ? cfg.y_bar : 0.0;
    const double xj = static_cast<double>(j);
    h.data.push_back({&xj, 1}, a, y);
  }

  const RadiusDelta delta(cfg.delta);
  const double y_bar = cfg.y_bar;
  h.optimal_policy = [sigma = h.sigma](Covariate x) {
    const auto j = static_cast<std::size_t>(std::llround(x[0]));
    return sigma.at(j) > 0 ? 0 : 1;
  };
  h.robust_value = [arm_q, d, M, delta, y_bar](const Policy& pi) {
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double xj = static_cast<double>(j);
      const int a = pi({&xj, 1});
      if (a < 0 || static_cast<std::size_t>(a) >= M) throw InvalidArgument("hard instance: policy action out of range");
      acc += y_bar * bernoulli_worst_mean(arm_q(j, static_cast<std::size_t>(a)), delta);
    }
    return acc / static_cast<double>(d);
  };
  h.optimal_value = h.robust_value(h.optimal_policy);
  h.regret = [rv = h.robust_value, best = h.optimal_value](const Policy& pi) { return best - rv(pi); };
  return h;
}

}  // namespace drpl
