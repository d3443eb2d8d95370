#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "drpl/bench.hpp"
#include "drpl/dual_field.hpp"
#include "drpl/propensity.hpp"
#include "drpl/regression.hpp"
#include "drpl/rng.hpp"
#include "oracles.hpp"

using namespace drpl;

namespace {

Dataset uniform_design(std::size_t n, std::size_t dim, std::size_t M, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  std::uniform_int_distribution<int> a(0, static_cast<int>(M) - 1);
  Dataset d;
  d.dim = dim;
  d.num_actions = M;
  std::vector<double> x(dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& v : x) v = u(rng);
    d.push_back(x, a(rng), u(rng));
  }
  return d;
}

double log_loss(const PropensityModel& m, const Dataset& d) {
  double s = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) s -= std::log(m.predict(d.covariate(i), d.actions[i]));
  return s / static_cast<double>(d.size());
}

}  // namespace

TEST_CASE("propensity: uniform logging is recovered") {
  const auto train = uniform_design(5000, 5, 3, 1);
  const auto test = uniform_design(500, 5, 3, 2);
  const auto trees = PropensityModel::fit(train, {}, 7);
  double worst = 0.0;
  for (std::size_t i = 0; i < test.size(); ++i)
    for (int a = 0; a < 3; ++a) worst = std::max(worst, std::abs(trees.predict(test.covariate(i), a) - 1.0 / 3.0));
  CHECK(worst <= 0.05);

  // The unpenalized logistic fit is noise-limited pointwise; check calibration on average.
  PropensityConfig cfg;
  cfg.kind = PropensityKind::MultinomialLogistic;
  const auto logit = PropensityModel::fit(train, cfg, 7);
  for (int a = 0; a < 3; ++a) {
    double mean = 0.0;
    for (std::size_t i = 0; i < test.size(); ++i) mean += logit.predict(test.covariate(i), a) / static_cast<double>(test.size());
    CHECK(std::abs(mean - 1.0 / 3.0) <= 0.01);
  }
}

TEST_CASE("propensity: region-based logging beats the uniform log-loss") {
  const auto train = simulate_linear_boundary(5000, 3);
  const auto test = simulate_linear_boundary(2000, 4);
  for (auto kind : {PropensityKind::MultinomialLogistic, PropensityKind::BaggedTrees}) {
    PropensityConfig cfg;
    cfg.kind = kind;
    CHECK(log_loss(PropensityModel::fit(train, cfg, 1), test) < std::log(3.0));
  }
}

TEST_CASE("propensity: single-action data and clipping invariants") {
  auto d = uniform_design(300, 2, 3, 5);
  for (auto& a : d.actions) a = 1;
  for (auto kind : {PropensityKind::MultinomialLogistic, PropensityKind::BaggedTrees}) {
    PropensityConfig cfg;
    cfg.kind = kind;
    const auto m = PropensityModel::fit(d, cfg, 0);
    CHECK_FALSE(m.warnings().empty());
    const std::vector<double> x{0.3, 0.6};
    CHECK(m.predict(x, 1) == doctest::Approx(1.0 - 2 * cfg.clip_floor).epsilon(1e-9));
    CHECK(m.predict(x, 0) == doctest::Approx(cfg.clip_floor).epsilon(1e-9));
    CHECK(m.predict(x, 2) == doctest::Approx(cfg.clip_floor).epsilon(1e-9));
  }
  const auto bench = simulate_linear_boundary(1000, 8);
  const auto fitted = PropensityModel::fit(bench, {}, 2);
  for (std::size_t i = 0; i < 200; ++i) {
    const auto p = fitted.predict_all(bench.covariate(i));
    double s = 0.0;
    for (double v : p) {
      CHECK(v >= fitted.clip_floor() - 1e-15);
      CHECK(v <= 1.0);
      s += v;
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("clip_to_simplex") {
  std::vector<double> p{0.98, 0.015, 0.005};
  clip_to_simplex(p, 0.01);
  CHECK(p[2] == doctest::Approx(0.01));
  CHECK(p[0] + p[1] + p[2] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p[1] >= 0.01);
  std::vector<double> z{0.0, 0.0};
  clip_to_simplex(z, 0.1);
  CHECK(z[0] == doctest::Approx(0.5));
}

TEST_CASE("fixed propensity wraps the true logging policy") {
  const auto m = PropensityModel::fixed(3, linear_boundary_propensity);
  const std::vector<double> x{0.9, 0, 0, 0, 0};
  CHECK(m.predict(x, 0) == doctest::Approx(0.5));
  CHECK(m.predict(x, 1) == doctest::Approx(0.25));
}

TEST_CASE("dual field: degenerate rewards give the point-mass value") {
  auto d = uniform_design(400, 2, 2, 11);
  for (auto& y : d.rewards) y = 0.5;
  const auto basis = BasisSpec::default_for(d.x, 2);
  const auto field = fit_dual_field(d, constant_policy(0), RadiusDelta(0.1), basis);
  for (std::size_t i = 0; i < 50; ++i)
    CHECK(-g_hat_target(d.covariate(i), 0.5, field, RadiusDelta(0.1)) == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("dual field: Bernoulli rewards recover the worst-case mean") {
  const auto d = simulate_bernoulli_constant(20000, 3);
  const RadiusDelta delta(0.1);
  const auto rows = rows_with_action(d, 0);
  const auto sub = d.subset(rows);
  const auto field = fit_dual_field(sub.x, sub.dim, sub.rewards, delta, BasisSpec::default_for(sub.x, sub.dim));
  double s = 0.0;
  for (std::size_t i = 0; i < sub.size(); ++i) s += g_hat_target(sub.covariate(i), sub.rewards[i], field, delta);
  CHECK(-s / static_cast<double>(sub.size()) == doctest::Approx(oracle::bernoulli_worst_mean(0.5, 0.1)).epsilon(0.02 / 0.28));
  CHECK(field.diagnostics.risk_trace.size() >= 2);
  for (std::size_t k = 1; k < field.diagnostics.risk_trace.size(); ++k)
    CHECK(field.diagnostics.risk_trace[k] <= field.diagnostics.risk_trace[k - 1]);
}

TEST_CASE("dual field: constant basis reproduces solve_dual") {
  const auto d = simulate_linear_boundary(3000, 21);
  Rng rng(4);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < d.size(); ++i)
      if (rng() % 10 == 0) rows.push_back(i);
    const auto sub = d.subset(rows);
    const RadiusDelta delta(0.02 + 0.01 * (rep % 10));
    const auto field = fit_dual_field(sub.x, sub.dim, sub.rewards, delta, BasisSpec::polynomial(5, 0));
    const auto scalar = solve_dual(sub.rewards, {}, delta);
    CHECK(std::abs(field.diagnostics.risk - scalar.value) <= 1e-6);
    const auto t0 = eval_dual_field(field, sub.covariate(0));
    const auto t1 = eval_dual_field(field, sub.covariate(1));
    CHECK(t0.alpha == t1.alpha);
    CHECK(t0.eta == t1.eta);
  }
}

TEST_CASE("dual field: evaluation respects the alpha floor and composes with loss") {
  DualFieldModel m;
  m.basis = BasisSpec::polynomial(2, 1);
  m.coef_alpha = {0.0, 0.0, 0.0};
  m.coef_eta = {1.0, 2.0, -1.0};
  const std::vector<double> x{0.5, 2.0};
  CHECK(eval_dual_field(m, x).alpha == m.alpha_floor);
  CHECK(eval_dual_field(m, x).eta == doctest::Approx(1.0 + 2.0 * 0.5 - 2.0));
  m.coef_alpha = {1.0, 0.0, 0.0};
  m.coef_eta = {-1.0, 0.0, 0.0};
  CHECK(g_hat_target(x, 0.0, m, RadiusDelta(0.0)) == doctest::Approx(0.0).epsilon(1e-15));
  m.coef_eta = {0.0, 0.0, 0.0};
  CHECK(g_hat_target(x, 1.0, m, RadiusDelta(0.1)) == doctest::Approx(std::exp(-2.0) + 0.1));
  m.coef_alpha = {0.3, -0.7, 0.4};
  m.coef_eta = {0.2, 0.1, -0.5};
  for (double y : {0.0, 0.3, 1.7})
    CHECK(g_hat_target(x, y, m, RadiusDelta(0.2)) == loss(y, eval_dual_field(m, x), RadiusDelta(0.2)));

  const auto d = simulate_linear_boundary(2000, 5);
  const auto field = fit_dual_field(d, constant_policy(2), RadiusDelta(0.1), BasisSpec::default_for(d.x, d.dim));
  for (std::size_t i = 0; i < d.size(); ++i) CHECK(eval_dual_field(field, d.covariate(i)).alpha >= field.alpha_floor);
}

TEST_CASE("dual field: too few on-policy rows") {
  const auto d = uniform_design(30, 2, 3, 1);
  CHECK_THROWS_AS(fit_dual_field(d, constant_policy(0), RadiusDelta(0.1), BasisSpec::polynomial(2, 1)),
                  InsufficientSamples);
  CHECK_THROWS_WITH(fit_dual_field(d, constant_policy(0), RadiusDelta(0.1), BasisSpec::polynomial(2, 1)),
                    doctest::Contains("insufficient on-policy samples"));
}

TEST_CASE("regression: constant and single-pair inputs") {
  const std::vector<double> x{0.1, 0.2, 0.5, 0.9, 0.3, 0.4};
  const std::vector<double> y(3, 1.25);
  for (auto kind : {RegressionKind::BaggedTrees, RegressionKind::NadarayaWatson}) {
    RegressionConfig cfg;
    cfg.kind = kind;
    const auto m = RegressionModel::fit(x, 2, y, cfg, 0);
    const std::vector<double> q{0.7, 0.1};
    CHECK(std::abs(m.predict(q) - 1.25) <= 1e-9);
    const auto one = RegressionModel::fit(std::span<const double>(x.data(), 2), 2, std::span<const double>(y.data(), 1), cfg, 0);
    CHECK(one.predict(q) == doctest::Approx(1.25));
  }
  CHECK_THROWS_AS(RegressionModel::fit({}, 2, {}, {}, 0), InvalidArgument);
  CHECK(RegressionModel::constant(2, 0.0).predict(x) == 0.0);
}

TEST_CASE("regression: linear signal is recovered below the noise level") {
  Rng rng(12);
  std::uniform_real_distribution<double> u(0, 1);
  std::normal_distribution<double> noise(0, 0.5);
  auto make = [&](std::size_t n, std::vector<double>& x, std::vector<double>& y, std::vector<double>& f) {
    for (std::size_t i = 0; i < n; ++i) {
      const double a = u(rng), b = u(rng);
      x.push_back(a);
      x.push_back(b);
      f.push_back(a + 2.0 * b);
      y.push_back(f.back() + noise(rng));
    }
  };
  std::vector<double> x, y, f, tx, ty, tf;
  make(5000, x, y, f);
  make(1000, tx, ty, tf);
  for (auto kind : {RegressionKind::BaggedTrees, RegressionKind::NadarayaWatson}) {
    RegressionConfig cfg;
    cfg.kind = kind;
    const auto m = RegressionModel::fit(x, 2, y, cfg, 3);
    double se = 0.0;
    for (std::size_t i = 0; i < tf.size(); ++i) {
      const double r = m.predict(std::span<const double>(tx.data() + 2 * i, 2)) - ty[i];
      se += r * r;
    }
    CHECK(std::sqrt(se / static_cast<double>(tf.size())) < 0.5 * 1.2);
  }
}

TEST_CASE("regression on G targets estimates the conditional mean of the loss") {
  const auto d = simulate_bernoulli_constant(20000, 8);
  const RadiusDelta delta(0.1);
  const auto sub = d.subset(rows_with_action(d, 1));
  const auto field = fit_dual_field(sub.x, sub.dim, sub.rewards, delta, BasisSpec::default_for(sub.x, sub.dim));
  std::vector<double> targets(sub.size());
  for (std::size_t i = 0; i < sub.size(); ++i) targets[i] = g_hat_target(sub.covariate(i), sub.rewards[i], field, delta);
  const auto g = RegressionModel::fit(sub.x, sub.dim, targets, {}, 1);
  for (std::size_t i = 0; i < 200; ++i) {
    const auto x = d.covariate(i);
    const auto th = eval_dual_field(field, x);
    const double analytic = 0.5 * loss(0.0, th, delta) + 0.5 * loss(1.0, th, delta);
    CHECK(std::abs(g.predict(x) - analytic) <= 0.03);
  }
}
