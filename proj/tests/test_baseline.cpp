#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "drpl/baseline.hpp"
#include "drpl/bench.hpp"
#include "drpl/estimator.hpp"
#include "oracles.hpp"

using namespace drpl;

TEST_CASE("joint_dro_value: reference values") {
  const std::vector<double> point(100, 0.7);
  const auto p = joint_dro_value(point, {}, RadiusDelta(0.2));
  CHECK(p.value <= 0.7);
  CHECK(p.value >= 0.7 - 2 * kDefaultAlphaFloor * 0.2);

  const std::vector<double> coin{0.0, 1.0};
  CHECK(joint_dro_value(coin, {}, RadiusDelta(0.1)).value ==
        doctest::Approx(oracle::bernoulli_worst_mean(0.5, 0.1)).epsilon(1e-6));

  const std::vector<double> ys{0.0, 1.0, 3.0}, w{1.0, 2.0, 1.0};
  CHECK(std::abs(joint_dro_value(ys, w, RadiusDelta(0.0)).value - 1.25) <= 1e-6);
  CHECK_THROWS_AS(joint_dro_value(ys, std::vector<double>{0, 0, 0}, RadiusDelta(0.1)), InvalidArgument);
}

TEST_CASE("joint_dro_value: monotone in delta and bounded") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  for (int c = 0; c < 30; ++c) {
    std::vector<double> ys(40), w(40);
    for (auto& v : ys) v = 3.0 * u(rng) - 1.0;
    for (auto& v : w) v = u(rng);
    double wm = 0.0, ws = 0.0, mn = 1e300;
    for (std::size_t i = 0; i < ys.size(); ++i) {
      wm += w[i] * ys[i];
      ws += w[i];
      mn = std::min(mn, ys[i]);
    }
    wm /= ws;
    double prev = 1e300;
    for (double d : {0.0, 0.02, 0.05, 0.1, 0.2, 0.4, 0.8, 1.6}) {
      const double v = joint_dro_value(ys, w, RadiusDelta(d)).value;
      CHECK(v <= prev + 1e-9);
      CHECK(v <= wm + 1e-9);
      CHECK(v >= mn - 1e-9);
      prev = v;
    }
    // Agrees with the tilt oracle on the self-normalized law.
    std::vector<double> p(w);
    for (auto& v : p) v /= ws;
    CHECK(joint_dro_value(ys, w, RadiusDelta(0.1)).value == doctest::Approx(oracle::kl_worst_mean(ys, p, 0.1)).epsilon(1e-6));
  }
}

TEST_CASE("joint ball value never exceeds the concept-drift value") {
  const auto d = simulate_linear_boundary(20000, 77);
  const RadiusDelta delta(0.1);
  std::vector<double> w(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) w[i] = 1.0 / linear_boundary_propensity(d.covariate(i), d.actions[i]);
  const auto joint = joint_dro_policy_value(d, w, target_policy_rings, delta);
  const auto conditional = estimate_policy_value(d, target_policy_rings, delta);
  MESSAGE("joint " << joint.value << " conditional " << conditional.estimate << " se " << conditional.std_error);
  CHECK(joint.value <= conditional.estimate + 2 * conditional.std_error);
}

TEST_CASE("cross-fitted IPW weights are finite and at least one") {
  const auto d = simulate_linear_boundary(900, 2);
  const auto w = cross_fitted_ipw_weights(d, {});
  CHECK(w.size() == d.size());
  for (double v : w) {
    CHECK(std::isfinite(v));
    CHECK(v >= 1.0);
  }
}

TEST_CASE("learn_joint_dro: single action and dominant action") {
  auto d = simulate_linear_boundary(900, 3);
  auto single = d;
  for (auto& a : single.actions) a = 0;
  single.num_actions = 1;
  BaselineConfig cfg;
  cfg.propensity.kind = PropensityKind::MultinomialLogistic;
  CHECK(learn_joint_dro(single, RadiusDelta(0.1), 2, cfg).tree == PolicyTree::leaf(0));

  for (std::size_t i = 0; i < d.size(); ++i) d.rewards[i] = d.actions[i] == 2 ? 3.0 : 0.0;
  const auto res = learn_joint_dro(d, RadiusDelta(0.1), 2);
  CHECK(res.tree == PolicyTree::leaf(2));
  CHECK(res.value.value > 2.5);
}

TEST_CASE("learn_joint_dro: result is at least as good as constant trees on its own objective") {
  const auto d = simulate_linear_boundary(1500, 5);
  BaselineConfig cfg;
  const RadiusDelta delta(0.1);
  const auto res = learn_joint_dro(d, delta, 1, cfg);
  const auto w = cross_fitted_ipw_weights(d, cfg);
  CHECK(res.value.value == doctest::Approx(joint_dro_policy_value(d, w, res.tree.as_policy(), delta).value).epsilon(1e-12));
  for (int a = 0; a < 3; ++a) CHECK(res.value.value >= joint_dro_policy_value(d, w, constant_policy(a), delta).value - 1e-9);
  CHECK(learn_joint_dro(d, delta, 1, cfg).tree == res.tree);
}
