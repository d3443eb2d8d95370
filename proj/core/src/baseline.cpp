#include "drpl/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "drpl/error.hpp"
#include "drpl/folds.hpp"
#include "drpl/parallel.hpp"
#include "drpl/rng.hpp"
#include "drpl/tree_search.hpp"

namespace drpl {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Sample {
  std::vector<double> y, w;
  double min_y = 0.0, max_y = 0.0, mean = 0.0;
};

Sample prepare(std::span<const double> ys, std::span<const double> weights) {
  if (ys.empty()) throw InvalidArgument("joint_dro_value: empty sample");
  if (!weights.empty() && weights.size() != ys.size()) throw InvalidArgument("joint_dro_value: weight length mismatch");
  Sample s;
  s.y.assign(ys.begin(), ys.end());
  s.w.assign(ys.size(), 1.0);
  if (!weights.empty()) s.w.assign(weights.begin(), weights.end());
  double total = 0.0;
  for (std::size_t i = 0; i < s.y.size(); ++i) {
    if (!std::isfinite(s.y[i])) throw InvalidArgument("joint_dro_value: non-finite reward");
    if (!(s.w[i] >= 0.0) || !std::isfinite(s.w[i])) throw InvalidArgument("joint_dro_value: invalid weight");
    total += s.w[i];
  }
  if (!(total > 0.0)) throw InvalidArgument("joint_dro_value: weights sum to zero");
  s.min_y = std::numeric_limits<double>::infinity();
  s.max_y = -s.min_y;
  for (std::size_t i = 0; i < s.y.size(); ++i) {
    s.w[i] /= total;
    s.mean += s.w[i] * s.y[i];
    if (s.w[i] > 0.0) {
      s.min_y = std::min(s.min_y, s.y[i]);
      s.max_y = std::max(s.max_y, s.y[i]);
    }
  }
  return s;
}

double joint_objective(const Sample& s, double alpha, double delta) {
  double acc = 0.0;
  for (std::size_t i = 0; i < s.y.size(); ++i) acc += s.w[i] * std::exp(-(s.y[i] - s.min_y) / alpha);
  return s.min_y - alpha * std::log(acc) - alpha * delta;
}

}  // namespace

JointDualValue joint_dro_value(std::span<const double> ys, std::span<const double> weights, RadiusDelta delta,
                               double alpha_floor) {
  if (!(alpha_floor > 0.0)) throw InvalidArgument("joint_dro_value: alpha_floor must be positive");
  const Sample s = prepare(ys, weights);
  const double d = delta.value();
  const double range = s.max_y - s.min_y;
  const double hi_alpha = std::max(10.0 * range + 1.0, alpha_floor);
  if (d == 0.0) return {hi_alpha, s.mean};
  if (range == 0.0) return {alpha_floor, s.min_y - alpha_floor * d};

  double lo = std::log(alpha_floor), hi = std::log(hi_alpha);
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = hi - g * (hi - lo), e = lo + g * (hi - lo);
  double fc = joint_objective(s, std::exp(c), d), fe = joint_objective(s, std::exp(e), d);
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    if (fc >= fe) {
      hi = e;
      e = c;
      fe = fc;
      c = hi - g * (hi - lo);
      fc = joint_objective(s, std::exp(c), d);
    } else {
      lo = c;
      c = e;
      fc = fe;
      e = lo + g * (hi - lo);
      fe = joint_objective(s, std::exp(e), d);
    }
  }
  JointDualValue best{std::exp(0.5 * (lo + hi)), joint_objective(s, std::exp(0.5 * (lo + hi)), d)};
  for (double a : {alpha_floor, hi_alpha}) {
    const double v = joint_objective(s, a, d);
    if (v > best.value) best = {a, v};
  }
  return best;
}

JointDualValue joint_dro_policy_value(const Dataset& data, std::span<const double> weights, const Policy& policy,
                                      RadiusDelta delta, double alpha_floor) {
  std::vector<double> y, w;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (policy(data.covariate(i)) != data.actions[i]) continue;
    y.push_back(data.rewards[i]);
    w.push_back(weights.empty() ? 1.0 : weights[i]);
  }
  if (y.empty()) return {alpha_floor, kNegInf};
  return joint_dro_value(y, w, delta, alpha_floor);
}

std::vector<double> cross_fitted_ipw_weights(const Dataset& data, const BaselineConfig& cfg) {
  data.validate();
  const FoldPlan plan = make_folds(data.size(), cfg.K, derive_seed(cfg.seed, {0x6261736c}));
  std::vector<double> w(data.size(), 0.0);
  parallel_for(plan.K, [&](std::size_t k) {
    std::vector<std::size_t> rest;
    for (std::size_t f = 0; f < plan.K; ++f)
      if (f != k) rest.insert(rest.end(), plan.rows[f].begin(), plan.rows[f].end());
    std::sort(rest.begin(), rest.end());
    const auto model = PropensityModel::fit(data.subset(rest), cfg.propensity, derive_seed(cfg.seed, {k, 0x6261736c}));
    for (auto i : plan.rows[k]) w[i] = 1.0 / model.predict(data.covariate(i), data.actions[i]);
  });
  return w;
}

BaselineResult learn_joint_dro(const Dataset& data, RadiusDelta delta, int depth, const BaselineConfig& cfg) {
  if (depth < 0 || depth > 2) throw InvalidArgument("unsupported depth");
  data.validate();
  if (data.empty()) throw InvalidArgument("learn_joint_dro: empty dataset");
  const std::size_t n = data.size(), M = data.num_actions;
  const double d = delta.value();
  const auto w = cross_fitted_ipw_weights(data, cfg);

  BaselineResult best;
  best.tree = PolicyTree::leaf(0);
  best.value = joint_dro_policy_value(data, w, best.tree.as_policy(), delta, cfg.alpha_floor);
  if (M == 1) return best;

  auto consider = [&](const PolicyTree& t) {
    const auto v = joint_dro_policy_value(data, w, t.as_policy(), delta, cfg.alpha_floor);
    if (v.value > best.value.value + 1e-12 * (1.0 + std::abs(best.value.value))) best = {t, v};
  };
  for (std::size_t a = 1; a < M; ++a) consider(PolicyTree::leaf(static_cast<int>(a)));

  double y_min = data.rewards.front(), y_max = y_min;
  for (double y : data.rewards) {
    y_min = std::min(y_min, y);
    y_max = std::max(y_max, y);
  }

  ScoreMatrix s;
  s.n = n;
  s.num_actions = M;
  s.values.assign(n * M, 0.0);

  // Dinkelbach on the ratio sum_on(w h) / sum_on(w) for the per-row values h.
  // `maximize` selects the direction.
  auto dinkelbach = [&](const std::vector<double>& h, bool maximize) {
    PolicyTree t = best.tree;
    for (int it = 0; it < cfg.max_ratio_iterations; ++it) {
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (t.action(data.covariate(i)) != data.actions[i]) continue;
        num += w[i] * h[i];
        den += w[i];
      }
      if (!(den > 0.0)) break;
      const double lambda = num / den;
      const double sign = maximize ? 1.0 : -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t a = 0; a < M; ++a) s.at(i, a) = 0.0;
        s.at(i, static_cast<std::size_t>(data.actions[i])) = sign * w[i] * (h[i] - lambda);
      }
      const auto found = search_policy_tree(s, data.x, data.dim, depth);
      if (found.value <= 1e-13 * (1.0 + std::abs(lambda)) || found.tree == t) break;
      t = found.tree;
    }
    consider(t);
  };

  std::vector<double> h(n);
  if (d == 0.0) {
    dinkelbach(data.rewards, true);
    return best;
  }
  const double lo = std::log(cfg.alpha_floor), hi = std::log(10.0 * (y_max - y_min) + 1.0);
  const int G = std::max(2, cfg.alpha_grid);
  for (int g = 0; g < G; ++g) {
    const double alpha = std::exp(lo + (hi - lo) * g / (G - 1));
    // Scale-free form: minimizing E_w[exp(-(y - y_min)/alpha)] on-policy.
    for (std::size_t i = 0; i < n; ++i) h[i] = std::exp(-(data.rewards[i] - y_min) / alpha);
    dinkelbach(h, false);
  }
  return best;
}

}  // namespace drpl
