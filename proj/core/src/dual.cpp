#include "drpl/dual.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "drpl/nelder_mead.hpp"

namespace drpl {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_finite(double v) {
  if (!std::isfinite(v)) throw InvalidArgument("non-finite operand");
}

struct WeightedSample {
  std::span<const double> ys;
  std::vector<double> w;  // normalized to sum 1
  double min_y = 0.0;
  double max_abs = 0.0;
  double mean = 0.0;
  double sd = 0.0;
};

WeightedSample prepare(std::span<const double> ys, std::span<const double> weights) {
  if (ys.empty()) throw InvalidArgument("solve_dual: empty sample");
  if (!weights.empty() && weights.size() != ys.size()) throw InvalidArgument("solve_dual: weight length mismatch");
  WeightedSample s;
  s.ys = ys;
  s.w.assign(ys.size(), 1.0);
  if (!weights.empty()) std::copy(weights.begin(), weights.end(), s.w.begin());
  double total = 0.0;
  for (double w : s.w) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("solve_dual: weights must be finite and non-negative");
    total += w;
  }
  if (!(total > 0.0)) throw InvalidArgument("solve_dual: weights sum to zero");
  for (double& w : s.w) w /= total;
  s.min_y = kInf;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    require_finite(ys[i]);
    if (s.w[i] > 0.0) s.min_y = std::min(s.min_y, ys[i]);
    s.max_abs = std::max(s.max_abs, std::abs(ys[i]));
    s.mean += s.w[i] * ys[i];
  }
  double var = 0.0;
  for (std::size_t i = 0; i < ys.size(); ++i) var += s.w[i] * (ys[i] - s.mean) * (ys[i] - s.mean);
  s.sd = std::sqrt(std::max(var, 0.0));
  return s;
}

// log E_w[exp(-(y - min_y)/alpha)], always <= 0.
double log_tilt_mean(const WeightedSample& s, double alpha) {
  double acc = 0.0;
  for (std::size_t i = 0; i < s.ys.size(); ++i) acc += s.w[i] * std::exp(-(s.ys[i] - s.min_y) / alpha);
  return std::log(acc);
}

double objective(const WeightedSample& s, double alpha, double eta, double delta) {
  const double expo = -(s.min_y + eta) / alpha - 1.0 + log_tilt_mean(s, alpha);
  const double v = alpha * std::exp(expo) + eta + alpha * delta;
  return std::isfinite(v) ? v : kInf;
}

// Stationary eta for a given alpha: eta = alpha (log E_w[e^{-y/alpha}] - 1).
double stationary_eta(const WeightedSample& s, double alpha) {
  return alpha * (-s.min_y / alpha + log_tilt_mean(s, alpha) - 1.0);
}

}  // namespace

RadiusDelta::RadiusDelta(double delta) : delta_(delta) {
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw InvalidArgument("delta must be finite and non-negative");
}

void DiscreteDist::validate() const {
  if (values.empty() || values.size() != probs.size()) throw InvalidArgument("discrete distribution: length mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) throw InvalidArgument("discrete distribution: non-finite value");
    if (!(probs[i] >= 0.0)) throw InvalidArgument("discrete distribution: negative probability");
    total += probs[i];
  }
  if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("discrete distribution: probabilities must sum to 1");
}

double loss(double y, DualParams theta, RadiusDelta delta) {
  require_finite(y);
  require_finite(theta.alpha);
  require_finite(theta.eta);
  if (!(theta.alpha > 0.0)) throw InvalidArgument("loss: alpha must be positive");
  const double v = theta.alpha * std::exp(-(y + theta.eta) / theta.alpha - 1.0) + theta.eta + theta.alpha * delta.value();
  return std::isfinite(v) ? v : kInf;
}

LossGradient loss_grad(double y, DualParams theta, RadiusDelta delta) {
  require_finite(y);
  require_finite(theta.alpha);
  require_finite(theta.eta);
  if (!(theta.alpha > 0.0)) throw InvalidArgument("loss_grad: alpha must be positive");
  const double u = (y + theta.eta) / theta.alpha;
  const double e = std::exp(-u - 1.0);
  return {(1.0 + u) * e + delta.value(), 1.0 - e};
}

double dual_objective(std::span<const double> ys, std::span<const double> weights, DualParams theta,
                      RadiusDelta delta) {
  if (!(theta.alpha > 0.0)) throw InvalidArgument("dual_objective: alpha must be positive");
  const auto s = prepare(ys, weights);
  return objective(s, theta.alpha, theta.eta, delta.value());
}

DualSolution solve_dual(std::span<const double> ys, std::span<const double> weights, RadiusDelta delta,
                        const SolverConfig& cfg) {
  if (!(cfg.alpha_floor > 0.0)) throw InvalidArgument("solve_dual: alpha_floor must be positive");
  const auto s = prepare(ys, weights);
  const double d = delta.value();
  // |eta*| <= max|y| + alpha at the optimum, so the box grows with alpha.
  const double eta_base = 2.0 * (s.max_abs + 1.0);
  auto eta_bound = [&](double a) { return eta_base + a; };
  const double floor = cfg.alpha_floor;

  if (d == 0.0) {
    DualSolution sol;
    sol.theta.alpha = std::max(1e4 * std::max(s.sd, 1e-3), floor);
    sol.theta.eta = std::clamp(stationary_eta(s, sol.theta.alpha), -eta_bound(sol.theta.alpha), eta_bound(sol.theta.alpha));
    sol.value = -s.mean;
    sol.converged = true;
    return sol;
  }

  auto project = [&](double a, double e) {
    const double pa = std::max(a, floor);
    return std::array<double, 2>{pa, std::clamp(e, -eta_bound(pa), eta_bound(pa))};
  };
  auto penalized = [&](std::span<const double> p) {
    const auto q = project(p[0], p[1]);
    const double dist = std::abs(p[0] - q[0]) + std::abs(p[1] - q[1]);
    return objective(s, q[0], q[1], d) + dist;
  };

  const double spread = std::max(s.sd, 1e-3 * (1.0 + std::abs(s.mean)));
  const double alpha_scale = std::min(spread / std::sqrt(2.0 * d), 1e6);
  constexpr std::array<double, 5> multipliers{1.0, 0.25, 4.0, 1.0 / 16.0, 16.0};

  NelderMeadOptions opt;
  opt.max_iterations = cfg.max_iterations;
  opt.x_tolerance = cfg.x_tolerance;

  DualSolution best;
  best.value = kInf;
  bool any_converged = false;
  const int restarts = std::max(1, cfg.restarts);
  for (int r = 0; r < restarts; ++r) {
    const double a0 = std::max(2.0 * floor, alpha_scale * multipliers[static_cast<std::size_t>(r) % multipliers.size()]);
    const double e0 = std::clamp(stationary_eta(s, a0), -eta_bound(a0), eta_bound(a0));
    const std::array<double, 2> start{a0, e0};
    const std::array<double, 2> step{0.5 * a0, 0.5 * a0 + 0.1 * spread};
    const auto res = nelder_mead(penalized, start, step, opt);
    best.iterations += res.iterations;
    best.restarts_run = r + 1;
    any_converged = any_converged || res.converged;
    const auto q = project(res.x[0], res.x[1]);
    const double v = objective(s, q[0], q[1], d);
    if (v < best.value) {
      best.value = v;
      best.theta = {q[0], q[1]};
    }
  }

  // Polish on the profile F(alpha) = min_eta objective, which is convex in
  // alpha and free of the (alpha, eta) valley that stalls the simplex when
  // alpha is large. Golden section over log alpha.
  auto profile = [&](double log_a) {
    const double a = std::max(std::exp(log_a), floor);
    const double e = std::clamp(stationary_eta(s, a), -eta_bound(a), eta_bound(a));
    return std::pair{objective(s, a, e, d), std::array<double, 2>{a, e}};
  };
  const double top = std::max({10.0 * eta_base, 100.0 * alpha_scale, 10.0 * best.theta.alpha});
  double lo = std::log(floor), hi = std::log(top);
  constexpr double inv_phi = 0.6180339887498949;
  double x1 = hi - inv_phi * (hi - lo), x2 = lo + inv_phi * (hi - lo);
  double f1 = profile(x1).first, f2 = profile(x2).first;
  for (int it = 0; it < 4 * cfg.polish_iterations && hi - lo > 1e-12; ++it) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = profile(x1).first;
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = profile(x2).first;
    }
  }
  for (double t : {lo, 0.5 * (lo + hi), hi}) {
    const auto [v, q] = profile(t);
    if (v < best.value) {
      best.value = v;
      best.theta = {q[0], q[1]};
    }
  }
  const bool stationary = hi - lo <= 1e-12;

  best.converged = any_converged || stationary;
  if (!best.converged) throw SolverError("solve_dual: no restart converged", best);
  return best;
}

double worst_case_mean_discrete(const DiscreteDist& dist, RadiusDelta delta) {
  dist.validate();
  const double d = delta.value();
  double lo_v = kInf, hi_v = -kInf, mean = 0.0;
  for (std::size_t i = 0; i < dist.values.size(); ++i) {
    if (dist.probs[i] <= 0.0) continue;
    lo_v = std::min(lo_v, dist.values[i]);
    hi_v = std::max(hi_v, dist.values[i]);
    mean += dist.probs[i] * dist.values[i];
  }
  if (d == 0.0 || hi_v == lo_v) return d == 0.0 ? mean : lo_v;
  double min_mass = 0.0;
  for (std::size_t i = 0; i < dist.values.size(); ++i)
    if (dist.values[i] == lo_v) min_mass += dist.probs[i];
  if (d >= -std::log(min_mass)) return lo_v;

  const double range = hi_v - lo_v;
  // KL and tilted mean of Q_t ~ P exp(-(y - min)/t).
  auto tilt = [&](double t, double& kl, double& qmean) {
    double z = 0.0, num = 0.0, zy = 0.0;
    for (std::size_t i = 0; i < dist.values.size(); ++i) {
      if (dist.probs[i] <= 0.0) continue;
      const double s = (dist.values[i] - lo_v) / t;
      const double w = dist.probs[i] * std::exp(-s);
      z += w;
      num += w * s;
      zy += w * dist.values[i];
    }
    kl = -num / z - std::log(z);
    qmean = zy / z;
  };
  double lo = std::log(1e-8 * range), hi = std::log(1e8 * range);
  double kl = 0.0, qmean = mean;
  for (int it = 0; it < 300; ++it) {
    const double mid = 0.5 * (lo + hi);
    tilt(std::exp(mid), kl, qmean);
    if (std::abs(kl - d) <= 1e-13 || hi - lo < 1e-15) break;
    // KL decreases as the tilt temperature t grows.
    if (kl > d)
      lo = mid;
    else
      hi = mid;
  }
  return qmean;
}

double binary_kl(double p, double q) {
  auto term = [](double a, double b) { return a > 0.0 ? a * std::log(a / b) : 0.0; };
  return term(p, q) + term(1.0 - p, 1.0 - q);
}

double bernoulli_worst_mean(double q, RadiusDelta delta) {
  if (!(q > 0.0 && q < 1.0)) throw InvalidArgument("bernoulli_worst_mean: q must lie in (0, 1)");
  const double d = delta.value();
  if (d == 0.0) return q;
  if (d >= -std::log1p(-q)) return 0.0;
  double lo = 0.0, hi = q;  // D(p || q) decreases on [0, q]
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (binary_kl(mid, q) > d)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double gaussian_worst_mean(double mu, double sigma, RadiusDelta delta) {
  return mu - sigma * std::sqrt(2.0 * delta.value());
}

}  // namespace drpl
