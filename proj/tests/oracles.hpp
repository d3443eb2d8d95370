#pragma once

// Reference implementations used only by the tests. They deliberately avoid
// the library's own solvers so that agreement is evidence of correctness.

#include <algorithm>
#include <cmath>
#include <vector>

namespace oracle {

inline double binary_kl(double p, double q) {
  double v = 0.0;
  if (p > 0.0) v += p * std::log(p / q);
  if (p < 1.0) v += (1.0 - p) * std::log((1.0 - p) / (1.0 - q));
  return v;
}

/// inf{p <= q : D(p || q) <= delta} by plain bisection.
inline double bernoulli_worst_mean(double q, double delta) {
  if (delta <= 0.0) return q;
  if (binary_kl(0.0, q) <= delta) return 0.0;
  double lo = 0.0, hi = q;
  for (int i = 0; i < 400; ++i) {
    const double mid = 0.5 * (lo + hi);
    (binary_kl(mid, q) > delta ? lo : hi) = mid;
  }
  return hi;
}

/// Worst-case mean over a KL ball via the one-dimensional dual
/// sup_t { -t log E[exp(-Y/t)] - t delta }, solved with a log-grid scan and
/// golden-section refinement in long double.
inline double kl_worst_mean(const std::vector<double>& v, const std::vector<double>& p, double delta) {
  long double mn = v[0];
  for (std::size_t i = 0; i < v.size(); ++i)
    if (p[i] > 0) mn = std::min<long double>(mn, v[i]);
  auto f = [&](long double t) {
    long double acc = 0;
    for (std::size_t i = 0; i < v.size(); ++i) acc += p[i] * std::exp(-(v[i] - mn) / t);
    return mn - t * std::log(acc) - t * delta;
  };
  long double best_t = 1e-9, best = f(best_t);
  for (int k = 0; k <= 2000; ++k) {
    const long double t = std::pow(10.0L, -9.0L + 17.0L * k / 2000.0L);
    const long double val = f(t);
    if (val > best) {
      best = val;
      best_t = t;
    }
  }
  long double lo = std::log(best_t) - 0.05L, hi = std::log(best_t) + 0.05L;
  const long double g = (std::sqrt(5.0L) - 1.0L) / 2.0L;
  for (int i = 0; i < 300; ++i) {
    const long double c = hi - g * (hi - lo), d = lo + g * (hi - lo);
    if (f(std::exp(c)) >= f(std::exp(d)))
      hi = d;
    else
      lo = c;
  }
  const long double t = std::exp(0.5L * (lo + hi));
  best = std::max(best, f(t));
  // The t -> 0 limit is the essential infimum.
  return static_cast<double>(std::max(best, mn));
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace oracle
