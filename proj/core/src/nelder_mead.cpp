#include "drpl/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "drpl/error.hpp"

namespace drpl {

NelderMeadResult nelder_mead(const Objective& f, std::span<const double> start, std::span<const double> step,
                             const NelderMeadOptions& opt) {
  const std::size_t n = start.size();
  if (n == 0) throw InvalidArgument("nelder_mead: empty parameter vector");
  if (step.size() != n) throw InvalidArgument("nelder_mead: step size mismatch");

  const double dn = static_cast<double>(n);
  const double rho = 1.0;
  const double chi = opt.adaptive ? 1.0 + 2.0 / dn : 2.0;
  const double psi = opt.adaptive ? 0.75 - 1.0 / (2.0 * dn) : 0.5;
  const double sigma = opt.adaptive ? 1.0 - 1.0 / dn : 0.5;

  NelderMeadResult res;
  auto eval = [&](const std::vector<double>& p) {
    ++res.evaluations;
    const double v = f(p);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  std::vector<std::vector<double>> sim(n + 1, std::vector<double>(start.begin(), start.end()));
  for (std::size_t j = 0; j < n; ++j) sim[j + 1][j] += step[j];
  std::vector<double> fv(n + 1);
  for (std::size_t k = 0; k <= n; ++k) fv[k] = eval(sim[k]);

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), xr(n), xe(n), xc(n);
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    std::vector<std::vector<double>> s2(n + 1);
    std::vector<double> f2(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
      s2[k] = std::move(sim[order[k]]);
      f2[k] = fv[order[k]];
    }
    sim = std::move(s2);
    fv = std::move(f2);
  };
  auto diameter = [&] {
    double d = 0.0;
    for (std::size_t k = 1; k <= n; ++k)
      for (std::size_t j = 0; j < n; ++j) d = std::max(d, std::abs(sim[k][j] - sim[0][j]));
    return d;
  };

  sort_simplex();
  for (res.iterations = 0; res.iterations < opt.max_iterations; ++res.iterations) {
    if (diameter() <= opt.x_tolerance) {
      res.converged = true;
      break;
    }
    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t j = 0; j < n; ++j) centroid[j] += sim[k][j] / dn;
    const auto& worst = sim[n];
    for (std::size_t j = 0; j < n; ++j) xr[j] = centroid[j] + rho * (centroid[j] - worst[j]);
    const double fr = eval(xr);

    bool shrink = false;
    if (fr < fv[0]) {
      for (std::size_t j = 0; j < n; ++j) xe[j] = centroid[j] + chi * (xr[j] - centroid[j]);
      const double fe = eval(xe);
      if (fe < fr) {
        sim[n] = xe;
        fv[n] = fe;
      } else {
        sim[n] = xr;
        fv[n] = fr;
      }
    } else if (fr < fv[n - 1]) {
      sim[n] = xr;
      fv[n] = fr;
    } else if (fr < fv[n]) {
      for (std::size_t j = 0; j < n; ++j) xc[j] = centroid[j] + psi * (xr[j] - centroid[j]);
      const double fc = eval(xc);
      if (fc <= fr) {
        sim[n] = xc;
        fv[n] = fc;
      } else {
        shrink = true;
      }
    } else {
      for (std::size_t j = 0; j < n; ++j) xc[j] = centroid[j] - psi * (centroid[j] - worst[j]);
      const double fc = eval(xc);
      if (fc < fv[n]) {
        sim[n] = xc;
        fv[n] = fc;
      } else {
        shrink = true;
      }
    }
    if (shrink) {
      for (std::size_t k = 1; k <= n; ++k) {
        for (std::size_t j = 0; j < n; ++j) sim[k][j] = sim[0][j] + sigma * (sim[k][j] - sim[0][j]);
        fv[k] = eval(sim[k]);
      }
    }
    sort_simplex();
  }
  if (!res.converged && diameter() <= opt.x_tolerance) res.converged = true;
  res.x = sim[0];
  res.value = fv[0];
  return res;
}

}  // namespace drpl
