#include "drpl/dual_field.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "drpl/error.hpp"
#include "drpl/nelder_mead.hpp"

namespace drpl {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

class FieldRisk {
 public:
  FieldRisk(const Eigen::MatrixXd& phi, std::span<const double> ys, double delta, double floor, double ridge)
      : phi_(phi), ys_(ys), delta_(delta), floor_(floor), ridge_(ridge) {}

  Eigen::Index p() const { return phi_.cols(); }

  double value(const Eigen::VectorXd& ca, const Eigen::VectorXd& ce) const {
    const Eigen::VectorXd a = phi_ * ca, e = phi_ * ce;
    double total = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      const double alpha = std::max(a[i], floor_);
      const double v = alpha * std::exp(-(ys_[static_cast<std::size_t>(i)] + e[i]) / alpha - 1.0) + e[i] + alpha * delta_;
      if (!std::isfinite(v)) return kInf;
      total += v;
    }
    return total / static_cast<double>(a.size()) + penalty(ca, ce);
  }

  // Gradient and exact Hessian of the mean loss in (ca, ce).
  bool derivatives(const Eigen::VectorXd& ca, const Eigen::VectorXd& ce, Eigen::VectorXd& g, Eigen::MatrixXd& H) const {
    const Eigen::Index m = phi_.rows(), P = p();
    const Eigen::VectorXd a = phi_ * ca, e = phi_ * ce;
    Eigen::VectorXd ga(m), ge(m), haa(m), hae(m), hee(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const bool free = a[i] > floor_;
      const double alpha = free ? a[i] : floor_;
      const double u = (ys_[static_cast<std::size_t>(i)] + e[i]) / alpha;
      const double E = std::exp(-u - 1.0);
      if (!std::isfinite(E) || !std::isfinite(u * u * E)) return false;
      ga[i] = free ? (1.0 + u) * E + delta_ : 0.0;
      ge[i] = 1.0 - E;
      haa[i] = free ? E * u * u / alpha : 0.0;
      hae[i] = free ? -E * u / alpha : 0.0;
      hee[i] = E / alpha;
    }
    const double inv_m = 1.0 / static_cast<double>(m);
    g.resize(2 * P);
    g.head(P) = phi_.transpose() * ga * inv_m;
    g.tail(P) = phi_.transpose() * ge * inv_m;
    H.resize(2 * P, 2 * P);
    H.topLeftCorner(P, P) = phi_.transpose() * haa.asDiagonal() * phi_ * inv_m;
    H.topRightCorner(P, P) = phi_.transpose() * hae.asDiagonal() * phi_ * inv_m;
    H.bottomLeftCorner(P, P) = H.topRightCorner(P, P).transpose();
    H.bottomRightCorner(P, P) = phi_.transpose() * hee.asDiagonal() * phi_ * inv_m;
    if (ridge_ > 0.0) {
      for (Eigen::Index k = 1; k < P; ++k) {
        g[k] += ridge_ * ca[k];
        g[P + k] += ridge_ * ce[k];
        H(k, k) += ridge_;
        H(P + k, P + k) += ridge_;
      }
    }
    return true;
  }

  double floor_fraction(const Eigen::VectorXd& ca) const {
    const Eigen::VectorXd a = phi_ * ca;
    Eigen::Index hits = 0;
    for (Eigen::Index i = 0; i < a.size(); ++i) hits += a[i] <= floor_ ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(a.size());
  }

 private:
  double penalty(const Eigen::VectorXd& ca, const Eigen::VectorXd& ce) const {
    if (ridge_ <= 0.0) return 0.0;
    return 0.5 * ridge_ * (ca.tail(ca.size() - 1).squaredNorm() + ce.tail(ce.size() - 1).squaredNorm());
  }

  const Eigen::MatrixXd& phi_;
  std::span<const double> ys_;
  double delta_;
  double floor_;
  double ridge_;
};

int newton(const FieldRisk& risk, Eigen::VectorXd& ca, Eigen::VectorXd& ce, double& f, int max_iter) {
  const Eigen::Index P = risk.p();
  Eigen::VectorXd g;
  Eigen::MatrixXd H;
  double lambda = 1e-8;
  int it = 0;
  int stalls = 0;
  for (; it < max_iter; ++it) {
    if (!risk.derivatives(ca, ce, g, H)) break;
    if (g.lpNorm<Eigen::Infinity>() < 1e-11) break;
    const double scale = std::max(H.diagonal().maxCoeff(), 1e-300);
    bool accepted = false;
    for (int tries = 0; tries < 30 && !accepted; ++tries) {
      Eigen::MatrixXd Hd = H;
      Hd.diagonal().array() += lambda * scale;
      const Eigen::VectorXd step = Hd.ldlt().solve(-g);
      if (!step.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      const Eigen::VectorXd na = ca + step.head(P), ne = ce + step.tail(P);
      const double fn = risk.value(na, ne);
      if (fn < f) {
        const double gain = f - fn;
        ca = na;
        ce = ne;
        f = fn;
        accepted = true;
        lambda = std::max(lambda * 0.1, 1e-12);
        stalls = gain <= 1e-15 * (1.0 + std::abs(f)) ? stalls + 1 : 0;
      } else {
        lambda *= 10.0;
      }
    }
    if (!accepted || stalls >= 3) break;
  }
  return it;
}

}  // namespace

DualFieldModel fit_dual_field(std::span<const double> x, std::size_t dim, std::span<const double> ys,
                              RadiusDelta delta, const BasisSpec& basis, const DualFieldConfig& cfg) {
  const std::size_t m = ys.size();
  if (dim == 0 || x.size() != m * dim) throw InvalidArgument("fit_dual_field: covariate shape mismatch");
  if (basis.dim() != dim) throw InvalidArgument("fit_dual_field: basis dimension mismatch");
  if (m < std::max<std::size_t>(cfg.min_samples, 1))
    throw InsufficientSamples("insufficient on-policy samples: " + std::to_string(m) + " < " +
                              std::to_string(std::max<std::size_t>(cfg.min_samples, 1)));
  if (!(cfg.alpha_floor > 0.0)) throw InvalidArgument("fit_dual_field: alpha_floor must be positive");

  const auto P = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXd phi(static_cast<Eigen::Index>(m), P);
  {
    std::vector<double> row(basis.size());
    for (std::size_t i = 0; i < m; ++i) {
      basis.features(Covariate{x.data() + i * dim, dim}, row);
      for (Eigen::Index k = 0; k < P; ++k) phi(static_cast<Eigen::Index>(i), k) = row[static_cast<std::size_t>(k)];
    }
  }

  DualFieldModel model;
  model.basis = basis;
  model.alpha_floor = cfg.alpha_floor;
  model.diagnostics.samples = m;
  Eigen::VectorXd ca = Eigen::VectorXd::Zero(P), ce = Eigen::VectorXd::Zero(P);

  if (delta.value() == 0.0) {
    // Zero radius: the loss tends to -y as alpha grows with eta = -alpha + s(x).
    // s is the least-squares projection of -y, which minimizes the O(1/alpha) remainder.
    double max_abs = 0.0;
    for (double y : ys) max_abs = std::max(max_abs, std::abs(y));
    const double big_alpha = std::max(1e6 * (max_abs + 1.0), cfg.alpha_floor);
    Eigen::VectorXd target(static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) target[static_cast<Eigen::Index>(i)] = -ys[i];
    Eigen::MatrixXd gram = phi.transpose() * phi;
    gram.diagonal().array() += 1e-10 * std::max(1.0, gram.diagonal().maxCoeff());
    Eigen::VectorXd s = gram.ldlt().solve(phi.transpose() * target);
    if (!s.allFinite()) {
      s.setZero();
      s[0] = target.mean();
    }
    ca[0] = big_alpha;
    ce = s;
    ce[0] -= big_alpha;
    const FieldRisk risk(phi, ys, 0.0, cfg.alpha_floor, 0.0);
    model.diagnostics.risk = risk.value(ca, ce);
    model.diagnostics.risk_trace.push_back(model.diagnostics.risk);
  } else {
    SolverConfig scfg = cfg.scalar;
    scfg.alpha_floor = cfg.alpha_floor;
    DualSolution warm;
    try {
      warm = solve_dual(ys, {}, delta, scfg);
    } catch (const SolverError& e) {
      warm = e.best();
    }
    double ridge = cfg.ridge;
    if (cfg.scale_ridge && ridge > 0.0) {
      double mean = 0.0, ss = 0.0;
      for (double y : ys) mean += y / static_cast<double>(m);
      for (double y : ys) ss += (y - mean) * (y - mean);
      const double sd = std::sqrt(ss / static_cast<double>(m));
      ridge /= std::max(sd, 1e-12 * (1.0 + std::abs(mean)));
    }
    const FieldRisk risk(phi, ys, delta.value(), cfg.alpha_floor, ridge);
    ca[0] = warm.theta.alpha;
    ce[0] = warm.theta.eta;
    double f = risk.value(ca, ce);
    auto& trace = model.diagnostics.risk_trace;
    trace.push_back(f);

    if (P > 1 && cfg.optimizer == FieldOptimizer::NewtonThenSimplex) {
      model.diagnostics.newton_iterations = newton(risk, ca, ce, f, cfg.newton_iterations);
      trace.push_back(f);
    }
    if (P > 1 || cfg.optimizer == FieldOptimizer::Simplex) {
      std::vector<double> start(static_cast<std::size_t>(2 * P));
      for (Eigen::Index k = 0; k < P; ++k) {
        start[static_cast<std::size_t>(k)] = ca[k];
        start[static_cast<std::size_t>(P + k)] = ce[k];
      }
      auto objective = [&](std::span<const double> c) {
        const Eigen::Map<const Eigen::VectorXd> a(c.data(), P), e(c.data() + P, P);
        return risk.value(a, e);
      };
      NelderMeadOptions opt;
      opt.adaptive = true;
      opt.max_iterations = cfg.simplex_iterations;
      opt.x_tolerance = 1e-10;
      const double base_step = 0.1 * std::max(std::abs(ca[0]), 1e-2);
      for (int r = 0; r < std::max(1, cfg.simplex_restarts); ++r) {
        std::vector<double> step(start.size(), base_step / static_cast<double>(1 << std::min(r, 20)));
        const auto res = nelder_mead(objective, start, step, opt);
        model.diagnostics.simplex_evaluations += res.evaluations;
        if (res.value < f) {
          f = res.value;
          start = res.x;
          for (Eigen::Index k = 0; k < P; ++k) {
            ca[k] = start[static_cast<std::size_t>(k)];
            ce[k] = start[static_cast<std::size_t>(P + k)];
          }
        }
        trace.push_back(f);
      }
    }
    model.diagnostics.risk = f;
    model.diagnostics.floor_fraction = risk.floor_fraction(ca);
  }

  model.coef_alpha.assign(ca.data(), ca.data() + P);
  model.coef_eta.assign(ce.data(), ce.data() + P);
  return model;
}

DualFieldModel fit_dual_field(const Dataset& data, const Policy& selector, RadiusDelta delta, const BasisSpec& basis,
                              const DualFieldConfig& cfg) {
  const auto rows = rows_matching(data, selector);
  std::vector<double> x, y;
  x.reserve(rows.size() * data.dim);
  y.reserve(rows.size());
  for (auto i : rows) {
    const auto xi = data.covariate(i);
    x.insert(x.end(), xi.begin(), xi.end());
    y.push_back(data.rewards[i]);
  }
  return fit_dual_field(x, data.dim, y, delta, basis, cfg);
}

DualParams eval_dual_field(const DualFieldModel& model, Covariate x) {
  thread_local std::vector<double> phi;
  phi.resize(model.basis.size());
  model.basis.features(x, phi);
  double a = 0.0, e = 0.0;
  for (std::size_t k = 0; k < phi.size(); ++k) {
    a += model.coef_alpha[k] * phi[k];
    e += model.coef_eta[k] * phi[k];
  }
  return {std::max(a, model.alpha_floor), e};
}

double g_hat_target(Covariate x, double y, const DualFieldModel& field, RadiusDelta delta) {
  return loss(y, eval_dual_field(field, x), delta);
}

}  // namespace drpl
