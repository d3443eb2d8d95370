#include "drpl/propensity.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "drpl/error.hpp"

namespace drpl {

void clip_to_simplex(std::vector<double>& p, double floor) {
  const std::size_t M = p.size();
  if (M == 0) return;
  for (auto& v : p) v = std::isfinite(v) ? std::max(v, 0.0) : 0.0;
  std::vector<bool> clamped(M, false);
  for (std::size_t round = 0; round <= M; ++round) {
    double free_mass = 0.0;
    std::size_t n_clamped = 0;
    for (std::size_t a = 0; a < M; ++a) {
      if (clamped[a])
        ++n_clamped;
      else
        free_mass += p[a];
    }
    const double target = 1.0 - floor * static_cast<double>(n_clamped);
    bool changed = false;
    for (std::size_t a = 0; a < M; ++a) {
      if (clamped[a]) {
        p[a] = floor;
        continue;
      }
      p[a] = free_mass > 0.0 ? p[a] * target / free_mass : target / static_cast<double>(M - n_clamped);
    }
    for (std::size_t a = 0; a < M; ++a) {
      if (!clamped[a] && p[a] < floor) {
        clamped[a] = true;
        changed = true;
      }
    }
    if (!changed) return;
  }
}

namespace {

// Multinomial logistic regression on standardized [1, x] by damped Newton.
std::vector<double> fit_softmax(const std::vector<double>& z, std::size_t p, const Dataset& data, double ridge,
                                int max_iter) {
  const std::size_t n = data.size(), M = data.num_actions, P = M * p;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(P));
  auto nll = [&](const Eigen::VectorXd& coef) {
    double total = 0.0;
    std::vector<double> s(M);
    for (std::size_t i = 0; i < n; ++i) {
      double mx = -1e300;
      for (std::size_t a = 0; a < M; ++a) {
        double v = 0.0;
        for (std::size_t k = 0; k < p; ++k) v += coef[static_cast<Eigen::Index>(a * p + k)] * z[i * p + k];
        s[a] = v;
        mx = std::max(mx, v);
      }
      double lse = 0.0;
      for (double v : s) lse += std::exp(v - mx);
      total += mx + std::log(lse) - s[static_cast<std::size_t>(data.actions[i])];
    }
    return total / static_cast<double>(n) + 0.5 * ridge * coef.squaredNorm();
  };
  double f = nll(w);
  std::vector<double> prob(M), s(M);
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd g = ridge * w;
    Eigen::MatrixXd H = ridge * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(P), static_cast<Eigen::Index>(P));
    for (std::size_t i = 0; i < n; ++i) {
      double mx = -1e300;
      for (std::size_t a = 0; a < M; ++a) {
        double v = 0.0;
        for (std::size_t k = 0; k < p; ++k) v += w[static_cast<Eigen::Index>(a * p + k)] * z[i * p + k];
        s[a] = v;
        mx = std::max(mx, v);
      }
      double tot = 0.0;
      for (std::size_t a = 0; a < M; ++a) tot += (prob[a] = std::exp(s[a] - mx));
      for (auto& v : prob) v /= tot;
      const double inv_n = 1.0 / static_cast<double>(n);
      for (std::size_t a = 0; a < M; ++a) {
        const double r = prob[a] - (static_cast<std::size_t>(data.actions[i]) == a ? 1.0 : 0.0);
        for (std::size_t k = 0; k < p; ++k) g[static_cast<Eigen::Index>(a * p + k)] += inv_n * r * z[i * p + k];
        for (std::size_t b = 0; b < M; ++b) {
          const double c = inv_n * prob[a] * ((a == b ? 1.0 : 0.0) - prob[b]);
          if (c == 0.0) continue;
          for (std::size_t k = 0; k < p; ++k)
            for (std::size_t l = 0; l < p; ++l)
              H(static_cast<Eigen::Index>(a * p + k), static_cast<Eigen::Index>(b * p + l)) += c * z[i * p + k] * z[i * p + l];
        }
      }
    }
    if (g.lpNorm<Eigen::Infinity>() < 1e-10) break;
    const Eigen::VectorXd step = H.ldlt().solve(-g);
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
      const Eigen::VectorXd cand = w + t * step;
      const double fc = nll(cand);
      if (fc <= f - 1e-4 * t * (-g.dot(step))) {
        moved = f - fc > 1e-14 * (1.0 + std::abs(f));
        w = cand;
        f = fc;
        break;
      }
    }
    if (!moved) break;
  }
  return {w.data(), w.data() + w.size()};
}

}  // namespace

PropensityModel PropensityModel::fit(const Dataset& data, const PropensityConfig& cfg, std::uint64_t seed) {
  data.validate();
  if (data.empty()) throw InvalidArgument("fit_propensity: empty dataset");
  const std::size_t M = data.num_actions;
  if (!(cfg.clip_floor > 0.0) || cfg.clip_floor * static_cast<double>(M) >= 1.0)
    throw InvalidArgument("fit_propensity: clip_floor must lie in (0, 1/M)");

  PropensityModel m;
  m.kind_ = cfg.kind;
  m.num_actions_ = M;
  m.dim_ = data.dim;
  m.clip_floor_ = cfg.clip_floor;

  std::vector<std::size_t> counts(M, 0);
  for (int a : data.actions) ++counts[static_cast<std::size_t>(a)];
  for (std::size_t a = 0; a < M; ++a)
    if (counts[a] == 0)
      m.warnings_.push_back("action " + std::to_string(a + 1) + " absent from propensity training data; its probability is floored");

  const std::size_t n = data.size(), d = data.dim;
  switch (cfg.kind) {
    case PropensityKind::MultinomialLogistic: {
      m.center_.assign(d, 0.0);
      m.scale_.assign(d, 1.0);
      for (std::size_t j = 0; j < d; ++j) {
        double mean = 0.0, var = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += data.x[i * d + j];
        mean /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) var += (data.x[i * d + j] - mean) * (data.x[i * d + j] - mean);
        var /= static_cast<double>(n);
        m.center_[j] = mean;
        m.scale_[j] = var > 0.0 ? std::sqrt(var) : 1.0;
      }
      const std::size_t p = d + 1;
      std::vector<double> z(n * p);
      for (std::size_t i = 0; i < n; ++i) {
        z[i * p] = 1.0;
        for (std::size_t j = 0; j < d; ++j) z[i * p + 1 + j] = (data.x[i * d + j] - m.center_[j]) / m.scale_[j];
      }
      m.coef_ = fit_softmax(z, p, data, cfg.ridge, cfg.max_newton_iterations);
      break;
    }
    case PropensityKind::BaggedTrees: {
      std::vector<double> onehot(n * M, 0.0);
      for (std::size_t i = 0; i < n; ++i) onehot[i * M + static_cast<std::size_t>(data.actions[i])] = 1.0;
      ForestConfig fc = cfg.forest;
      fc.seed = seed;
      m.forest_ = std::make_shared<BaggedTrees>(BaggedTrees::fit(data.x, d, onehot, M, fc));
      break;
    }
    case PropensityKind::Fixed:
      throw InvalidArgument("fit_propensity: use PropensityModel::fixed for a known propensity");
  }
  return m;
}

PropensityModel PropensityModel::fixed(std::size_t num_actions, std::function<double(Covariate, int)> fn,
                                       double clip_floor) {
  if (num_actions == 0) throw InvalidArgument("fixed propensity: zero actions");
  if (!(clip_floor > 0.0) || clip_floor * static_cast<double>(num_actions) >= 1.0)
    throw InvalidArgument("fixed propensity: clip_floor must lie in (0, 1/M)");
  PropensityModel m;
  m.kind_ = PropensityKind::Fixed;
  m.num_actions_ = num_actions;
  m.clip_floor_ = clip_floor;
  m.fixed_ = std::move(fn);
  return m;
}

void PropensityModel::raw_probs(Covariate x, std::vector<double>& p) const {
  const std::size_t M = num_actions_;
  p.assign(M, 0.0);
  switch (kind_) {
    case PropensityKind::MultinomialLogistic: {
      const std::size_t d = dim_, q = d + 1;
      double mx = -1e300;
      for (std::size_t a = 0; a < M; ++a) {
        double v = coef_[a * q];
        for (std::size_t j = 0; j < d; ++j) v += coef_[a * q + 1 + j] * (x[j] - center_[j]) / scale_[j];
        p[a] = v;
        mx = std::max(mx, v);
      }
      double tot = 0.0;
      for (auto& v : p) tot += (v = std::exp(v - mx));
      for (auto& v : p) v /= tot;
      break;
    }
    case PropensityKind::BaggedTrees:
      forest_->predict(x, p);
      break;
    case PropensityKind::Fixed:
      for (std::size_t a = 0; a < M; ++a) p[a] = fixed_(x, static_cast<int>(a));
      break;
  }
}

std::vector<double> PropensityModel::predict_all(Covariate x) const {
  std::vector<double> p;
  raw_probs(x, p);
  clip_to_simplex(p, clip_floor_);
  return p;
}

double PropensityModel::predict(Covariate x, int action) const {
  if (action < 0 || static_cast<std::size_t>(action) >= num_actions_) throw InvalidArgument("predict_propensity: bad action");
  return predict_all(x)[static_cast<std::size_t>(action)];
}

std::vector<double> fit_logistic(std::span<const double> z, std::size_t dim, std::span<const int> labels, double ridge,
                                 int max_iterations) {
  const std::size_t n = labels.size(), p = dim + 1;
  if (n == 0 || z.size() != n * dim) throw InvalidArgument("fit_logistic: inconsistent input");
  Eigen::MatrixXd Z(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  Eigen::VectorXd t(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    Z(static_cast<Eigen::Index>(i), 0) = 1.0;
    for (std::size_t j = 0; j < dim; ++j) Z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j + 1)) = z[i * dim + j];
    t[static_cast<Eigen::Index>(i)] = labels[i] ? 1.0 : 0.0;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  auto objective = [&](const Eigen::VectorXd& c) {
    const Eigen::VectorXd s = Z * c;
    double f = 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      const double v = s[i];
      const double softplus = v > 0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
      f += softplus - t[i] * v;
    }
    return f * inv_n + 0.5 * ridge * c.tail(c.size() - 1).squaredNorm();
  };
  double f = objective(w);
  for (int it = 0; it < max_iterations; ++it) {
    const Eigen::VectorXd s = Z * w;
    Eigen::VectorXd mu(s.size()), wt(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      mu[i] = 1.0 / (1.0 + std::exp(-s[i]));
      wt[i] = mu[i] * (1.0 - mu[i]) * inv_n;
    }
    Eigen::VectorXd g = Z.transpose() * (mu - t) * inv_n;
    Eigen::MatrixXd H = Z.transpose() * wt.asDiagonal() * Z;
    for (Eigen::Index k = 1; k < static_cast<Eigen::Index>(p); ++k) {
      g[k] += ridge * w[k];
      H(k, k) += ridge;
    }
    H.diagonal().array() += 1e-12;
    if (g.lpNorm<Eigen::Infinity>() < 1e-10) break;
    const Eigen::VectorXd step = H.ldlt().solve(-g);
    double tstep = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 40; ++ls, tstep *= 0.5) {
      const Eigen::VectorXd cand = w + tstep * step;
      const double fc = objective(cand);
      if (fc <= f - 1e-4 * tstep * (-g.dot(step))) {
        moved = f - fc > 1e-14 * (1.0 + std::abs(f));
        w = cand;
        f = fc;
        break;
      }
    }
    if (!moved) break;
  }
  return {w.data(), w.data() + w.size()};
}

double logistic_logit(std::span<const double> coef, std::span<const double> z) {
  double v = coef[0];
  for (std::size_t j = 0; j < z.size(); ++j) v += coef[j + 1] * z[j];
  return v;
}

}  // namespace drpl
