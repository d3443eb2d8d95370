#include "drpl/regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "drpl/error.hpp"

namespace drpl {

RegressionModel RegressionModel::fit(std::span<const double> x, std::size_t dim, std::span<const double> targets,
                                     const RegressionConfig& cfg, std::uint64_t seed) {
  const std::size_t n = targets.size();
  if (n == 0) throw InvalidArgument("fit_regression: no training pairs");
  if (dim == 0 || x.size() != n * dim) throw InvalidArgument("fit_regression: covariate shape mismatch");
  for (double t : targets)
    if (!std::isfinite(t)) throw InvalidArgument("fit_regression: non-finite target");

  RegressionModel m;
  m.kind_ = cfg.kind;
  m.dim_ = dim;
  double mean = 0.0;
  for (double t : targets) mean += t;
  mean /= static_cast<double>(n);
  m.constant_ = mean;

  switch (cfg.kind) {
    case RegressionKind::Constant:
      break;
    case RegressionKind::BaggedTrees: {
      ForestConfig fc = cfg.forest;
      fc.seed = seed;
      m.forest_ = std::make_shared<BaggedTrees>(BaggedTrees::fit(x, dim, targets, 1, fc));
      break;
    }
    case RegressionKind::NadarayaWatson: {
      m.train_x_ = std::make_shared<std::vector<double>>(x.begin(), x.end());
      m.train_y_ = std::make_shared<std::vector<double>>(targets.begin(), targets.end());
      m.inv_bandwidth_.assign(dim, 0.0);
      const double rate = std::pow(static_cast<double>(n), -1.0 / (static_cast<double>(dim) + 4.0));
      for (std::size_t j = 0; j < dim; ++j) {
        double mu = 0.0, var = 0.0;
        for (std::size_t i = 0; i < n; ++i) mu += x[i * dim + j];
        mu /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) var += (x[i * dim + j] - mu) * (x[i * dim + j] - mu);
        const double sd = n > 1 ? std::sqrt(var / static_cast<double>(n - 1)) : 0.0;
        const double h = cfg.bandwidth_scale * 1.06 * sd * rate;
        // A constant coordinate carries no information; ignore it.
        m.inv_bandwidth_[j] = h > 0.0 ? 1.0 / h : 0.0;
      }
      break;
    }
  }
  return m;
}

RegressionModel RegressionModel::constant(std::size_t dim, double value) {
  if (!std::isfinite(value)) throw InvalidArgument("constant regression: non-finite value");
  RegressionModel m;
  m.kind_ = RegressionKind::Constant;
  m.dim_ = dim;
  m.constant_ = value;
  return m;
}

double RegressionModel::predict(Covariate x) const {
  switch (kind_) {
    case RegressionKind::Constant:
      return constant_;
    case RegressionKind::BaggedTrees:
      return forest_->predict_scalar(x);
    case RegressionKind::NadarayaWatson: {
      if (x.size() != dim_) throw InvalidArgument("regression predict: dimension mismatch");
      const auto& tx = *train_x_;
      const auto& ty = *train_y_;
      const std::size_t n = ty.size();
      // Log-sum-exp weighting keeps far-away queries finite.
      double best = std::numeric_limits<double>::infinity();
      thread_local std::vector<double> q;
      q.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < dim_; ++j) {
          const double z = (x[j] - tx[i * dim_ + j]) * inv_bandwidth_[j];
          s += z * z;
        }
        q[i] = 0.5 * s;
        best = std::min(best, q[i]);
      }
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double w = std::exp(best - q[i]);
        num += w * ty[i];
        den += w;
      }
      return num / den;
    }
  }
  return constant_;
}

}  // namespace drpl
