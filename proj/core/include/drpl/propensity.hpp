#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "drpl/dataset.hpp"
#include "drpl/forest.hpp"

namespace drpl {

enum class PropensityKind { MultinomialLogistic, BaggedTrees, Fixed };

struct PropensityConfig {
  PropensityKind kind = PropensityKind::BaggedTrees;
  /// Lower bound enforced on every predicted probability; must be < 1/M.
  double clip_floor = 0.01;
  double ridge = 1e-3;
  int max_newton_iterations = 50;
  ForestConfig forest{64, 6, 25, 0, 0, 2.0};
};

/// Estimated logging policy pi_0(a | x), clipped to [clip_floor, 1] and
/// renormalized so every row is a proper distribution.
class PropensityModel {
 public:
  static PropensityModel fit(const Dataset& data, const PropensityConfig& cfg, std::uint64_t seed);

  /// Wraps a known propensity function (e.g. the true logging policy).
  /// Values are clipped and renormalized like fitted ones.
  static PropensityModel fixed(std::size_t num_actions, std::function<double(Covariate, int)> fn,
                               double clip_floor = 0.01);

  std::size_t num_actions() const { return num_actions_; }
  double clip_floor() const { return clip_floor_; }
  PropensityKind kind() const { return kind_; }

  double predict(Covariate x, int action) const;
  std::vector<double> predict_all(Covariate x) const;

  /// Non-fatal issues found while fitting (e.g. an action absent from the data).
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  void raw_probs(Covariate x, std::vector<double>& p) const;

  PropensityKind kind_ = PropensityKind::Fixed;
  std::size_t num_actions_ = 0;
  std::size_t dim_ = 0;
  double clip_floor_ = 0.01;
  std::vector<double> center_, scale_;
  std::vector<double> coef_;  // M x (d + 1), row-major
  std::shared_ptr<const BaggedTrees> forest_;
  std::function<double(Covariate, int)> fixed_;
  std::vector<std::string> warnings_;
};

/// Projects p onto {q : q_a >= floor, sum q = 1}, scaling the unclipped
/// entries proportionally.
void clip_to_simplex(std::vector<double>& p, double floor);

/// Binary logistic discriminator with ridge penalty on features [1, z].
/// Returns coefficients; used for density-ratio estimation.
std::vector<double> fit_logistic(std::span<const double> z, std::size_t dim, std::span<const int> labels,
                                 double ridge, int max_iterations);
double logistic_logit(std::span<const double> coef, std::span<const double> z);

}  // namespace drpl
