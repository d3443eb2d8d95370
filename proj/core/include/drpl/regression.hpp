#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "drpl/dataset.hpp"
#include "drpl/forest.hpp"

namespace drpl {

enum class RegressionKind { BaggedTrees, NadarayaWatson, Constant };

struct RegressionConfig {
  RegressionKind kind = RegressionKind::BaggedTrees;
  ForestConfig forest{64, 6, 5, 0, 0, 3.0};
  /// Multiplier on the Silverman bandwidth (kernel kind only).
  double bandwidth_scale = 1.0;
};

/// Conditional-mean model E[target | x].
class RegressionModel {
 public:
  /// x is row-major n x dim. Throws InvalidArgument on empty input.
  static RegressionModel fit(std::span<const double> x, std::size_t dim, std::span<const double> targets,
                             const RegressionConfig& cfg, std::uint64_t seed);

  /// Model predicting `value` everywhere.
  static RegressionModel constant(std::size_t dim, double value);

  RegressionKind kind() const { return kind_; }
  double predict(Covariate x) const;

 private:
  RegressionKind kind_ = RegressionKind::Constant;
  std::size_t dim_ = 0;
  double constant_ = 0.0;
  std::shared_ptr<const BaggedTrees> forest_;
  std::shared_ptr<const std::vector<double>> train_x_;
  std::shared_ptr<const std::vector<double>> train_y_;
  std::vector<double> inv_bandwidth_;
};

}  // namespace drpl
