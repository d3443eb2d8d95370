#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "drpl/dataset.hpp"

namespace drpl {

struct ForestConfig {
  int num_trees = 64;
  int max_depth = 6;
  std::size_t min_leaf = 5;
  /// Features tried per split; 0 means all of them (plain bagging).
  std::size_t max_features = 0;
  std::uint64_t seed = 0;
  /// A split must cut the node's squared error by more than
  /// split_penalty * log(m) * (node variance); 0 accepts any improvement.
  double split_penalty = 0.0;
};

/// Bootstrap-aggregated CART regression trees with vector-valued leaves
/// (squared-error splits summed over outputs). A one-hot target turns it into
/// a class-probability estimator.
class BaggedTrees {
 public:
  /// x is row-major n x dim; targets is row-major n x outputs.
  static BaggedTrees fit(std::span<const double> x, std::size_t dim, std::span<const double> targets,
                         std::size_t outputs, const ForestConfig& cfg);

  std::size_t outputs() const { return outputs_; }
  std::size_t num_trees() const { return roots_.size(); }
  void predict(Covariate x, std::span<double> out) const;
  double predict_scalar(Covariate x) const;

 private:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    std::uint32_t value = 0;  // offset into values_
  };
  std::size_t dim_ = 0;
  std::size_t outputs_ = 1;
  std::vector<Node> nodes_;
  std::vector<double> values_;
  std::vector<std::uint32_t> roots_;
};

}  // namespace drpl
