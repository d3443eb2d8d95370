#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "drpl/dataset.hpp"

namespace drpl {

/// One node of a policy tree. Internal nodes send x[feature] <= threshold to
/// the left child; leaves carry a 0-based action.
struct PolicyNode {
  int feature = -1;
  double threshold = 0.0;
  int action = 0;
  std::size_t left = 0;
  std::size_t right = 0;

  bool is_leaf() const { return feature < 0; }
};

/// Depth-limited axis-aligned decision tree over covariates, stored in
/// pre-order (root first, then the full left subtree, then the right one).
class PolicyTree {
 public:
  PolicyTree() : PolicyTree(leaf(0)) {}

  static PolicyTree leaf(int action);
  static PolicyTree split(int feature, double threshold, const PolicyTree& left, const PolicyTree& right);

  /// Rebuilds child links from a pre-order node list (only feature, threshold
  /// and action are read). Throws InvalidArgument on a malformed list.
  static PolicyTree from_preorder(const std::vector<PolicyNode>& nodes);

  int action(Covariate x) const;
  int operator()(Covariate x) const { return action(x); }
  Policy as_policy() const;

  int depth() const;
  /// Largest feature index used, or -1 for a single leaf.
  int max_feature() const;
  int max_action() const;
  const std::vector<PolicyNode>& nodes() const { return nodes_; }

  /// {"depth": D, "nodes": [{"feature": f, "threshold": t} | {"action": a}]} in
  /// pre-order with 1-based features and actions.
  std::string to_json() const;
  /// Inverse of to_json; throws ParseError naming the offending node.
  static PolicyTree from_json(const std::string& text);

  friend bool operator==(const PolicyTree& a, const PolicyTree& b);

 private:
  explicit PolicyTree(std::vector<PolicyNode> nodes) : nodes_(std::move(nodes)) {}
  std::vector<PolicyNode> nodes_;
};

}  // namespace drpl
