#include "drpl/policy_tree.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <nlohmann/json.hpp>
#include <string>

#include "drpl/error.hpp"

namespace drpl {

PolicyTree PolicyTree::leaf(int action) {
  if (action < 0) throw InvalidArgument("policy tree: negative action");
  PolicyNode n;
  n.action = action;
  return PolicyTree({n});
}

PolicyTree PolicyTree::split(int feature, double threshold, const PolicyTree& left, const PolicyTree& right) {
  if (feature < 0) throw InvalidArgument("policy tree: negative feature");
  if (!std::isfinite(threshold)) throw InvalidArgument("policy tree: non-finite threshold");
  std::vector<PolicyNode> nodes;
  PolicyNode root;
  root.feature = feature;
  root.threshold = threshold;
  nodes.push_back(root);
  nodes.insert(nodes.end(), left.nodes_.begin(), left.nodes_.end());
  nodes.insert(nodes.end(), right.nodes_.begin(), right.nodes_.end());
  return from_preorder(nodes);
}

PolicyTree PolicyTree::from_preorder(const std::vector<PolicyNode>& in) {
  if (in.empty()) throw InvalidArgument("policy tree: no nodes");
  std::vector<PolicyNode> nodes(in.size());
  std::size_t pos = 0;
  std::function<std::size_t(int)> build = [&](int level) -> std::size_t {
    if (pos >= in.size()) throw InvalidArgument("policy tree: truncated pre-order node list");
    if (level > 64) throw InvalidArgument("policy tree: nesting too deep");
    const std::size_t id = pos++;
    PolicyNode n;
    n.feature = in[id].feature;
    n.threshold = in[id].threshold;
    n.action = in[id].action;
    if (n.is_leaf()) {
      if (n.action < 0) throw InvalidArgument("policy tree: negative action");
      n.feature = -1;
      n.threshold = 0.0;
    } else {
      if (!std::isfinite(n.threshold)) throw InvalidArgument("policy tree: non-finite threshold");
      n.action = 0;
      n.left = build(level + 1);
      n.right = build(level + 1);
    }
    nodes[id] = n;
    return id;
  };
  build(0);
  if (pos != in.size()) throw InvalidArgument("policy tree: trailing nodes after a complete tree");
  return PolicyTree(std::move(nodes));
}

int PolicyTree::action(Covariate x) const {
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const auto f = static_cast<std::size_t>(nodes_[i].feature);
    if (f >= x.size()) throw InvalidArgument("policy tree: covariate has too few features");
    i = x[f] <= nodes_[i].threshold ? nodes_[i].left : nodes_[i].right;
  }
  return nodes_[i].action;
}

Policy PolicyTree::as_policy() const {
  return [tree = *this](Covariate x) { return tree.action(x); };
}

int PolicyTree::depth() const {
  std::function<int(std::size_t)> rec = [&](std::size_t i) -> int {
    if (nodes_[i].is_leaf()) return 0;
    return 1 + std::max(rec(nodes_[i].left), rec(nodes_[i].right));
  };
  return rec(0);
}

int PolicyTree::max_feature() const {
  int m = -1;
  for (const auto& n : nodes_) m = std::max(m, n.feature);
  return m;
}

int PolicyTree::max_action() const {
  int m = 0;
  for (const auto& n : nodes_)
    if (n.is_leaf()) m = std::max(m, n.action);
  return m;
}

std::string PolicyTree::to_json() const {
  nlohmann::ordered_json j;
  j["depth"] = depth();
  auto arr = nlohmann::ordered_json::array();
  for (const auto& n : nodes_) {
    nlohmann::ordered_json o;
    if (n.is_leaf()) {
      o["action"] = n.action + 1;
    } else {
      o["feature"] = n.feature + 1;
      o["threshold"] = n.threshold;
    }
    arr.push_back(std::move(o));
  }
  j["nodes"] = std::move(arr);
  return j.dump();
}

PolicyTree PolicyTree::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("policy JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("policy JSON: top level must be an object");
  if (!j.contains("nodes") || !j["nodes"].is_array()) throw ParseError("policy JSON: missing \"nodes\" array");
  std::vector<PolicyNode> nodes;
  const auto& arr = j["nodes"];
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto& o = arr[i];
    const std::string where = "policy JSON: nodes[" + std::to_string(i) + "]";
    if (!o.is_object()) throw ParseError(where + " is not an object");
    PolicyNode n;
    if (o.contains("action")) {
      if (!o["action"].is_number_integer() || o["action"].get<long long>() < 1)
        throw ParseError(where + ": \"action\" must be a positive integer");
      n.action = static_cast<int>(o["action"].get<long long>() - 1);
    } else if (o.contains("feature") && o.contains("threshold")) {
      if (!o["feature"].is_number_integer() || o["feature"].get<long long>() < 1)
        throw ParseError(where + ": \"feature\" must be a positive integer");
      if (!o["threshold"].is_number()) throw ParseError(where + ": \"threshold\" must be a number");
      n.feature = static_cast<int>(o["feature"].get<long long>() - 1);
      n.threshold = o["threshold"].get<double>();
    } else {
      throw ParseError(where + ": expected {\"action\"} or {\"feature\", \"threshold\"}");
    }
    nodes.push_back(n);
  }
  PolicyTree tree;
  try {
    tree = from_preorder(nodes);
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("policy JSON: ") + e.what());
  }
  if (j.contains("depth")) {
    if (!j["depth"].is_number_integer()) throw ParseError("policy JSON: \"depth\" must be an integer");
    if (tree.depth() > j["depth"].get<int>()) throw ParseError("policy JSON: tree is deeper than its declared depth");
  }
  return tree;
}

bool operator==(const PolicyTree& a, const PolicyTree& b) {
  if (a.nodes_.size() != b.nodes_.size()) return false;
  for (std::size_t i = 0; i < a.nodes_.size(); ++i) {
    const auto &x = a.nodes_[i], &y = b.nodes_[i];
    if (x.feature != y.feature || x.threshold != y.threshold || x.action != y.action) return false;
  }
  return true;
}

}  // namespace drpl
