#include "drpl/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "drpl/error.hpp"
#include "drpl/parallel.hpp"
#include "drpl/rng.hpp"

namespace drpl {
namespace {

struct TreeBuffers {
  std::vector<int> feature;
  std::vector<double> threshold;
  std::vector<std::uint32_t> left, right, value;
  std::vector<double> values;
};

class TreeBuilder {
 public:
  TreeBuilder(std::span<const double> x, std::size_t dim, std::span<const double> y, std::size_t outputs,
              const ForestConfig& cfg, Rng& rng)
      : x_(x), dim_(dim), y_(y), k_(outputs), cfg_(cfg), rng_(rng) {}

  TreeBuffers build(std::vector<std::size_t> rows) {
    grow(rows, 0);
    return std::move(out_);
  }

 private:
  std::uint32_t make_leaf(const std::vector<std::size_t>& rows) {
    const auto id = static_cast<std::uint32_t>(out_.feature.size());
    out_.feature.push_back(-1);
    out_.threshold.push_back(0.0);
    out_.left.push_back(0);
    out_.right.push_back(0);
    out_.value.push_back(static_cast<std::uint32_t>(out_.values.size()));
    const std::size_t base = out_.values.size();
    out_.values.resize(base + k_, 0.0);
    for (auto i : rows)
      for (std::size_t o = 0; o < k_; ++o) out_.values[base + o] += y_[i * k_ + o];
    for (std::size_t o = 0; o < k_; ++o) out_.values[base + o] /= static_cast<double>(rows.size());
    return id;
  }

  std::uint32_t grow(std::vector<std::size_t>& rows, int depth) {
    const std::size_t m = rows.size();
    if (depth >= cfg_.max_depth || m < 2 * cfg_.min_leaf) return make_leaf(rows);

    std::vector<std::size_t> feats(dim_);
    std::iota(feats.begin(), feats.end(), 0);
    std::size_t nf = dim_;
    const std::size_t want = cfg_.max_features;
    if (want > 0 && want < dim_) {
      for (std::size_t j = 0; j < want; ++j) {
        std::uniform_int_distribution<std::size_t> pick(j, dim_ - 1);
        std::swap(feats[j], feats[pick(rng_)]);
      }
      nf = want;
      std::sort(feats.begin(), feats.begin() + static_cast<std::ptrdiff_t>(nf));
    }

    std::vector<double> total(k_, 0.0);
    for (auto i : rows)
      for (std::size_t o = 0; o < k_; ++o) total[o] += y_[i * k_ + o];
    double parent = 0.0;
    for (double t : total) parent += t * t;
    parent /= static_cast<double>(m);

    double best_gain = 1e-12 * (1.0 + std::abs(parent));
    if (cfg_.split_penalty > 0.0) {
      double sq = 0.0;
      for (auto i : rows)
        for (std::size_t o = 0; o < k_; ++o) sq += y_[i * k_ + o] * y_[i * k_ + o];
      const double var = std::max(sq - parent, 0.0) / static_cast<double>(m - 1);
      best_gain = std::max(best_gain, cfg_.split_penalty * std::log(static_cast<double>(m)) * var);
    }
    int best_feat = -1;
    double best_thr = 0.0;
    std::vector<std::pair<double, std::size_t>> order(m);
    std::vector<double> left(k_);
    for (std::size_t fi = 0; fi < nf; ++fi) {
      const std::size_t j = feats[fi];
      for (std::size_t r = 0; r < m; ++r) order[r] = {x_[rows[r] * dim_ + j], rows[r]};
      std::sort(order.begin(), order.end());
      if (order.front().first == order.back().first) continue;
      std::fill(left.begin(), left.end(), 0.0);
      for (std::size_t r = 0; r + 1 < m; ++r) {
        const std::size_t i = order[r].second;
        for (std::size_t o = 0; o < k_; ++o) left[o] += y_[i * k_ + o];
        const std::size_t nl = r + 1, nr = m - nl;
        if (order[r].first == order[r + 1].first) continue;
        if (nl < cfg_.min_leaf || nr < cfg_.min_leaf) continue;
        double score = 0.0;
        for (std::size_t o = 0; o < k_; ++o) {
          const double rt = total[o] - left[o];
          score += left[o] * left[o] / static_cast<double>(nl) + rt * rt / static_cast<double>(nr);
        }
        const double gain = score - parent;
        if (gain > best_gain) {
          best_gain = gain;
          best_feat = static_cast<int>(j);
          best_thr = 0.5 * (order[r].first + order[r + 1].first);
        }
      }
    }
    if (best_feat < 0) return make_leaf(rows);

    std::vector<std::size_t> lrows, rrows;
    for (auto i : rows) (x_[i * dim_ + static_cast<std::size_t>(best_feat)] <= best_thr ? lrows : rrows).push_back(i);
    rows.clear();
    rows.shrink_to_fit();

    const auto id = static_cast<std::uint32_t>(out_.feature.size());
    out_.feature.push_back(best_feat);
    out_.threshold.push_back(best_thr);
    out_.left.push_back(0);
    out_.right.push_back(0);
    out_.value.push_back(0);
    const auto l = grow(lrows, depth + 1);
    const auto r = grow(rrows, depth + 1);
    out_.left[id] = l;
    out_.right[id] = r;
    return id;
  }

  std::span<const double> x_;
  std::size_t dim_;
  std::span<const double> y_;
  std::size_t k_;
  const ForestConfig& cfg_;
  Rng& rng_;
  TreeBuffers out_;
};

}  // namespace

BaggedTrees BaggedTrees::fit(std::span<const double> x, std::size_t dim, std::span<const double> targets,
                             std::size_t outputs, const ForestConfig& cfg) {
  if (dim == 0 || outputs == 0) throw InvalidArgument("bagged trees: empty shape");
  const std::size_t n = x.size() / dim;
  if (n == 0 || x.size() != n * dim || targets.size() != n * outputs)
    throw InvalidArgument("bagged trees: inconsistent training data");
  if (cfg.num_trees < 1) throw InvalidArgument("bagged trees: need at least one tree");

  const auto T = static_cast<std::size_t>(cfg.num_trees);
  std::vector<TreeBuffers> trees(T);
  parallel_for(T, [&](std::size_t t) {
    Rng rng(derive_seed(cfg.seed, {t}));
    std::vector<std::size_t> rows(n);
    if (n == 1) {
      rows[0] = 0;
    } else {
      std::uniform_int_distribution<std::size_t> draw(0, n - 1);
      for (auto& r : rows) r = draw(rng);
      std::sort(rows.begin(), rows.end());
    }
    trees[t] = TreeBuilder(x, dim, targets, outputs, cfg, rng).build(std::move(rows));
  });

  BaggedTrees f;
  f.dim_ = dim;
  f.outputs_ = outputs;
  for (auto& tb : trees) {
    const auto node_base = static_cast<std::uint32_t>(f.nodes_.size());
    const auto value_base = static_cast<std::uint32_t>(f.values_.size());
    f.roots_.push_back(node_base);
    for (std::size_t k = 0; k < tb.feature.size(); ++k) {
      Node nd;
      nd.feature = tb.feature[k];
      nd.threshold = tb.threshold[k];
      nd.left = node_base + tb.left[k];
      nd.right = node_base + tb.right[k];
      nd.value = value_base + tb.value[k];
      f.nodes_.push_back(nd);
    }
    f.values_.insert(f.values_.end(), tb.values.begin(), tb.values.end());
  }
  return f;
}

void BaggedTrees::predict(Covariate x, std::span<double> out) const {
  if (x.size() != dim_ || out.size() != outputs_) throw InvalidArgument("bagged trees: shape mismatch in predict");
  std::fill(out.begin(), out.end(), 0.0);
  for (auto root : roots_) {
    const Node* nd = &nodes_[root];
    while (nd->feature >= 0) nd = &nodes_[x[static_cast<std::size_t>(nd->feature)] <= nd->threshold ? nd->left : nd->right];
    for (std::size_t o = 0; o < outputs_; ++o) out[o] += values_[nd->value + o];
  }
  for (auto& v : out) v /= static_cast<double>(roots_.size());
}

double BaggedTrees::predict_scalar(Covariate x) const {
  double v = 0.0;
  predict(x, {&v, 1});
  return v;
}

}  // namespace drpl
