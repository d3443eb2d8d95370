#include "drpl/tree_search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "drpl/error.hpp"
#include "drpl/parallel.hpp"

namespace drpl {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Range add on [l, size) with a global max, over a fixed set of positions.
class MaxAddTree {
 public:
  void reset(const std::vector<double>& init) {
    count_ = init.size();
    size_ = 1;
    while (size_ < count_) size_ <<= 1;
    mx_.assign(2 * size_, kNegInf);
    lz_.assign(2 * size_, 0.0);
    for (std::size_t i = 0; i < count_; ++i) mx_[size_ + i] = init[i];
    for (std::size_t v = size_ - 1; v >= 1; --v) mx_[v] = std::max(mx_[2 * v], mx_[2 * v + 1]);
  }
  void add_suffix(std::size_t l, double value) {
    if (l < count_) add(1, 0, size_ - 1, l, value);
  }
  double max() const { return mx_[1]; }

 private:
  void add(std::size_t v, std::size_t nl, std::size_t nr, std::size_t l, double value) {
    if (nr < l) return;
    if (l <= nl) {
      mx_[v] += value;
      lz_[v] += value;
      return;
    }
    const std::size_t mid = (nl + nr) / 2;
    add(2 * v, nl, mid, l, value);
    add(2 * v + 1, mid + 1, nr, l, value);
    mx_[v] = std::max(mx_[2 * v], mx_[2 * v + 1]) + lz_[v];
  }
  std::size_t count_ = 0, size_ = 1;
  std::vector<double> mx_, lz_;
};

struct Candidate {
  double value = kNegInf;
  PolicyTree tree;
};

class Searcher {
 public:
  Searcher(const ScoreMatrix& s, std::span<const double> x, std::size_t dim) : s_(s), x_(x), d_(dim), M_(s.num_actions) {
    double scale = 0.0;
    for (std::size_t i = 0; i < s.n; ++i) {
      double m = 0.0;
      for (std::size_t a = 0; a < M_; ++a) m = std::max(m, std::abs(s.at(i, a)));
      scale += m;
    }
    tol_ = 1e-12 * (1.0 + scale);
  }

  double tol() const { return tol_; }
  double xv(std::size_t i, std::size_t j) const { return x_[i * d_ + j]; }

  std::vector<std::size_t> sorted_by(std::vector<std::size_t> rows, std::size_t j) const {
    std::stable_sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) { return xv(a, j) < xv(b, j); });
    return rows;
  }

  double threshold(double lo, double hi) const {
    const double mid = 0.5 * (lo + hi);
    return mid < hi ? mid : lo;
  }

  Candidate leaf(const std::vector<std::size_t>& rows) const {
    std::vector<double> t(M_, 0.0);
    for (auto i : rows)
      for (std::size_t a = 0; a < M_; ++a) t[a] += s_.at(i, a);
    std::size_t best = 0;
    for (std::size_t a = 1; a < M_; ++a)
      if (t[a] > t[best]) best = a;
    return {t[best], PolicyTree::leaf(static_cast<int>(best))};
  }

  Candidate depth1(const std::vector<std::size_t>& rows) const {
    Candidate best = leaf(rows);
    const std::size_t m = rows.size();
    if (m < 2) return best;
    std::vector<double> total(M_, 0.0), pre(M_);
    for (auto i : rows)
      for (std::size_t a = 0; a < M_; ++a) total[a] += s_.at(i, a);
    double best_split = kNegInf;
    int bf = -1;
    double bthr = 0.0;
    std::size_t bl = 0, br = 0;
    for (std::size_t j = 0; j < d_; ++j) {
      const auto order = sorted_by(rows, j);
      std::fill(pre.begin(), pre.end(), 0.0);
      for (std::size_t t = 1; t < m; ++t) {
        for (std::size_t a = 0; a < M_; ++a) pre[a] += s_.at(order[t - 1], a);
        const double lo = xv(order[t - 1], j), hi = xv(order[t], j);
        if (!(lo < hi)) continue;
        std::size_t la = 0, ra = 0;
        for (std::size_t a = 1; a < M_; ++a) {
          if (pre[a] > pre[la]) la = a;
          if (total[a] - pre[a] > total[ra] - pre[ra]) ra = a;
        }
        const double v = pre[la] + (total[ra] - pre[ra]);
        if (v > best_split + tol_) {
          best_split = v;
          bf = static_cast<int>(j);
          bthr = threshold(lo, hi);
          bl = la;
          br = ra;
        }
      }
    }
    if (bf >= 0 && best_split > best.value + tol_ && bl != br) {
      best.value = best_split;
      best.tree = PolicyTree::split(bf, bthr, PolicyTree::leaf(static_cast<int>(bl)), PolicyTree::leaf(static_cast<int>(br)));
    }
    return best;
  }

  // Best depth-2 root split on root feature j: returns (value, cut position).
  std::pair<double, std::size_t> depth2_root(std::size_t j, const std::vector<std::vector<std::size_t>>& orders,
                                             const std::vector<std::vector<std::size_t>>& ranks,
                                             const std::vector<std::vector<double>>& masks) const {
    const std::size_t n = s_.n;
    const auto& order = orders[j];
    std::vector<double> best_l(n + 1, kNegInf), best_r(n + 1, kNegInf);
    {
      // Leaf values for every prefix / suffix.
      std::vector<double> t(M_, 0.0);
      for (std::size_t c = 1; c < n; ++c) {
        for (std::size_t a = 0; a < M_; ++a) t[a] += s_.at(order[c - 1], a);
        best_l[c] = *std::max_element(t.begin(), t.end());
      }
      std::fill(t.begin(), t.end(), 0.0);
      for (std::size_t c = n - 1; c >= 1; --c) {
        for (std::size_t a = 0; a < M_; ++a) t[a] += s_.at(order[c], a);
        best_r[c] = *std::max_element(t.begin(), t.end());
      }
    }
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t a = 0; a < M_; ++a)
      for (std::size_t b = 0; b < M_; ++b)
        if (a != b) pairs.emplace_back(a, b);
    std::vector<MaxAddTree> trees(pairs.size());
    std::vector<double> t(M_);

    auto sweep = [&](std::size_t j2, bool forward) {
      for (auto& tr : trees) tr.reset(masks[j2]);
      std::fill(t.begin(), t.end(), 0.0);
      for (std::size_t step = 1; step < n; ++step) {
        const std::size_t c = forward ? step : n - step;
        const std::size_t i = forward ? order[c - 1] : order[c];
        for (std::size_t a = 0; a < M_; ++a) t[a] += s_.at(i, a);
        const std::size_t r = ranks[j2][i];
        for (std::size_t p = 0; p < pairs.size(); ++p)
          trees[p].add_suffix(r + 1, s_.at(i, pairs[p].first) - s_.at(i, pairs[p].second));
        double v = kNegInf;
        for (std::size_t p = 0; p < pairs.size(); ++p) v = std::max(v, trees[p].max() + t[pairs[p].second]);
        auto& slot = forward ? best_l[c] : best_r[c];
        slot = std::max(slot, v);
      }
    };
    for (std::size_t j2 = 0; j2 < d_; ++j2) {
      sweep(j2, true);
      sweep(j2, false);
    }

    double best = kNegInf;
    std::size_t cut = 0;
    for (std::size_t c = 1; c < n; ++c) {
      if (!(xv(order[c - 1], j) < xv(order[c], j))) continue;
      const double v = best_l[c] + best_r[c];
      if (v > best + tol_) {
        best = v;
        cut = c;
      }
    }
    return {best, cut};
  }

  Candidate depth2(const std::vector<std::size_t>& all) const {
    Candidate best = depth1(all);
    const std::size_t n = s_.n;
    if (n < 2 || M_ < 2) return best;
    std::vector<std::vector<std::size_t>> orders(d_), ranks(d_, std::vector<std::size_t>(n));
    std::vector<std::vector<double>> masks(d_, std::vector<double>(n + 1, 0.0));
    for (std::size_t j = 0; j < d_; ++j) {
      orders[j] = sorted_by(all, j);
      for (std::size_t r = 0; r < n; ++r) ranks[j][orders[j][r]] = r;
      for (std::size_t p = 1; p < n; ++p)
        if (!(xv(orders[j][p - 1], j) < xv(orders[j][p], j))) masks[j][p] = kNegInf;
    }
    std::vector<std::pair<double, std::size_t>> roots(d_);
    parallel_for(d_, [&](std::size_t j) { roots[j] = depth2_root(j, orders, ranks, masks); });

    double best_v = kNegInf;
    std::size_t bj = 0, bc = 0;
    for (std::size_t j = 0; j < d_; ++j) {
      if (roots[j].first > best_v + tol_) {
        best_v = roots[j].first;
        bj = j;
        bc = roots[j].second;
      }
    }
    if (!(best_v > best.value + tol_)) return best;

    const auto& order = orders[bj];
    const std::vector<std::size_t> left(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(bc));
    const std::vector<std::size_t> right(order.begin() + static_cast<std::ptrdiff_t>(bc), order.end());
    auto sort_rows = [](std::vector<std::size_t> v) {
      std::sort(v.begin(), v.end());
      return v;
    };
    const Candidate l = depth1(sort_rows(left)), r = depth1(sort_rows(right));
    const double thr = threshold(xv(order[bc - 1], bj), xv(order[bc], bj));
    if (l.tree.nodes().size() == 1 && r.tree.nodes().size() == 1 && l.tree == r.tree) return best;
    return {l.value + r.value, PolicyTree::split(static_cast<int>(bj), thr, l.tree, r.tree)};
  }

 private:
  const ScoreMatrix& s_;
  std::span<const double> x_;
  std::size_t d_;
  std::size_t M_;
  double tol_ = 0.0;
};

}  // namespace

double ScoreMatrix::policy_value(const PolicyTree& tree, std::span<const double> x, std::size_t dim) const {
  if (n == 0) throw InvalidArgument("policy_value: empty score matrix");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const int a = tree.action(Covariate{x.data() + i * dim, dim});
    if (a < 0 || static_cast<std::size_t>(a) >= num_actions) throw InvalidArgument("policy_value: action out of range");
    total += at(i, static_cast<std::size_t>(a));
  }
  return total / static_cast<double>(n);
}

TreeSearchResult search_policy_tree(const ScoreMatrix& scores, std::span<const double> x, std::size_t dim,
                                    int depth) {
  if (depth < 0 || depth > 2) throw InvalidArgument("unsupported depth");
  if (scores.n == 0 || scores.num_actions == 0) throw InvalidArgument("search_policy_tree: empty score matrix");
  if (scores.values.size() != scores.n * scores.num_actions) throw InvalidArgument("search_policy_tree: bad score shape");
  if (dim == 0 || x.size() != scores.n * dim) throw InvalidArgument("search_policy_tree: covariate shape mismatch");
  for (double v : scores.values)
    if (!std::isfinite(v)) throw InvalidArgument("search_policy_tree: non-finite score");

  Searcher s(scores, x, dim);
  std::vector<std::size_t> all(scores.n);
  std::iota(all.begin(), all.end(), 0);
  Candidate c = depth == 0 ? s.leaf(all) : depth == 1 ? s.depth1(all) : s.depth2(all);
  TreeSearchResult out;
  out.tree = c.tree;
  out.value = scores.policy_value(out.tree, x, dim);
  return out;
}

}  // namespace drpl
