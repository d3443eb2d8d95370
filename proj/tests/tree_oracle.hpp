#pragma once

// Brute-force enumeration of depth <= 2 policy trees, used as the reference
// for the exact search.

#include <algorithm>
#include <limits>
#include <vector>

#include "drpl/tree_search.hpp"

namespace oracle {

inline std::vector<double> midpoints(const std::vector<std::size_t>& rows, const std::vector<double>& x,
                                     std::size_t dim, std::size_t f) {
  std::vector<double> v;
  for (auto i : rows) v.push_back(x[i * dim + f]);
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  std::vector<double> out;
  for (std::size_t j = 0; j + 1 < v.size(); ++j) out.push_back(0.5 * (v[j] + v[j + 1]));
  return out;
}

/// Largest total score over rows for trees of depth <= depth.
inline double best_total(const drpl::ScoreMatrix& s, const std::vector<double>& x, std::size_t dim,
                         const std::vector<std::size_t>& rows, int depth) {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < s.num_actions; ++a) {
    double t = 0.0;
    for (auto i : rows) t += s.at(i, a);
    best = std::max(best, t);
  }
  if (depth == 0 || rows.empty()) return best;
  for (std::size_t f = 0; f < dim; ++f)
    for (double thr : midpoints(rows, x, dim, f)) {
      std::vector<std::size_t> l, r;
      for (auto i : rows) (x[i * dim + f] <= thr ? l : r).push_back(i);
      best = std::max(best, best_total(s, x, dim, l, depth - 1) + best_total(s, x, dim, r, depth - 1));
    }
  return best;
}

inline double best_value(const drpl::ScoreMatrix& s, const std::vector<double>& x, std::size_t dim, int depth) {
  std::vector<std::size_t> rows(s.n);
  for (std::size_t i = 0; i < s.n; ++i) rows[i] = i;
  return best_total(s, x, dim, rows, depth) / static_cast<double>(s.n);
}

}  // namespace oracle
