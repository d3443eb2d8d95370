#include "drpl/basis.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "drpl/error.hpp"

namespace drpl {
namespace {

void enumerate_exponents(std::size_t dim, int degree, std::vector<std::vector<int>>& out) {
  std::vector<int> cur(dim, 0);
  for (int total = 0; total <= degree; ++total) {
    // All compositions of `total` into `dim` parts, lexicographically descending.
    std::function<void(std::size_t, int)> rec = [&](std::size_t j, int left) {
      if (j + 1 == dim) {
        cur[j] = left;
        out.push_back(cur);
        return;
      }
      for (int k = left; k >= 0; --k) {
        cur[j] = k;
        rec(j + 1, left - k);
      }
    };
    if (dim == 0) {
      out.emplace_back();
      break;
    }
    rec(0, total);
  }
}

}  // namespace

BasisSpec BasisSpec::polynomial(std::size_t dim, int degree) {
  if (degree < 0) throw InvalidArgument("polynomial basis: negative degree");
  BasisSpec b;
  b.kind_ = BasisKind::Polynomial;
  b.dim_ = dim;
  b.degree_ = degree;
  enumerate_exponents(dim, degree, b.exponents_);
  b.size_ = b.exponents_.size();
  return b;
}

BasisSpec BasisSpec::additive_spline(std::span<const double> x, std::size_t dim, int interior_knots) {
  if (dim == 0) throw InvalidArgument("spline basis: zero dimension");
  if (x.empty() || x.size() % dim != 0) throw InvalidArgument("spline basis: covariate block has wrong size");
  if (interior_knots < 0) throw InvalidArgument("spline basis: negative knot count");
  const std::size_t n = x.size() / dim;
  BasisSpec b;
  b.kind_ = BasisKind::AdditiveCubicSpline;
  b.dim_ = dim;
  b.degree_ = 3;
  b.size_ = 1;
  std::vector<double> col(n);
  for (std::size_t j = 0; j < dim; ++j) {
    for (std::size_t i = 0; i < n; ++i) col[i] = x[i * dim + j];
    std::sort(col.begin(), col.end());
    const double lo = col.front(), hi = col.back();
    std::vector<double> kv;
    b.block_offset_.push_back(b.size_);
    if (hi > lo) {
      kv.assign(4, lo);
      double last = lo;
      for (int k = 1; k <= interior_knots; ++k) {
        const double pos = static_cast<double>(k) / (interior_knots + 1) * static_cast<double>(n - 1);
        const auto i0 = static_cast<std::size_t>(std::floor(pos));
        const double frac = pos - static_cast<double>(i0);
        const double q = col[i0] + (i0 + 1 < n ? frac * (col[i0 + 1] - col[i0]) : 0.0);
        if (q > last && q < hi) {
          kv.push_back(q);
          last = q;
        }
      }
      kv.insert(kv.end(), 4, hi);
      // K + 4 B-splines; the first is dropped because they sum to one.
      b.size_ += kv.size() - 4 - 1;
    }
    b.knots_.push_back(std::move(kv));
  }
  return b;
}

BasisSpec BasisSpec::default_for(std::span<const double> x, std::size_t dim) {
  if (dim <= 10) return additive_spline(x, dim, 4);
  return polynomial(dim, 2);
}

std::size_t cubic_bspline_values(std::span<const double> t, double x, double N[4]) {
  const std::size_t p = 3;
  const std::size_t nb = t.size() - p - 1;
  x = std::clamp(x, t[p], t[nb]);
  // Knot span s with t[s] <= x < t[s+1]; the right end maps to the last span.
  std::size_t s = p;
  if (x >= t[nb]) {
    s = nb - 1;
  } else {
    s = static_cast<std::size_t>(std::upper_bound(t.begin() + p, t.begin() + nb + 1, x) - t.begin()) - 1;
  }
  double left[4], right[4];
  N[0] = 1.0;
  for (std::size_t j = 1; j <= p; ++j) {
    left[j] = x - t[s + 1 - j];
    right[j] = t[s + j] - x;
    double saved = 0.0;
    for (std::size_t r = 0; r < j; ++r) {
      const double denom = right[r + 1] + left[j - r];
      const double temp = denom > 0.0 ? N[r] / denom : 0.0;
      N[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    N[j] = saved;
  }
  return s - p;
}

void BasisSpec::features(Covariate x, std::span<double> out) const {
  if (x.size() != dim_) throw InvalidArgument("basis: covariate dimension mismatch");
  if (out.size() != size_) throw InvalidArgument("basis: output size mismatch");
  if (kind_ == BasisKind::Polynomial) {
    for (std::size_t k = 0; k < exponents_.size(); ++k) {
      double v = 1.0;
      for (std::size_t j = 0; j < dim_; ++j)
        for (int e = 0; e < exponents_[k][j]; ++e) v *= x[j];
      out[k] = v;
    }
    return;
  }
  std::fill(out.begin(), out.end(), 0.0);
  out[0] = 1.0;
  for (std::size_t j = 0; j < dim_; ++j) {
    const auto& kv = knots_[j];
    if (kv.empty()) continue;
    double N[4];
    const std::size_t first = cubic_bspline_values(kv, x[j], N);
    for (std::size_t r = 0; r < 4; ++r) {
      const std::size_t idx = first + r;
      if (idx == 0) continue;
      out[block_offset_[j] + idx - 1] = N[r];
    }
  }
}

std::vector<double> BasisSpec::features(Covariate x) const {
  std::vector<double> out(size_);
  features(x, out);
  return out;
}

}  // namespace drpl
