#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "drpl/dataset.hpp"

namespace drpl {

enum class BasisKind { Polynomial, AdditiveCubicSpline };

/// Fixed feature map phi(x) used as the sieve for the dual fields. Feature 0
/// is always the constant 1.
class BasisSpec {
 public:
  /// All monomials of total degree <= degree (degree 0 is the constant basis).
  static BasisSpec polynomial(std::size_t dim, int degree);

  /// Additive cubic B-splines, one block per coordinate, with `interior_knots`
  /// knots at empirical quantiles of `rows` of the covariate matrix. Inputs
  /// are clamped to the observed range before evaluation.
  static BasisSpec additive_spline(std::span<const double> x, std::size_t dim, int interior_knots = 4);

  /// Additive spline with 4 interior knots when dim <= 10, quadratic
  /// polynomial otherwise.
  static BasisSpec default_for(std::span<const double> x, std::size_t dim);

  BasisKind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return size_; }
  int degree() const { return degree_; }
  /// Full knot vectors per coordinate (spline kind only).
  const std::vector<std::vector<double>>& knots() const { return knots_; }

  void features(Covariate x, std::span<double> out) const;
  std::vector<double> features(Covariate x) const;

 private:
  BasisKind kind_ = BasisKind::Polynomial;
  std::size_t dim_ = 0;
  std::size_t size_ = 1;
  int degree_ = 0;
  std::vector<std::vector<int>> exponents_;
  std::vector<std::vector<double>> knots_;
  std::vector<std::size_t> block_offset_;
};

/// Values of the four cubic B-splines that are non-zero at `t`; returns the
/// index of the first one. `knots` is a clamped knot vector (4 repeats at each end).
std::size_t cubic_bspline_values(std::span<const double> knots, double t, double out[4]);

}  // namespace drpl
