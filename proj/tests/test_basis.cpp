#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "doctest.h"
#include "drpl/basis.hpp"

using namespace drpl;

TEST_CASE("polynomial basis sizes and constant feature") {
  CHECK(BasisSpec::polynomial(3, 0).size() == 1);
  CHECK(BasisSpec::polynomial(3, 1).size() == 4);
  CHECK(BasisSpec::polynomial(3, 2).size() == 10);
  CHECK(BasisSpec::polynomial(5, 2).size() == 21);
  const auto b = BasisSpec::polynomial(2, 2);
  const std::vector<double> x{2.0, -3.0};
  const auto phi = b.features(x);
  CHECK(phi[0] == 1.0);
  // Every monomial of degree <= 2 appears exactly once.
  std::vector<double> sorted = phi;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> expected{1.0, 2.0, -3.0, 4.0, -6.0, 9.0};
  std::sort(expected.begin(), expected.end());
  CHECK(sorted == expected);
}

TEST_CASE("cubic B-splines form a partition of unity") {
  const std::vector<double> knots{0, 0, 0, 0, 0.2, 0.5, 0.7, 1, 1, 1, 1};
  for (double t = 0.0; t <= 1.0; t += 0.01) {
    double v[4];
    const auto first = cubic_bspline_values(knots, t, v);
    CHECK(first + 4 <= knots.size() - 4);
    double s = 0.0;
    for (double e : v) {
      CHECK(e >= -1e-15);
      s += e;
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("additive spline basis") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  const std::size_t dim = 3, n = 400;
  std::vector<double> x(n * dim);
  for (auto& v : x) v = u(rng);
  const auto b = BasisSpec::additive_spline(x, dim, 4);
  CHECK(b.kind() == BasisKind::AdditiveCubicSpline);
  CHECK(b.size() == 1 + dim * 7);
  CHECK(b.knots().size() == dim);
  for (std::size_t i = 0; i < 20; ++i) {
    const auto phi = b.features(std::span<const double>(x.data() + i * dim, dim));
    CHECK(phi[0] == 1.0);
    for (double v : phi) CHECK(std::isfinite(v));
  }
  // Out-of-range inputs are clamped, never extrapolated.
  const std::vector<double> far{50.0, -50.0, 0.0};
  for (double v : b.features(far)) {
    CHECK(v >= -1e-15);
    CHECK(v <= 1.0 + 1e-15);
  }
}

TEST_CASE("default basis switches to a quadratic polynomial in high dimension") {
  std::vector<double> x(11 * 30, 0.5);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i % 7);
  CHECK(BasisSpec::default_for(x, 11).kind() == BasisKind::Polynomial);
  CHECK(BasisSpec::default_for(x, 11).degree() == 2);
  std::vector<double> y(5 * 100);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::sin(static_cast<double>(i));
  CHECK(BasisSpec::default_for(y, 5).kind() == BasisKind::AdditiveCubicSpline);
}
