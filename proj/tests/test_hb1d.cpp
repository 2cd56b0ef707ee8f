#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hbnet/hb1d.hpp"
#include "hbnet/pwl_exact.hpp"
#include "hbnet/random.hpp"

using namespace hbnet::hb1d;

namespace {
double sq(double x) { return x * x; }
double cube(double x) { return x * x * x; }
}  // namespace

TEST_CASE("grid") {
  const Grid1D g(3);
  CHECK(g.h() == 0.125);
  CHECK(g.size() == 9);
  CHECK(g.point(8) == 1.0);
  CHECK(g.h() * static_cast<double>(g.intervals()) == 1.0);
  CHECK_THROWS_AS(Grid1D(-1), std::invalid_argument);
}

TEST_CASE("nodal basis") {
  CHECK(nodal_basis(1, 1, 0.5) == 1.0);
  CHECK(nodal_basis(2, 1, 0.5) == 0.0);
  CHECK(nodal_basis(2, 3, 0.6875) == 0.75);
  CHECK(nodal_basis(0, 0, 0.25) == 0.75);
  CHECK(nodal_basis(0, 1, 0.25) == 0.25);
  CHECK(nodal_basis(3, 0, 0.0) == 1.0);
  CHECK(nodal_basis(3, 8, 1.0) == 1.0);
  CHECK_THROWS_AS(nodal_basis(2, 5, 0.5), std::invalid_argument);
}

TEST_CASE("nodal basis is a Lagrange basis") {
  for (int l = 0; l <= 4; ++l) {
    const Grid1D g(l);
    for (std::size_t i = 0; i < g.size(); ++i)
      for (std::size_t j = 0; j < g.size(); ++j) CHECK(nodal_basis(l, i, g.point(j)) == (i == j ? 1.0 : 0.0));
  }
}

TEST_CASE("interpolation") {
  const auto f = interpolate_1d(sq, 1);
  CHECK(f.breakpoints == std::vector<double>{0.0, 0.5, 1.0});
  CHECK(f.values == std::vector<double>{0.0, 0.25, 1.0});

  const auto one = interpolate_1d([](double) { return 1.0; }, 3);
  for (double x : {-0.5, 0.1, 0.77, 1.4}) CHECK(pwl_eval(one, x) == 1.0);

  // Chord through (1/4, 1/16) and (1/2, 1/4) at 3/8 is 5/32.
  const auto f2 = interpolate_1d(sq, 2);
  CHECK(pwl_eval(f2, 0.375) == 0.15625);
  CHECK(pwl_eval(f2, 0.375) == 0.5 * (sq(0.25) + sq(0.5)));

  CHECK_THROWS_AS(interpolate_1d(std::vector<double>{0.0, 1.0, 2.0}, 2), std::invalid_argument);
}

TEST_CASE("piecewise-linear evaluation") {
  const auto f = interpolate_1d(sq, 1);
  CHECK(pwl_eval(f, 0.25) == 0.125);
  CHECK(pwl_eval(f, 0.5) == 0.25);
  CHECK(pwl_eval(f, 1.5) == 1.0 + f.right_slope * 0.5);
  CHECK(f.right_slope == 1.5);
  CHECK(pwl_eval(f, -1.0) == -0.5);
}

TEST_CASE("validation") {
  PiecewiseLinear1D f{{0.0, 0.0}, {1.0, 2.0}, 0.0, 0.0};
  CHECK_THROWS_AS(f.validate(), std::invalid_argument);
  PiecewiseLinear1D g{{0.0, 1.0}, {1.0}, 0.0, 0.0};
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
}

TEST_CASE("hierarchical surpluses") {
  const auto mu = hierarchical_coeffs(sq, 10);
  for (std::size_t l = 0; l < mu.size(); ++l) {
    CHECK(mu[l].size() == (std::size_t{1} << l));
    for (double v : mu[l]) CHECK(std::abs(v + std::ldexp(1.0, -2 * static_cast<int>(l + 1))) < 1e-14);
  }
  for (const auto& level : hierarchical_coeffs([](double x) { return 3.0 * x - 2.0; }, 6))
    for (double v : level) CHECK(std::abs(v) < 1e-15);
  CHECK(hierarchical_coeffs(cube, 1)[0][0] == -0.375);
}

TEST_CASE("hierarchical reconstruction telescopes to the interpolant") {
  hbnet::UniformSampler rng(9);
  std::vector<double> data(65);
  for (double& v : data) v = rng.uniform(-1.0, 1.0);
  const auto sampled = [&](double x) { return data[static_cast<std::size_t>(std::lround(x * 64.0))]; };
  const std::vector<std::function<double(double)>> fns{sq, cube, sampled};
  for (const auto& u : fns) {
    for (int L = 0; L <= 6; ++L) {
      const auto mu = hierarchical_coeffs(u, L);
      const auto f = interpolate_1d(u, L);
      const Grid1D g(L);
      for (std::size_t i = 0; i < g.size(); ++i)
        CHECK(std::abs(hierarchical_eval(u(0.0), u(1.0), mu, g.point(i)) - f.values[i]) < 1e-12);
    }
  }
}

TEST_CASE("square interpolation error") {
  for (int L = 0; L <= 8; ++L) {
    const auto rep = hbnet::pwl::sup_error_vs_quadratic(interpolate_1d(sq, L), 0.0, 1.0);
    CHECK(std::abs(rep.value - std::ldexp(1.0, -2 * (L + 1))) < 1e-12);
  }
}
