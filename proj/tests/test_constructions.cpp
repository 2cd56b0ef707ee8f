#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <algorithm>
#include <functional>
#include <type_traits>

#include "hbnet/constructions.hpp"
#include "hbnet/fem2d.hpp"
#include "hbnet/netcore.hpp"
#include "hbnet/pwl_exact.hpp"
#include "oracles.hpp"

using namespace hbnet;
namespace cn = hbnet::constructions;
using oracle::Point;

namespace {

double at(const MlpNetwork& n, std::initializer_list<double> x) { return eval_mlp(n, std::vector<double>(x)); }
double at(const SkipNetwork& n, std::initializer_list<double> x) { return eval_skip(n, std::vector<double>(x)); }

template <class Net>
double max_dev(const Net& net, const std::vector<Point>& pts, const std::function<double(const Point&)>& ref) {
  double worst = 0.0;
  for (const auto& p : pts) {
    if constexpr (std::is_same_v<Net, MlpNetwork>) {
      worst = std::max(worst, std::abs(eval_mlp(net, p) - ref(p)));
    } else {
      worst = std::max(worst, std::abs(eval_skip(net, p) - ref(p)));
    }
  }
  return worst;
}

bool all_widths(const Network& n, std::size_t w) {
  const auto ws = widths(n);
  return std::all_of(ws.begin(), ws.end(), [&](std::size_t v) { return v == w; });
}

// Product of the coordinates named by k, computed through the recursion
// k -> k - e_i with the closed-form product approximant at M = 1.
double monomial_oracle(std::vector<unsigned> k, int L, const Point& x) {
  std::size_t i = 0;
  while (k[i] == 0) ++i;
  unsigned p = 0;
  for (unsigned e : k) p += e;
  if (p == 1) return x[i];
  --k[i];
  return oracle::m_formula(L, 1.0, x[i], monomial_oracle(k, L, x));
}

}  // namespace

TEST_CASE("tent network") {
  const auto g = cn::build_g();
  CHECK(at(g, {0.5}) == 1.0);
  CHECK(at(g, {2.0}) == 0.0);
  CHECK(at(g, {0.75}) == 0.5);
  CHECK(widths(g) == std::vector<std::size_t>{3});
}

TEST_CASE("sawtooth networks") {
  CHECK(cn::build_g_ell(1) == cn::build_g());
  CHECK(at(cn::build_g_ell(2), {0.25}) == 1.0);
  const auto g3 = cn::build_g_ell(3);
  for (int k = 0; k <= 8; ++k) CHECK(at(g3, {k / 8.0}) == (k % 2 ? 1.0 : 0.0));
  CHECK_THROWS_AS(cn::build_g_ell(0), std::invalid_argument);

  for (int l = 1; l <= 6; ++l) {
    const auto net = cn::build_g_ell(l);
    CHECK(widths(net) == std::vector<std::size_t>(static_cast<std::size_t>(l), 3));
    const auto pts = oracle::random_points(static_cast<std::uint64_t>(l), 1000, 1, 0.0, 1.0);
    CHECK(max_dev(net, pts, [&](const Point& p) { return oracle::sawtooth(l, p[0]); }) < 1e-13);
    for (double x : {-3.0, -0.01, 1.01, 7.5}) CHECK(at(net, {x}) == 0.0);
    const auto f = pwl::extract_pwl(net, 0.0, 1.0);
    CHECK(f.breakpoints.size() == (std::size_t{1} << l) + 1);
    CHECK(f.left_slope == 0.0);
    CHECK(f.right_slope == 0.0);
  }
}

TEST_CASE("clamp network") {
  const auto r = cn::build_relu1();
  CHECK(at(r, {-1.0}) == 0.0);
  CHECK(at(r, {0.4}) == 0.4);
  CHECK(at(r, {3.0}) == 1.0);
}

TEST_CASE("square network") {
  const auto s1 = cn::build_x2_hat(1);
  for (double x : {-1.0, -0.3, 0.0, 0.7}) CHECK(at(s1, {x}) == std::abs(x));
  CHECK(at(cn::build_x2_hat(3), {0.5}) == 0.25);
  CHECK_THROWS_AS(cn::build_x2_hat(0), std::invalid_argument);

  for (int L = 1; L <= 8; ++L) {
    const auto net = cn::build_x2_hat(L);
    CHECK(all_widths(net, 3));
    CHECK(depth(net) == static_cast<std::size_t>(L));
    // interpolant of x^2 on [-1, 1], and the sawtooth formula everywhere
    const auto inside = oracle::random_points(40 + static_cast<std::uint64_t>(L), 1000, 1, -1.0, 1.0);
    CHECK(max_dev(net, inside, [&](const Point& p) { return oracle::s_hat_interp(L, p[0]); }) < 1e-14);
    const auto wide = oracle::random_points(50 + static_cast<std::uint64_t>(L), 1000, 1, -4.0, 4.0);
    CHECK(max_dev(net, wide, [&](const Point& p) { return oracle::s_hat_formula(L, p[0]); }) < 1e-13);
  }
}

TEST_CASE("product network") {
  for (double M : {1.0, 2.5, 0.75}) {
    const auto m4 = cn::build_xy_hat(4, M);
    CHECK(std::abs(at(m4, {M, M}) - M * M) < 1e-14);
    CHECK(depth(m4) == 12);
    CHECK(all_widths(m4, 3));
    hbnet::UniformSampler rng(8);
    for (int k = 0; k < 100; ++k) {
      const double t = rng.uniform(-M, M);
      CHECK(std::abs(at(m4, {t, 0.0})) < 1e-14);
      CHECK(std::abs(at(m4, {0.0, t})) < 1e-14);
    }
  }
  for (int L = 2; L <= 6; ++L) {
    for (double M : {1.0, 2.5}) {
      const auto net = cn::build_xy_hat(L, M);
      const auto pts = oracle::random_points(60 + static_cast<std::uint64_t>(L), 2000, 2, -M, M);
      CHECK(max_dev(net, pts, [&](const Point& p) { return oracle::m_formula(L, M, p[0], p[1]); }) < 1e-12);
      CHECK(max_dev(net, pts, [&](const Point& p) { return M * M * fem2d::interp_xy(L - 2, p[0] / M, p[1] / M); }) <
            1e-12);
    }
  }
  CHECK_THROWS_AS(cn::build_xy_hat(1, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(cn::build_xy_hat(3, 0.0), std::invalid_argument);
}

TEST_CASE("width-4 product block equals the product network") {
  for (int L = 2; L <= 5; ++L) {
    for (double M : {1.0, 3.0}) {
      const std::vector<double> u{1.0, 0.0}, v{0.0, 1.0};
      const auto block = cn::build_product_block(L, M, u, v);
      CHECK(all_widths(block, 4));
      CHECK(depth(block) == static_cast<std::size_t>(3 * L));
      const auto ref = cn::build_xy_hat(L, M);
      // exact on the whole plane, not only on the box
      const auto pts = oracle::random_points(70 + static_cast<std::uint64_t>(L), 2000, 2, -3.0 * M, 3.0 * M);
      CHECK(max_dev(block, pts, [&](const Point& p) { return eval_skip(ref, p); }) < 1e-11 * M * M);
    }
  }
  // Linear forms as factors: (x0 + x1) * (x1 - x2).
  const std::vector<double> u{1.0, 1.0, 0.0}, v{0.0, 1.0, -1.0};
  const auto block = cn::build_product_block(4, 2.0, u, v);
  const auto pts = oracle::random_points(3, 500, 3, -1.0, 1.0);
  CHECK(max_dev(block, pts, [](const Point& p) { return oracle::m_formula(4, 2.0, p[0] + p[1], p[1] - p[2]); }) <
        1e-13);
}

TEST_CASE("monomials") {
  {
    const auto k11 = cn::build_monomial(cn::Monomial({1, 1}), 4);
    const auto ref = cn::build_xy_hat(4, 1.0);
    const auto pts = oracle::random_points(1, 1000, 2, -1.0, 1.0);
    CHECK(max_dev(k11, pts, [&](const Point& p) { return eval_skip(ref, p); }) < 1e-14);
  }
  {
    const auto net = cn::build_monomial(cn::Monomial({2, 1, 0}), 5);
    CHECK(depth(net) == 30);
    CHECK(all_widths(net, 4));
    const auto pts = oracle::random_points(2, 100000, 3, -1.0, 1.0);
    CHECK(max_dev(net, pts, [](const Point& p) { return p[0] * p[0] * p[1]; }) <= 2.0 * std::ldexp(1.0, -8));
  }
  {
    const auto net = cn::build_monomial(cn::Monomial({3}), 4);
    const double v = at(net, {1.0});
    CHECK(std::abs(v - monomial_oracle({3}, 4, {1.0})) < 1e-14);
    CHECK(std::abs(v) <= 1.0);
  }
  const std::vector<std::vector<unsigned>> cases{{4}, {1, 2}, {2, 2}, {0, 1, 3}, {1, 1, 1, 1}, {2, 0, 1, 2}};
  for (const auto& k : cases) {
    for (int L : {2, 3, 5}) {
      const cn::Monomial mono(k);
      const auto net = cn::build_monomial(mono, L);
      CHECK(depth(net) == 3 * (mono.degree() - 1) * static_cast<std::size_t>(L));
      CHECK(all_widths(net, 4));
      const auto pts = oracle::random_points(L, 1000, k.size(), -1.0, 1.0);
      CHECK(max_dev(net, pts, [&](const Point& p) { return monomial_oracle(k, L, p); }) < 1e-12);
    }
  }
  const auto lin = cn::build_monomial(cn::Monomial({0, 1}), 3);
  CHECK(depth(lin) == 0);
  CHECK(at(lin, {0.3, -0.7}) == -0.7);
  CHECK_THROWS_AS(cn::Monomial({0, 0}), std::invalid_argument);
}

TEST_CASE("polynomials") {
  {
    cn::Polynomial p(1);
    p.add_term({2}, 1.0);
    const auto net = cn::build_polynomial(p, 4);
    const auto pts = oracle::random_points(5, 10000, 1, -1.0, 1.0);
    CHECK(max_dev(net, pts, [](const Point& x) { return x[0] * x[0]; }) <= std::ldexp(1.0, -6));
  }
  {
    cn::Polynomial p(3);
    p.add_term({0, 0, 0}, 5.0);
    const auto net = cn::build_polynomial(p, 4);
    CHECK(depth(net) == 0);
    CHECK(at(net, {0.3, 0.1, -0.9}) == 5.0);
  }
  {
    cn::Polynomial p(2);
    p.add_term({2, 1}, 1.0);
    p.add_term({1, 1}, 3.0);
    p.add_term({1, 0}, -0.5);
    CHECK(p.degree() == 3);
    CHECK(p.coeff_abs_sum() == 4.5);
    const auto net = cn::build_polynomial(p, 5);
    const auto pts = oracle::random_points(6, 100000, 2, -1.0, 1.0);
    CHECK(max_dev(net, pts, [&](const Point& x) { return p(x); }) <= 2.0 * std::ldexp(1.0, -8) * 4.5);
    // term-by-term oracle
    CHECK(max_dev(net, pts, [](const Point& x) {
            return monomial_oracle({2, 1}, 5, x) + 3.0 * monomial_oracle({1, 1}, 5, x) - 0.5 * x[0];
          }) < 1e-12);
  }
  CHECK_THROWS_AS(cn::build_polynomial(cn::Polynomial(2), 3), std::invalid_argument);
}

TEST_CASE("polynomial documents") {
  const auto p = cn::polynomial_from_json(R"({"dim":2,"terms":[{"exponents":[2,1],"coeff":1.5},{"exponents":[0,0],"coeff":-2}]})");
  CHECK(p.dim() == 2);
  CHECK(p.terms().size() == 2);
  const auto q = cn::polynomial_from_json(cn::to_json(p));
  CHECK(q.terms() == p.terms());
  try {
    cn::polynomial_from_json(R"({"dim":2,"terms":[{"exponents":[1],"coeff":1}]})");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.position() == "/terms/0");
  }
  CHECK_THROWS_AS(cn::polynomial_from_json("[1,"), ParseError);
  cn::Polynomial z(1);
  z.add_term({1}, 2.0);
  z.add_term({1}, -2.0);
  CHECK(z.terms().empty());
}

TEST_CASE("sum of networks") {
  const auto a = cn::build_x2_hat(2), b = cn::build_x2_hat(3);
  const auto sum = cn::net_add(a, b);
  CHECK(depth(sum) == 5);
  CHECK(all_widths(sum, 3));
  const auto pts = oracle::random_points(7, 1000, 1, -2.0, 2.0);
  CHECK(max_dev(sum, pts, [&](const Point& p) { return eval_skip(a, p) + eval_skip(b, p); }) < 1e-14);

  const std::vector<std::size_t> w{3, 3};
  const auto f = random_skip_network(2, 2, w);
  const auto fz = cn::net_add(f, cn::zero_skip_network(2, 3, 4));
  CHECK(depth(fz) == 6);
  const auto pts2 = oracle::random_points(8, 1000, 2, -1.0, 1.0);
  CHECK(max_dev(fz, pts2, [&](const Point& p) { return eval_skip(f, p); }) < 1e-15);

  CHECK_THROWS_AS(cn::net_add(a, cn::build_xy_hat(2, 1.0)), StructuralError);
  CHECK_THROWS_AS(cn::net_add(f, random_skip_network(3, 2, std::vector<std::size_t>{4})), StructuralError);
}

TEST_CASE("modified composition") {
  const auto f1 = cn::build_x2_hat(3);
  const std::vector<Point> pts = oracle::random_points(9, 1000, 1, -1.0, 1.0);

  SUBCASE("projection onto x0 gives f1") {
    SkipNetwork proj;
    proj.input_dim = 2;
    proj.output = AffineMap(Matrix(1, 2, {1.0, 0.0}), {0.0});
    const auto c = cn::net_compose_modified(proj, f1);
    CHECK(max_dev(c, pts, [&](const Point& p) { return eval_skip(f1, p); }) == 0.0);
  }
  SUBCASE("projection onto x gives the identity") {
    SkipNetwork proj;
    proj.input_dim = 2;
    proj.output = AffineMap(Matrix(1, 2, {0.0, 1.0}), {0.0});
    const auto c = cn::net_compose_modified(proj, f1);
    CHECK(max_dev(c, pts, [](const Point& p) { return p[0]; }) == 0.0);
  }
  SUBCASE("product with a readout-last inner network") {
    const std::vector<double> u{0.0, 1.0}, v{1.0, 0.0};
    const auto outer = cn::build_product_block(3, 1.0, u, v);
    const auto inner = cn::build_product_block(3, 1.0, std::vector<double>{1.0}, std::vector<double>{1.0});
    const auto c = cn::net_compose_modified(outer, inner);
    CHECK(depth(c) == 18);
    CHECK(all_widths(c, 4));
    CHECK(max_dev(c, pts, [&](const Point& p) { return eval_skip(outer, Point{eval_skip(inner, p), p[0]}); }) < 1e-14);
  }
  SUBCASE("contract violations") {
    CHECK_THROWS_AS(cn::net_compose_modified(f1, f1), StructuralError);
    // inner output reads an early layer while the outer first layer reads x0
    const auto outer = cn::build_product_block(2, 1.0, std::vector<double>{0.0, 1.0}, std::vector<double>{1.0, 0.0});
    CHECK_THROWS_AS(cn::net_compose_modified(outer, f1), StructuralError);
    // outer reads x0 past its first layer
    auto bad = random_skip_network(1, 2, std::vector<std::size_t>{2, 2});
    CHECK_THROWS_AS(cn::net_compose_modified(bad, cn::build_x2_hat(1)), StructuralError);
  }
}

TEST_CASE("skip to plain conversion") {
  const std::vector<std::size_t> w{3, 3, 3};
  const auto r = random_skip_network(7, 2, w);
  const auto m = cn::skip_to_mlp(r);
  CHECK(depth(m) == 3);
  CHECK(widths(m) == std::vector<std::size_t>{9, 9, 9});
  const auto pts = oracle::random_points(10, 10000, 2, -1.0, 1.0);
  CHECK(max_dev(m, pts, [&](const Point& p) { return eval_skip(r, p); }) < 1e-12);

  const auto s4 = cn::build_x2_hat(4);
  const auto m4 = cn::skip_to_mlp(s4);
  CHECK(widths(m4) == std::vector<std::size_t>(4, 7));
  const auto f = pwl::extract_pwl(m4, -1.0, 1.0);
  CHECK(std::abs(pwl::sup_error_vs_quadratic(f, -1.0, 1.0).value - std::ldexp(1.0, -8)) < 1e-12);

  const auto affine = cn::build_monomial(cn::Monomial({1, 0}), 2);
  const auto ma = cn::skip_to_mlp(affine);
  CHECK(depth(ma) == 0);
  CHECK(at(ma, {0.25, 3.0}) == 0.25);
}

TEST_CASE("psi networks") {
  CHECK(std::abs(at(cn::build_psi_ell(1), {0.5, 0.5}) - 0.25) < 1e-15);
  for (int l = 1; l <= 5; ++l) {
    const auto net = cn::build_psi_ell(l);
    CHECK(depth(net) == static_cast<std::size_t>(l + 2));
    CHECK(all_widths(net, 9));
    const auto pts = oracle::random_points(80 + static_cast<std::uint64_t>(l), 10000, 2, -1.0, 1.0);
    CHECK(max_dev(net, pts, [&](const Point& p) { return fem2d::psi_ref(l, p[0], p[1]); }) < 1e-12);
  }
}

TEST_CASE("two-dimensional hat") {
  const auto hat = cn::build_hat2d();
  CHECK(widths(hat) == std::vector<std::size_t>{15, 15});
  CHECK(at(hat, {0.5, 0.5}) == 1.0);
  CHECK(at(hat, {1.5, 1.5}) == 0.0);
  CHECK(at(hat, {-0.2, 0.3}) == 0.0);
  double worst = 0.0;
  for (int j = 0; j <= 200; ++j)
    for (int i = 0; i <= 200; ++i) {
      const double x = -2.0 + 0.02 * i, y = -2.0 + 0.02 * j;
      worst = std::max(worst, std::abs(at(hat, {x, y}) - fem2d::hat_ref(x, y)));
    }
  CHECK(worst < 1e-12);
}

TEST_CASE("unguarded hat formula") {
  const auto naive = cn::build_hat2d_unguarded();
  CHECK(depth(naive) == 1);
  // Direct composition: 1/2 (g2(x/2) + g2(y/2) - g2((x+y)/2)).
  const auto formula = [](double x, double y) {
    return 0.5 * (oracle::sawtooth(2, x / 2) + oracle::sawtooth(2, y / 2) - oracle::sawtooth(2, (x + y) / 2));
  };
  const auto pts = oracle::random_points(11, 2000, 2, -2.0, 3.0);
  CHECK(max_dev(naive, pts, [&](const Point& p) { return formula(p[0], p[1]); }) < 1e-14);
  const auto inside = oracle::random_points(12, 2000, 2, 0.0, 1.0);
  CHECK(max_dev(naive, inside, [](const Point& p) { return fem2d::hat_ref(p[0], p[1]); }) < 1e-14);
  // Outside the unit square it does not vanish: g2(3/4) = 1, g2(3/2) = 0.
  CHECK(at(naive, {1.5, 1.5}) == 1.0);
  CHECK(formula(1.5, 1.5) == 1.0);
}

TEST_CASE("finite element networks") {
  {
    cn::HatPlacement p;
    p.coeff = 2.0;
    const auto net = cn::build_fem2d(std::vector<cn::HatPlacement>{p});
    const auto pts = oracle::random_points(13, 1000, 2, -1.0, 2.0);
    CHECK(max_dev(net, pts, [](const Point& x) { return 2.0 * fem2d::hat_ref(x[0], x[1]); }) < 1e-14);
  }
  {
    // A rotated and sheared placement.
    cn::HatPlacement p;
    p.linear = {0.5, 1.0, -1.0, 0.25};
    p.shift = {0.1, 0.6};
    p.coeff = -1.5;
    const auto net = cn::build_fem2d(std::vector<cn::HatPlacement>{p});
    const auto pts = oracle::random_points(14, 1000, 2, -2.0, 2.0);
    CHECK(max_dev(net, pts, [&](const Point& x) {
            return -1.5 * fem2d::hat_ref(0.5 * x[0] + 1.0 * x[1] + 0.1, -1.0 * x[0] + 0.25 * x[1] + 0.6);
          }) < 1e-13);
  }
  {
    const fem2d::UniformMesh2D m(1, fem2d::Box{0.0, 1.0, 0.0, 1.0});
    std::vector<double> v(m.node_count(), 0.0);
    v[1 * m.nodes_x() + 1] = 3.0;
    const auto pl = cn::fem_to_placements(fem2d::FemFunction2D(m, v));
    REQUIRE(pl.size() == 1);
    CHECK(pl[0].linear == std::array<double, 4>{1.0, 0.0, 0.0, 1.0});
    CHECK(pl[0].shift == std::array<double, 2>{0.0, 0.0});
    CHECK(pl[0].coeff == 3.0);
  }
  {
    const fem2d::UniformMesh2D m(3, fem2d::Box{0.0, 1.0, 0.0, 1.0});
    hbnet::UniformSampler rng(15);
    std::vector<double> v(m.node_count());
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    const fem2d::FemFunction2D f(m, v);
    const auto pl = cn::fem_to_placements(f);
    CHECK(pl.size() == 81);
    const auto net = cn::build_fem2d(pl);
    CHECK(widths(net) == std::vector<std::size_t>{4 * 81, 15 * 81});
    const auto pts = oracle::random_points(16, 10000, 2, 0.0, 1.0);
    CHECK(max_dev(net, pts, [&](const Point& x) { return fem2d::fem_eval(f, x[0], x[1]); }) < 1e-10);
  }
  cn::HatPlacement singular;
  singular.linear = {1.0, 2.0, 0.5, 1.0};
  CHECK_THROWS_AS(cn::build_fem2d(std::vector<cn::HatPlacement>{singular}), std::invalid_argument);
  CHECK_THROWS_AS(cn::build_fem2d(std::vector<cn::HatPlacement>{}), std::invalid_argument);
}
