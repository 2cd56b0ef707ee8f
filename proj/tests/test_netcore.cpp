#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hbnet/constructions.hpp"
#include "hbnet/netcore.hpp"
#include "hbnet/pwl_exact.hpp"
#include "oracles.hpp"

using namespace hbnet;
namespace cn = hbnet::constructions;

namespace {

double at(const Network& net, std::initializer_list<double> x) {
  const std::vector<double> v(x);
  return eval(net, v);
}

}  // namespace

TEST_CASE("plain network evaluation of the tent map") {
  const Network g = cn::build_g();
  CHECK(at(g, {0.5}) == 1.0);
  CHECK(at(g, {-0.3}) == 0.0);
  CHECK(at(g, {0.25}) == 0.5);
}

TEST_CASE("skip network evaluation of the square network") {
  const Network s = cn::build_x2_hat(3);
  CHECK(at(s, {0.0}) == 0.0);
  CHECK(at(s, {1.0}) == doctest::Approx(1.0).epsilon(1e-15));
  // Line through (0, 0) and (1/4, 1/16) at x = 1/8.
  CHECK(std::abs(at(s, {0.125}) - oracle::s_hat_interp(3, 0.125)) < 1e-15);
  CHECK(std::abs(at(s, {0.125}) - 0.03125) < 1e-15);
}

TEST_CASE("dimension mismatch is a structural error") {
  const Network g = cn::build_g();
  const std::vector<double> two{0.1, 0.2};
  CHECK_THROWS_AS(eval(g, two), StructuralError);
  const Network s = cn::build_xy_hat(2, 1.0);
  const std::vector<double> one{0.1};
  CHECK_THROWS_AS(eval(s, one), StructuralError);
}

TEST_CASE("widths and depth") {
  CHECK(widths(Network(cn::build_g())) == std::vector<std::size_t>{3});
  CHECK(depth(Network(cn::build_g())) == 1);
  const Network hat = cn::build_hat2d();
  CHECK(depth(hat) == 2);
  CHECK(max_width(hat) == 15);
  const Network psi = cn::build_psi_ell(3);
  CHECK(depth(psi) == 5);
  CHECK(max_width(psi) == 9);
}

TEST_CASE("serialize round trip is bit exact") {
  const Network g = cn::build_g();
  const Network back = deserialize(serialize(g));
  REQUIRE(std::holds_alternative<MlpNetwork>(back));
  CHECK(std::get<MlpNetwork>(back) == std::get<MlpNetwork>(g));

  const std::vector<std::size_t> w{3, 2, 4};
  const SkipNetwork r = random_skip_network(11, 2, w);
  const Network rb = deserialize(serialize(r));
  REQUIRE(std::holds_alternative<SkipNetwork>(rb));
  CHECK(std::get<SkipNetwork>(rb) == r);

  const MlpNetwork m = cn::skip_to_mlp(r);
  CHECK(std::get<MlpNetwork>(deserialize(serialize(m))) == m);
}

TEST_CASE("kind skip gives a skip network") {
  const std::string doc = serialize(cn::build_x2_hat(2));
  CHECK(doc.find("\"kind\": \"skip\"") != std::string::npos);
  CHECK(std::holds_alternative<SkipNetwork>(deserialize(doc)));
}

TEST_CASE("malformed documents report a position") {
  SUBCASE("syntax error gives a byte offset") {
    try {
      deserialize("{\"kind\": \"mlp\",");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.position().rfind("byte ", 0) == 0);
    }
  }
  SUBCASE("mismatched layer dims give a path") {
    const std::string doc = R"({"kind":"mlp","input_dim":1,
      "layers":[{"weights":[[1],[1]],"bias":[0,0]},{"weights":[[1,1,1]],"bias":[0]}],
      "output":{"weights":[[1]],"bias":[0]}})";
    try {
      deserialize(doc);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.position() == "/layers/1/weights/0");
    }
  }
  SUBCASE("unknown kind") { CHECK_THROWS_AS(deserialize(R"({"kind":"cnn","input_dim":1,"layers":[]})"), ParseError); }
  SUBCASE("skip layer with wrong input block") {
    const std::string doc = R"({"kind":"skip","input_dim":2,
      "layers":[{"weights":[[1,1]],"bias":[0],"input_block_cols":1}],
      "output":{"weights":[[1,1,1]],"bias":[0]}})";
    CHECK_THROWS_AS(deserialize(doc), ParseError);
  }
}

TEST_CASE("random skip networks are seeded and bounded") {
  const std::vector<std::size_t> w{3, 3};
  const SkipNetwork a = random_skip_network(0, 2, w);
  CHECK(a == random_skip_network(0, 2, w));
  CHECK_FALSE(a == random_skip_network(1, 2, w));
  CHECK(a.output.in_dim() == 8);
  for (const auto& l : a.layers) {
    for (double v : l.input_block.data()) CHECK(std::abs(v) <= 1.0);
    for (double v : l.carry_block.data()) CHECK(std::abs(v) <= 1.0);
    for (double v : l.bias) CHECK(std::abs(v) <= 1.0);
  }
  CHECK_THROWS_AS(random_skip_network(0, 2, std::vector<std::size_t>{}), StructuralError);
}

TEST_CASE("eval_skip agrees with the concatenated-vector interpreter") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::size_t d = 1 + seed % 3;
    const std::vector<std::size_t> w{4, 2, 5, 3};
    const SkipNetwork net = random_skip_network(seed, d, w);
    double worst = 0.0;
    for (const auto& x : oracle::random_points(seed + 100, 100, d, -2.0, 2.0))
      worst = std::max(worst, std::abs(eval_skip(net, x) - oracle::skip_eval(net, x)));
    CHECK(worst < 1e-13);
  }
}

TEST_CASE("restrictions to lines are piecewise linear") {
  // Evaluation along x + t (y - x) matches the extracted breakpoint form.
  const std::vector<Network> nets{cn::build_xy_hat(3, 1.0), cn::build_hat2d(), cn::build_psi_ell(2),
                                  random_skip_network(5, 2, std::vector<std::size_t>{3, 3, 3}),
                                  cn::skip_to_mlp(random_skip_network(6, 2, std::vector<std::size_t>{2, 4}))};
  hbnet::UniformSampler rng(3);
  for (const auto& net : nets) {
    const std::vector<double> x{rng.uniform(-1, 1), rng.uniform(-1, 1)}, y{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const Network line = pwl::restrict_to_line(net, x, y);
    const auto f = pwl::extract_pwl(line, 0.0, 1.0);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
      const double t = rng.unit();
      const std::vector<double> p{x[0] + t * (y[0] - x[0]), x[1] + t * (y[1] - x[1])};
      worst = std::max(worst, std::abs(hb1d::pwl_eval(f, t) - eval(net, p)));
    }
    CHECK(worst < 1e-12);
  }
}
