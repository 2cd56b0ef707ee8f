#include "hbnet/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <stdexcept>

#include "hbnet/constructions.hpp"
#include "hbnet/hb1d.hpp"
#include "hbnet/netcore.hpp"
#include "hbnet/pwl_exact.hpp"
#include "hbnet/random.hpp"

namespace hbnet::verify {

namespace cn = constructions;

namespace {

using Clock = std::chrono::steady_clock;
using Point = std::vector<double>;

double pow4(int l) { return std::ldexp(1.0, -2 * l); }

double monomial_value(const std::vector<unsigned>& k, std::span<const double> x) {
  double v = 1.0;
  for (std::size_t i = 0; i < k.size(); ++i)
    for (unsigned e = 0; e < k[i]; ++e) v *= x[i];
  return v;
}

std::string join(const std::vector<unsigned>& k) {
  std::string s;
  for (std::size_t i = 0; i < k.size(); ++i) s += (i ? " " : "") + std::to_string(k[i]);
  return s;
}

ClaimRow finish(ClaimRow row) {
  switch (row.kind) {
    case ClaimKind::equal:
      row.pass = std::abs(row.measured - row.theoretical) <= row.tolerance;
      break;
    case ClaimKind::at_most:
      row.pass = row.measured <= row.theoretical + row.tolerance;
      break;
    case ClaimKind::nonzero:
      row.pass = std::abs(row.measured) > row.tolerance;
      break;
  }
  if (!std::isfinite(row.measured)) row.pass = false;
  return row;
}

// Runs `fn`, which fills in the measurement, and stamps the elapsed time.
ClaimRow timed(ClaimRow row, const std::function<void(ClaimRow&)>& fn) {
  const auto t0 = Clock::now();
  fn(row);
  row.runtime_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  return finish(std::move(row));
}

ClaimRow claim(std::string id, std::string anchor, ClaimKind kind, double theoretical, double tolerance) {
  ClaimRow r;
  r.claim_id = std::move(id);
  r.anchor = std::move(anchor);
  r.kind = kind;
  r.theoretical = theoretical;
  r.tolerance = tolerance;
  return r;
}

// Running max of |f - g| with its witness.
struct MaxDev {
  double value = 0.0;
  Point witness;
  void add(double e, const Point& x) {
    if (!(e <= value) || witness.empty()) {
      value = e;
      witness = x;
    }
  }
};

std::vector<Point> random_points(std::uint64_t seed, std::size_t n, const std::vector<double>& lo,
                                 const std::vector<double>& hi) {
  UniformSampler rng(seed);
  std::vector<Point> pts(n, Point(lo.size()));
  for (auto& p : pts)
    for (std::size_t k = 0; k < lo.size(); ++k) p[k] = rng.uniform(lo[k], hi[k]);
  return pts;
}

std::vector<Point> square_points(std::uint64_t seed, std::size_t n, double lo, double hi, std::size_t d = 2) {
  return random_points(seed, n, std::vector<double>(d, lo), std::vector<double>(d, hi));
}

// Hypotenuse midpoints of the level-`level` mesh of [-M, M]^2.
std::vector<Point> hypotenuse_midpoints(int level, double bound) {
  const fem2d::UniformMesh2D mesh(level);
  const double h = mesh.h();
  std::vector<Point> pts;
  for (std::size_t j = 0; j < mesh.cells_y(); ++j)
    for (std::size_t i = 0; i < mesh.cells_x(); ++i)
      pts.push_back({bound * (mesh.x(i) + 0.5 * h), bound * (mesh.y(j) + 0.5 * h)});
  return pts;
}

std::vector<Point> grid_vertices(int level) {
  const fem2d::UniformMesh2D mesh(level);
  std::vector<Point> pts;
  for (std::size_t j = 0; j < mesh.nodes_y(); ++j)
    for (std::size_t i = 0; i < mesh.nodes_x(); ++i) pts.push_back({mesh.x(i), mesh.y(j)});
  return pts;
}

int level_or(const Options& o, int fallback) {
  const int l = o.max_level.value_or(fallback);
  if (l < 1 || l > 20) throw std::invalid_argument("max level must lie in [1, 20]");
  return l;
}

// Suites ---------------------------------------------------------------------

std::vector<ClaimRow> suite_x2(const Options& o) {
  std::vector<ClaimRow> rows;
  for (int L = 1; L <= level_or(o, 8); ++L) {
    rows.push_back(timed(claim("x2.linf L=" + std::to_string(L), "square approximation sup error", ClaimKind::equal,
                               pow4(L), 1e-12),
                         [&](ClaimRow& r) {
                           const auto f = pwl::extract_pwl(cn::build_x2_hat(L), -1.0, 1.0);
                           const auto rep = pwl::sup_error_vs_quadratic(f, -1.0, 1.0);
                           r.measured = rep.value;
                           r.witness = rep.witness;
                         }));
  }
  return rows;
}

std::vector<ClaimRow> suite_x2_w1(const Options& o) {
  std::vector<ClaimRow> rows;
  for (int L = 1; L <= level_or(o, 8); ++L) {
    rows.push_back(timed(claim("x2.w1inf L=" + std::to_string(L), "square approximation derivative error",
                               ClaimKind::equal, std::ldexp(1.0, 1 - L), 1e-12),
                         [&](ClaimRow& r) {
                           const auto f = pwl::extract_pwl(cn::build_x2_hat(L), -1.0, 1.0);
                           const auto rep = pwl::w1inf_error_vs_quadratic(f, -1.0, 1.0);
                           r.measured = rep.value;
                           r.witness = rep.witness;
                         }));
  }
  return rows;
}

std::vector<ClaimRow> suite_hb1d(const Options& o) {
  std::vector<ClaimRow> rows;
  const auto sq = [](double x) { return x * x; };
  for (int L = 0; L <= level_or(o, 8); ++L) {
    const std::string tag = " L=" + std::to_string(L);
    rows.push_back(timed(claim("hb1d.linf" + tag, "1d interpolation sup error", ClaimKind::equal,
                               pow4(L + 1), 1e-12),
                         [&](ClaimRow& r) {
                           const auto rep = pwl::sup_error_vs_quadratic(hb1d::interpolate_1d(sq, L), 0.0, 1.0);
                           r.measured = rep.value;
                           r.witness = rep.witness;
                         }));
    rows.push_back(timed(claim("hb1d.w1inf" + tag, "1d interpolation derivative error", ClaimKind::equal,
                               std::ldexp(1.0, -L), 1e-12),
                         [&](ClaimRow& r) {
                           const auto rep = pwl::w1inf_error_vs_quadratic(hb1d::interpolate_1d(sq, L), 0.0, 1.0);
                           r.measured = rep.value;
                           r.witness = rep.witness;
                         }));
  }
  const int max_surplus = 10;
  const auto coeffs = hb1d::hierarchical_coeffs(sq, max_surplus);
  for (int l = 1; l <= max_surplus; ++l) {
    rows.push_back(timed(claim("hb1d.surplus l=" + std::to_string(l), "hierarchical surplus of x^2",
                               ClaimKind::equal, -pow4(l), 1e-14),
                         [&](ClaimRow& r) {
                           const auto& mu = coeffs[static_cast<std::size_t>(l - 1)];
                           // report the entry farthest from the claimed value
                           std::size_t worst = 0;
                           for (std::size_t k = 0; k < mu.size(); ++k)
                             if (std::abs(mu[k] + pow4(l)) > std::abs(mu[worst] + pow4(l))) worst = k;
                           r.measured = mu[worst];
                           r.witness = {static_cast<double>(2 * worst + 1) * std::ldexp(1.0, -l)};
                         }));
  }
  return rows;
}

std::vector<ClaimRow> suite_xy(const Options& o) {
  std::vector<ClaimRow> rows;
  const int top = std::min(level_or(o, 6), 8);
  const std::size_t n = 20000;
  for (double M : {1.0, 2.5}) {
    for (int L = 2; L <= top; ++L) {
      const auto net = cn::build_xy_hat(L, M);
      const std::string tag = " M=" + format_real(M) + " L=" + std::to_string(L);
      const auto random = square_points(o.seed + static_cast<std::uint64_t>(L), n, -M, M);
      auto eval_net = [&](const Point& p) { return eval_skip(net, p); };
      rows.push_back(timed(claim("xy.error" + tag, "product approximation error", ClaimKind::equal,
                                 M * M * pow4(L - 1), 1e-10),
                           [&](ClaimRow& r) {
                             MaxDev dev;
                             for (const auto& p : hypotenuse_midpoints(L - 2, M)) dev.add(std::abs(eval_net(p) - p[0] * p[1]), p);
                             for (const auto& p : random) dev.add(std::abs(eval_net(p) - p[0] * p[1]), p);
                             r.measured = dev.value;
                             r.witness = dev.witness;
                           }));
      rows.push_back(timed(claim("xy.range" + tag, "product approximation range", ClaimKind::at_most, M * M, 1e-12),
                           [&](ClaimRow& r) {
                             MaxDev dev;
                             for (const auto& p : grid_vertices(L)) dev.add(std::abs(eval_net({M * p[0], M * p[1]})), {M * p[0], M * p[1]});
                             for (const auto& p : random) dev.add(std::abs(eval_net(p)), p);
                             r.measured = dev.value;
                             r.witness = dev.witness;
                           }));
      rows.push_back(timed(claim("xy.axes" + tag, "product approximation vanishes on the axes", ClaimKind::equal,
                                 0.0, 1e-12),
                           [&](ClaimRow& r) {
                             MaxDev dev;
                             UniformSampler rng(o.seed);
                             for (int s = 0; s < 1000; ++s) {
                               const double t = rng.uniform(-M, M);
                               const Point a{t, 0.0}, b{0.0, t};
                               dev.add(std::abs(eval_net(a)), a);
                               dev.add(std::abs(eval_net(b)), b);
                             }
                             r.measured = dev.value;
                             r.witness = dev.witness;
                           }));
    }
  }
  return rows;
}

std::vector<ClaimRow> suite_identity(const Options& o) {
  std::vector<ClaimRow> rows;
  const int top = level_or(o, 5);
  for (int L = 0; L <= top; ++L) {
    rows.push_back(timed(claim("identity L=" + std::to_string(L), "interpolant equals product network",
                               ClaimKind::equal, 0.0, 1e-12),
                         [&](ClaimRow& r) {
                           const auto net = cn::build_xy_hat(L + 2, 1.0);
                           MaxDev dev;
                           auto check = [&](const Point& p) {
                             dev.add(std::abs(fem2d::interp_xy(L, p[0], p[1]) - eval_skip(net, p)), p);
                           };
                           for (const auto& p : grid_vertices(L + 1)) check(p);
                           for (const auto& p : square_points(o.seed, 10000, -1.0, 1.0)) check(p);
                           r.measured = dev.value;
                           r.witness = dev.witness;
                         }));
  }
  return rows;
}

const std::vector<std::vector<unsigned>>& monomial_cases() {
  static const std::vector<std::vector<unsigned>> cases{{2},    {3},       {5},       {1, 1},    {2, 1},
                                                        {3, 2}, {1, 1, 1}, {2, 0, 3}, {1, 1, 1, 1}, {0, 2, 1, 2}};
  return cases;
}

std::vector<ClaimRow> suite_monomial(const Options& o) {
  std::vector<ClaimRow> rows;
  for (int L : {3, 5}) {
    for (const auto& k : monomial_cases()) {
      const cn::Monomial mono(k);
      const unsigned p = mono.degree();
      const auto net = cn::build_monomial(mono, L);
      const auto pts = square_points(o.seed, 10000, -1.0, 1.0, k.size());
      const std::string tag = " k=(" + join(k) + ") L=" + std::to_string(L);
      rows.push_back(timed(claim("monomial.error" + tag, "monomial approximation error", ClaimKind::at_most,
                                 (p - 1.0) * pow4(L - 1), 1e-12),
                           [&](ClaimRow& r) {
                             MaxDev dev;
                             for (const auto& x : pts) dev.add(std::abs(eval_skip(net, x) - monomial_value(k, x)), x);
                             r.measured = dev.value;
                             r.witness = dev.witness;
                           }));
      rows.push_back(timed(claim("monomial.norm" + tag, "monomial approximant bounded by one", ClaimKind::at_most, 1.0,
                                 1e-12),
                           [&](ClaimRow& r) {
                             MaxDev dev;
                             for (const auto& x : pts) dev.add(std::abs(eval_skip(net, x)), x);
                             r.measured = dev.value;
                             r.witness = dev.witness;
                           }));
      rows.push_back(timed(claim("monomial.shape" + tag, "monomial network depth 3(p-1)L", ClaimKind::equal,
                                 3.0 * (p - 1) * L, 0.0),
                           [&](ClaimRow& r) {
                             const auto w = widths(net);
                             const bool width_ok = std::all_of(w.begin(), w.end(), [](std::size_t v) { return v == 4; });
                             r.measured = width_ok ? static_cast<double>(depth(net)) : -1.0;
                           }));
    }
  }
  return rows;
}

cn::Polynomial random_polynomial(std::uint64_t seed, std::size_t d, unsigned max_degree, std::size_t terms) {
  UniformSampler rng(seed);
  cn::Polynomial p(d);
  while (p.terms().size() < terms) {
    std::vector<unsigned> k(d, 0);
    const unsigned deg = static_cast<unsigned>(rng.unit() * (max_degree + 1));
    for (unsigned e = 0; e < deg; ++e) ++k[static_cast<std::size_t>(rng.unit() * static_cast<double>(d))];
    p.add_term(k, rng.uniform(-1.0, 1.0));
  }
  return p;
}

std::vector<ClaimRow> suite_polynomial(const Options& o) {
  std::vector<ClaimRow> rows;
  for (std::size_t d = 1; d <= 4; ++d) {
    const cn::Polynomial poly = random_polynomial(o.seed * 101 + d, d, 5, 4);
    for (int L : {3, 5}) {
      const auto net = cn::build_polynomial(poly, L);
      const double p = std::max(1u, poly.degree());
      const std::string tag = " d=" + std::to_string(d) + " L=" + std::to_string(L);
      rows.push_back(timed(claim("polynomial.error" + tag, "polynomial approximation error", ClaimKind::at_most,
                                 (p - 1.0) * pow4(L - 1) * poly.coeff_abs_sum(), 1e-12),
                           [&](ClaimRow& r) {
                             MaxDev dev;
                             for (const auto& x : square_points(o.seed + d, 10000, -1.0, 1.0, d))
                               dev.add(std::abs(eval_skip(net, x) - poly(x)), x);
                             r.measured = dev.value;
                             r.witness = dev.witness;
                           }));
    }
  }
  return rows;
}

std::vector<ClaimRow> suite_psi(const Options& o) {
  std::vector<ClaimRow> rows;
  for (int l = 1; l <= 4; ++l) {
    const auto net = cn::build_psi_ell(l);
    const std::string tag = " l=" + std::to_string(l);
    rows.push_back(timed(claim("psi.match" + tag, "psi network equals interpolant difference", ClaimKind::equal, 0.0,
                               1e-12),
                         [&](ClaimRow& r) {
                           MaxDev dev;
                           for (const auto& p : square_points(o.seed + static_cast<std::uint64_t>(l), 10000, -1.0, 1.0))
                             dev.add(std::abs(eval_mlp(net, p) - fem2d::psi_ref(l, p[0], p[1])), p);
                           r.measured = dev.value;
                           r.witness = dev.witness;
                         }));
    rows.push_back(timed(claim("psi.shape" + tag, "psi network depth l+2 width 9", ClaimKind::equal, l + 2.0, 0.0),
                         [&](ClaimRow& r) {
                           const auto w = widths(net);
                           const bool ok = std::all_of(w.begin(), w.end(), [](std::size_t v) { return v <= 9; });
                           r.measured = ok ? static_cast<double>(depth(net)) : -1.0;
                         }));
    rows.push_back(timed(claim("psi.norm" + tag, "normalized psi has unit sup norm", ClaimKind::equal, 1.0, 1e-12),
                         [&](ClaimRow& r) {
                           MaxDev dev;
                           for (const auto& p : grid_vertices(l))
                             dev.add(std::abs(fem2d::psi_ref(l, p[0], p[1])) / pow4(l), p);
                           r.measured = dev.value;
                           r.witness = dev.witness;
                         }));
  }
  return rows;
}

std::vector<ClaimRow> suite_hat2d(const Options&) {
  std::vector<ClaimRow> rows;
  const auto net = cn::build_hat2d();
  rows.push_back(timed(claim("hat2d.match", "two-layer hat equals reference hat", ClaimKind::equal, 0.0, 1e-12),
                       [&](ClaimRow& r) {
                         MaxDev dev;
                         for (int j = 0; j <= 200; ++j) {
                           for (int i = 0; i <= 200; ++i) {
                             const Point p{-2.0 + 0.02 * i, -2.0 + 0.02 * j};
                             dev.add(std::abs(eval_mlp(net, p) - fem2d::hat_ref(p[0], p[1])), p);
                           }
                         }
                         r.measured = dev.value;
                         r.witness = dev.witness;
                       }));
  rows.push_back(timed(claim("hat2d.shape", "hat network depth 2 width 15", ClaimKind::equal, 2.0, 0.0),
                       [&](ClaimRow& r) {
                         const auto w = widths(net);
                         const bool ok = std::all_of(w.begin(), w.end(), [](std::size_t v) { return v <= 15; });
                         r.measured = ok ? static_cast<double>(depth(net)) : -1.0;
                       }));
  rows.push_back(timed(claim("hat2d.unguarded", "unguarded formula is nonzero outside the support",
                             ClaimKind::nonzero, 0.0, 1e-14),
                       [&](ClaimRow& r) {
                         const Point p{1.5, 1.5};
                         r.measured = eval_mlp(cn::build_hat2d_unguarded(), p) - fem2d::hat_ref(p[0], p[1]);
                         r.witness = p;
                       }));
  return rows;
}

std::vector<ClaimRow> suite_fem(const Options& o) {
  std::vector<ClaimRow> rows;
  const fem2d::Box unit{0.0, 1.0, 0.0, 1.0};
  for (int level = 1; level <= 3; ++level) {
    const auto fem = random_fem_function(level, unit, o.seed + static_cast<std::uint64_t>(level));
    const auto placements = cn::fem_to_placements(fem);
    const auto net = cn::build_fem2d(placements);
    const std::string tag = " level=" + std::to_string(level);
    rows.push_back(timed(claim("fem.match" + tag, "finite element function as two-layer network", ClaimKind::equal,
                               0.0, 1e-10),
                         [&](ClaimRow& r) {
                           MaxDev dev;
                           for (const auto& p : square_points(o.seed, 10000, 0.0, 1.0))
                             dev.add(std::abs(eval_mlp(net, p) - fem2d::fem_eval(fem, p[0], p[1])), p);
                           r.measured = dev.value;
                           r.witness = dev.witness;
                         }));
    rows.push_back(timed(claim("fem.width" + tag, "layer widths at most 15N", ClaimKind::at_most,
                               15.0 * static_cast<double>(placements.size()), 0.0),
                         [&](ClaimRow& r) {
                           const auto w = widths(net);
                           r.measured = depth(net) == 2 ? static_cast<double>(*std::max_element(w.begin(), w.end()))
                                                        : INFINITY;
                         }));
  }
  return rows;
}

std::vector<ClaimRow> conversion_rows(const std::string& name, const SkipNetwork& net, std::uint64_t seed,
                                      std::size_t n_points) {
  const auto plain = cn::skip_to_mlp(net);
  const std::size_t d = net.input_dim;
  std::vector<ClaimRow> rows;
  rows.push_back(timed(claim("convert.match " + name, "skip network as plain network", ClaimKind::equal, 0.0, 1e-12),
                       [&](ClaimRow& r) {
                         MaxDev dev;
                         for (const auto& x : square_points(seed, n_points, -1.0, 1.0, d))
                           dev.add(std::abs(eval_mlp(plain, x) - eval_skip(net, x)), x);
                         r.measured = dev.value;
                         r.witness = dev.witness;
                       }));
  const auto ws = widths(net);
  const double n = ws.empty() ? 0.0 : static_cast<double>(*std::max_element(ws.begin(), ws.end()));
  rows.push_back(timed(claim("convert.width " + name, "plain width N+2(d+1)", ClaimKind::equal,
                             ws.empty() ? 0.0 : n + 2.0 * (static_cast<double>(d) + 1.0), 0.0),
                       [&](ClaimRow& r) {
                         const auto wp = widths(plain);
                         r.measured = wp.empty() ? 0.0 : static_cast<double>(*std::max_element(wp.begin(), wp.end()));
                         if (depth(plain) != depth(net)) r.measured = -1.0;
                       }));
  return rows;
}

std::vector<std::size_t> random_widths(UniformSampler& rng) {
  const std::size_t depth = 1 + static_cast<std::size_t>(rng.unit() * 6);
  std::vector<std::size_t> w(depth);
  for (auto& v : w) v = 1 + static_cast<std::size_t>(rng.unit() * 5);
  return w;
}

std::vector<ClaimRow> suite_convert(const Options& o) {
  std::vector<ClaimRow> rows;
  UniformSampler rng(o.seed);
  for (std::size_t t = 0; t < o.trials; ++t) {
    const std::size_t d = 1 + static_cast<std::size_t>(rng.unit() * 3);
    const auto w = random_widths(rng);
    const auto net = random_skip_network(o.seed * 1000 + t, d, w);
    for (auto& r : conversion_rows("random#" + std::to_string(t), net, o.seed + t, 2000)) rows.push_back(r);
  }
  const std::vector<std::pair<std::string, SkipNetwork>> built{
      {"x2 L=4", cn::build_x2_hat(4)},
      {"xy L=4", cn::build_xy_hat(4, 1.0)},
      {"monomial (2 1) L=3", cn::build_monomial(cn::Monomial({2, 1}), 3)},
  };
  for (const auto& [name, net] : built)
    for (auto& r : conversion_rows(name, net, o.seed, 2000)) rows.push_back(r);
  return rows;
}

std::vector<ClaimRow> suite_algebra(const Options& o) {
  std::vector<ClaimRow> rows;
  const std::size_t d = 2;
  const std::vector<std::size_t> w3{3, 3, 3}, w3b{3, 3};
  const auto f = random_skip_network(o.seed, d, w3);
  const auto g = random_skip_network(o.seed + 1, d, w3b);
  const auto sum = cn::net_add(f, g);
  const auto pts = square_points(o.seed, 1000, -1.0, 1.0, d);
  rows.push_back(timed(claim("algebra.add", "sum of networks", ClaimKind::equal, 0.0, 1e-12), [&](ClaimRow& r) {
    MaxDev dev;
    for (const auto& x : pts) dev.add(std::abs(eval_skip(sum, x) - eval_skip(f, x) - eval_skip(g, x)), x);
    r.measured = dev.value;
    r.witness = dev.witness;
    if (depth(sum) != 5 || max_width(Network(sum)) != 3) r.measured = INFINITY;
  }));

  // f1 reads out its last layer only; f2 reads x0 in its first layer only.
  SkipNetwork f1 = random_skip_network(o.seed + 2, d, w3);
  {
    auto w = f1.output.weights.row(0);
    for (std::size_t c = d; c < d + 6; ++c) w[c] = 0.0;
  }
  const std::vector<std::size_t> w4{4, 2, 4};
  SkipNetwork f2 = random_skip_network(o.seed + 3, d + 1, w4);
  for (std::size_t l = 1; l < f2.layers.size(); ++l)
    for (std::size_t r = 0; r < f2.layers[l].width(); ++r) f2.layers[l].input_block(r, 0) = 0.0;
  const auto comp = cn::net_compose_modified(f2, f1);
  rows.push_back(timed(claim("algebra.compose", "modified composition", ClaimKind::equal, 0.0, 1e-12),
                       [&](ClaimRow& r) {
                         MaxDev dev;
                         for (const auto& x : pts) {
                           const Point z{eval_skip(f1, x), x[0], x[1]};
                           dev.add(std::abs(eval_skip(comp, x) - eval_skip(f2, z)), x);
                         }
                         r.measured = dev.value;
                         r.witness = dev.witness;
                         if (depth(comp) != 6 || max_width(Network(comp)) != 4) r.measured = INFINITY;
                       }));
  return rows;
}

using SuiteFn = std::vector<ClaimRow> (*)(const Options&);

const std::vector<std::pair<std::string, SuiteFn>>& suites() {
  static const std::vector<std::pair<std::string, SuiteFn>> s{
      {"x2", suite_x2},         {"x2-w1", suite_x2_w1},       {"hb1d", suite_hb1d},   {"xy", suite_xy},
      {"identity", suite_identity}, {"monomial", suite_monomial}, {"polynomial", suite_polynomial},
      {"psi", suite_psi},       {"hat2d", suite_hat2d},       {"fem", suite_fem},     {"convert", suite_convert},
      {"algebra", suite_algebra},
  };
  return s;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

}  // namespace

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [name, fn] : suites()) n.push_back(name);
    n.push_back("all");
    return n;
  }();
  return names;
}

std::vector<ClaimRow> run_suite(const std::string& suite, const Options& opts) {
  std::vector<ClaimRow> rows;
  for (const auto& [name, fn] : suites()) {
    if (suite == "all" || suite == name) {
      auto part = fn(opts);
      rows.insert(rows.end(), part.begin(), part.end());
    }
  }
  if (suite != "all" && rows.empty()) throw std::invalid_argument("unknown suite '" + suite + "'");
  return rows;
}

std::string to_csv(const std::vector<ClaimRow>& rows, bool timing) {
  std::string out = "claim_id,paper_anchor,theoretical,measured,witness,tolerance,pass,runtime_ms\n";
  for (const auto& r : rows) {
    std::string theo = format_real(r.theoretical);
    if (r.kind == ClaimKind::at_most) theo = "<=" + theo;
    if (r.kind == ClaimKind::nonzero) theo = "!=0";
    std::string wit;
    for (std::size_t k = 0; k < r.witness.size(); ++k) wit += (k ? " " : "") + format_real(r.witness[k]);
    char ms[32];
    std::snprintf(ms, sizeof ms, "%.3f", timing ? r.runtime_ms : 0.0);
    out += r.claim_id + "," + r.anchor + "," + theo + "," + format_real(r.measured) + "," + wit + "," +
           format_real(r.tolerance) + "," + (r.pass ? "true" : "false") + "," + ms + "\n";
  }
  return out;
}

fem2d::FemFunction2D random_fem_function(int level, const fem2d::Box& box, std::uint64_t seed) {
  const fem2d::UniformMesh2D mesh(level, box);
  UniformSampler rng(seed);
  std::vector<double> v(mesh.node_count());
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return fem2d::FemFunction2D(mesh, std::move(v));
}

void write_report(const std::filesystem::path& dir, std::uint64_t seed) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
  const std::string nl = "\n";

  {
    auto out = open_out(dir / "x2_error.csv");
    out << "L,theoretical_linf,measured_linf,theoretical_w1inf,measured_w1inf" << nl;
    for (int L = 1; L <= 10; ++L) {
      const auto f = pwl::extract_pwl(cn::build_x2_hat(L), -1.0, 1.0);
      out << L << "," << format_real(pow4(L)) << "," << format_real(pwl::sup_error_vs_quadratic(f, -1, 1).value)
          << "," << format_real(std::ldexp(1.0, 1 - L)) << ","
          << format_real(pwl::w1inf_error_vs_quadratic(f, -1, 1).value) << nl;
    }
  }
  {
    auto out = open_out(dir / "xy_error.csv");
    out << "M,L,theoretical,measured" << nl;
    for (double M : {1.0, 2.5}) {
      for (int L = 2; L <= 8; ++L) {
        const auto net = cn::build_xy_hat(L, M);
        double worst = 0.0;
        for (const auto& p : hypotenuse_midpoints(L - 2, M)) worst = std::max(worst, std::abs(eval_skip(net, p) - p[0] * p[1]));
        for (const auto& p : square_points(seed, 10000, -M, M)) worst = std::max(worst, std::abs(eval_skip(net, p) - p[0] * p[1]));
        out << format_real(M) << "," << L << "," << format_real(M * M * pow4(L - 1)) << "," << format_real(worst) << nl;
      }
    }
  }
  {
    auto out = open_out(dir / "monomial_error.csv");
    out << "exponents,L,bound,measured" << nl;
    for (const auto& k : monomial_cases()) {
      const cn::Monomial mono(k);
      for (int L = 2; L <= 6; ++L) {
        const auto net = cn::build_monomial(mono, L);
        double worst = 0.0;
        for (const auto& x : square_points(seed, 5000, -1.0, 1.0, k.size()))
          worst = std::max(worst, std::abs(eval_skip(net, x) - monomial_value(k, x)));
        out << join(k) << "," << L << "," << format_real((mono.degree() - 1.0) * pow4(L - 1)) << ","
            << format_real(worst) << nl;
      }
    }
  }
  {
    auto out = open_out(dir / "g_ell.csv");
    out << "x,g_1,g_2,g_3,g_4" << nl;
    std::vector<MlpNetwork> nets;
    for (int l = 1; l <= 4; ++l) nets.push_back(cn::build_g_ell(l));
    for (int i = 0; i <= 64; ++i) {
      const double x = i / 64.0;
      out << format_real(x);
      for (const auto& n : nets) out << "," << format_real(eval_mlp(n, std::span<const double>(&x, 1)));
      out << nl;
    }
  }
  {
    auto out = open_out(dir / "psi.csv");
    auto norm = open_out(dir / "psi_norm.csv");
    out << "x,y,psi_1,psi_2,psi_3,psi_4" << nl;
    norm << "l,max_normalized" << nl;
    std::vector<MlpNetwork> nets;
    for (int l = 1; l <= 4; ++l) nets.push_back(cn::build_psi_ell(l));
    std::vector<double> worst(4, 0.0);
    for (int j = 0; j <= 64; ++j) {
      for (int i = 0; i <= 64; ++i) {
        const Point p{i / 64.0, j / 64.0};
        out << format_real(p[0]) << "," << format_real(p[1]);
        for (std::size_t l = 0; l < 4; ++l) {
          const double v = eval_mlp(nets[l], p) / pow4(static_cast<int>(l) + 1);
          worst[l] = std::max(worst[l], std::abs(v));
          out << "," << format_real(v);
        }
        out << nl;
      }
    }
    for (std::size_t l = 0; l < 4; ++l) norm << l + 1 << "," << format_real(worst[l]) << nl;
  }
  {
    auto out = open_out(dir / "README.txt");
    out << "x2_error.csv        L, exact and theoretical sup and derivative errors of the square network on [-1,1]\n"
           "xy_error.csv        M, L, theoretical and sampled sup error of the product network on [-M,M]^2\n"
           "monomial_error.csv  exponents (space separated), L, error bound, sampled sup error on [-1,1]^d\n"
           "g_ell.csv           x on a 1/64 grid of [0,1], sawtooth networks g_1..g_4\n"
           "psi.csv             (x,y) on a 1/64 grid of [0,1]^2, psi_l networks scaled by 4^l for l = 1..4\n"
           "psi_norm.csv        l, max |4^l psi_l| over the psi.csv grid\n"
           "Numbers use '.' as decimal separator and 17 significant digits.\n";
  }
}

}  // namespace hbnet::verify
