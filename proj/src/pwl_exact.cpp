#include "hbnet/pwl_exact.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "hbnet/random.hpp"

namespace hbnet::pwl {

namespace {

// A one-input network in skip form: layer l reads x through `wx` and the
// previous layer through `carry`. Plain networks have wx = 0 past layer 1.
struct Layer1D {
  std::vector<double> wx;
  Matrix carry;
  std::vector<double> bias;
};

struct View1D {
  std::vector<Layer1D> layers;
  double out_x = 0.0;
  std::vector<std::vector<double>> out_layers;
  double out_bias = 0.0;
};

View1D make_view(const MlpNetwork& net) {
  View1D v;
  const std::size_t L = net.hidden.size();
  for (std::size_t l = 0; l < L; ++l) {
    const AffineMap& m = net.hidden[l];
    Layer1D layer;
    layer.bias = m.bias;
    if (l == 0) {
      layer.wx.resize(m.out_dim());
      for (std::size_t r = 0; r < m.out_dim(); ++r) layer.wx[r] = m.weights(r, 0);
      layer.carry = Matrix(m.out_dim(), 0);
    } else {
      layer.wx.assign(m.out_dim(), 0.0);
      layer.carry = m.weights;
    }
    v.layers.push_back(std::move(layer));
    v.out_layers.emplace_back(m.out_dim(), 0.0);
  }
  const auto w = net.output.weights.row(0);
  if (L == 0) {
    v.out_x = w[0];
  } else {
    v.out_layers.back().assign(w.begin(), w.end());
  }
  v.out_bias = net.output.bias[0];
  return v;
}

View1D make_view(const SkipNetwork& net) {
  View1D v;
  const auto w = net.output.weights.row(0);
  v.out_x = w[0];
  std::size_t off = 1;
  for (const SkipLayer& s : net.layers) {
    Layer1D layer;
    layer.bias = s.bias;
    layer.wx.resize(s.width());
    for (std::size_t r = 0; r < s.width(); ++r) layer.wx[r] = s.input_block(r, 0);
    layer.carry = s.carry_block;
    v.layers.push_back(std::move(layer));
    v.out_layers.emplace_back(w.begin() + static_cast<std::ptrdiff_t>(off),
                              w.begin() + static_cast<std::ptrdiff_t>(off + s.width()));
    off += s.width();
  }
  v.out_bias = net.output.bias[0];
  return v;
}

// Pre-activations of every layer at x.
std::vector<std::vector<double>> pre_activations(const View1D& v, double x) {
  std::vector<std::vector<double>> pre;
  std::vector<double> prev;
  for (const Layer1D& layer : v.layers) {
    std::vector<double> z(layer.bias);
    for (std::size_t r = 0; r < z.size(); ++r) {
      z[r] += layer.wx[r] * x;
      const auto row = layer.carry.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) z[r] += row[c] * prev[c];
    }
    prev.resize(z.size());
    for (std::size_t r = 0; r < z.size(); ++r) prev[r] = relu(z[r]);
    pre.push_back(std::move(z));
  }
  return pre;
}

// One-sided derivative at x in the given direction (+1 or -1). A neuron with
// pre-activation at zero is active when it grows in that direction.
double one_sided_slope(const View1D& v, double x, double direction) {
  constexpr double tol = 1e-13;
  double slope = v.out_x;
  std::vector<double> prev_val, prev_der;
  for (std::size_t l = 0; l < v.layers.size(); ++l) {
    const Layer1D& layer = v.layers[l];
    const std::size_t n = layer.bias.size();
    std::vector<double> val(n), der(n);
    for (std::size_t r = 0; r < n; ++r) {
      double z = layer.bias[r] + layer.wx[r] * x;
      double dz = layer.wx[r];
      const auto row = layer.carry.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) {
        z += row[c] * prev_val[c];
        dz += row[c] * prev_der[c];
      }
      const bool active = z > tol || (std::abs(z) <= tol && direction * dz > 0.0);
      val[r] = relu(z);
      der[r] = active ? dz : 0.0;
      slope += v.out_layers[l][r] * der[r];
    }
    prev_val.swap(val);
    prev_der.swap(der);
  }
  return slope;
}

double value_at(const MlpNetwork& net, double x) { return eval_mlp(net, std::span<const double>(&x, 1)); }
double value_at(const SkipNetwork& net, double x) { return eval_skip(net, std::span<const double>(&x, 1)); }

bool close(double p, double q) { return std::abs(p - q) <= 1e-14 * std::max(1.0, std::abs(p)); }

template <class Net>
hb1d::PiecewiseLinear1D extract_view(const Net& net, double a, double b) {
  if (net.input_dim != 1) {
    throw StructuralError("breakpoint extraction needs a one-input network, got input dimension " +
                          std::to_string(net.input_dim));
  }
  if (!(a <= b) || !std::isfinite(a) || !std::isfinite(b)) throw std::invalid_argument("interval must satisfy a <= b");
  const View1D v = make_view(net);

  std::vector<double> pts{a};
  if (b > a && !close(a, b)) pts.push_back(b);
  std::vector<std::vector<std::vector<double>>> pre;
  for (double x : pts) pre.push_back(pre_activations(v, x));

  for (std::size_t l = 0; l < v.layers.size(); ++l) {
    std::vector<double> found;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
      const double xl = pts[k], xr = pts[k + 1];
      for (std::size_t r = 0; r < v.layers[l].bias.size(); ++r) {
        const double zl = pre[k][l][r], zr = pre[k + 1][l][r];
        if ((zl > 0.0 && zr < 0.0) || (zl < 0.0 && zr > 0.0)) {
          const double x = xl + (xr - xl) * zl / (zl - zr);
          if (x > xl && x < xr && !close(x, xl) && !close(xr, x)) found.push_back(x);
        }
      }
    }
    if (found.empty()) continue;
    std::sort(found.begin(), found.end());
    std::vector<double> merged;
    std::vector<std::vector<std::vector<double>>> merged_pre;
    std::size_t f = 0;
    for (std::size_t k = 0; k < pts.size(); ++k) {
      while (f < found.size() && found[f] < pts[k]) {
        const double x = found[f++];
        if (!merged.empty() && close(merged.back(), x)) continue;
        if (close(x, pts[k])) continue;
        merged.push_back(x);
        merged_pre.push_back(pre_activations(v, x));
      }
      merged.push_back(pts[k]);
      merged_pre.push_back(std::move(pre[k]));
    }
    pts.swap(merged);
    pre.swap(merged_pre);
  }

  hb1d::PiecewiseLinear1D out;
  out.breakpoints = pts;
  for (double x : pts) out.values.push_back(value_at(net, x));
  out.left_slope = one_sided_slope(v, pts.front(), -1.0);
  out.right_slope = one_sided_slope(v, pts.back(), 1.0);
  return out;
}

// Slope of f on the piece that contains the open interval around x.
double slope_at(const hb1d::PiecewiseLinear1D& f, double x) {
  const auto& bp = f.breakpoints;
  if (x < bp.front()) return f.left_slope;
  if (x > bp.back()) return f.right_slope;
  const auto it = std::upper_bound(bp.begin(), bp.end(), x);
  std::size_t k = static_cast<std::size_t>(it - bp.begin());
  if (k >= bp.size()) return f.right_slope;
  return f.slope(k - 1);
}

// Sorted points of [a, b] that split it into linear pieces of f.
std::vector<double> pieces(const hb1d::PiecewiseLinear1D& f, double a, double b) {
  if (!(a <= b)) throw std::invalid_argument("interval must satisfy a <= b");
  std::vector<double> p{a};
  for (double x : f.breakpoints)
    if (x > a && x < b) p.push_back(x);
  if (b > a) p.push_back(b);
  return p;
}

void consider(SupReport& rep, double value, double x) {
  ++rep.sample_count;
  if (value > rep.value || rep.witness.empty()) {
    rep.value = value;
    rep.witness = {x};
  }
}

}  // namespace

hb1d::PiecewiseLinear1D extract_pwl(const Network& net, double a, double b) {
  return std::visit([&](const auto& n) { return extract_view(n, a, b); }, net);
}

Network restrict_to_line(const Network& net, std::span<const double> x, std::span<const double> y) {
  const std::size_t d = input_dim(net);
  if (x.size() != d || y.size() != d) throw StructuralError("line endpoints must match the input dimension");
  // W (x + t (y - x)) + b = t W (y - x) + (W x + b)
  auto restrict_block = [&](const Matrix& w, std::vector<double>& bias) {
    Matrix out(w.rows(), 1);
    for (std::size_t r = 0; r < w.rows(); ++r) {
      for (std::size_t c = 0; c < d; ++c) {
        out(r, 0) += w(r, c) * (y[c] - x[c]);
        bias[r] += w(r, c) * x[c];
      }
    }
    return out;
  };
  if (const auto* mlp = std::get_if<MlpNetwork>(&net)) {
    MlpNetwork out = *mlp;
    out.input_dim = 1;
    AffineMap& first = out.hidden.empty() ? out.output : out.hidden.front();
    first.weights = restrict_block(first.weights, first.bias);
    return out;
  }
  SkipNetwork out = std::get<SkipNetwork>(net);
  out.input_dim = 1;
  for (SkipLayer& layer : out.layers) layer.input_block = restrict_block(layer.input_block, layer.bias);
  // Output map: the x block becomes one column, the rest is unchanged.
  const auto w = out.output.weights.row(0);
  Matrix xs(1, d, std::vector<double>(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(d)));
  std::vector<double> bias = out.output.bias;
  const Matrix xcol = restrict_block(xs, bias);
  std::vector<double> nw{xcol(0, 0)};
  nw.insert(nw.end(), w.begin() + static_cast<std::ptrdiff_t>(d), w.end());
  const std::size_t cols = nw.size();
  out.output = AffineMap(Matrix(1, cols, std::move(nw)), bias);
  return out;
}

SupReport sup_error_vs_quadratic(const hb1d::PiecewiseLinear1D& f, double a, double b) {
  SupReport rep;
  const std::vector<double> p = pieces(f, a, b);
  auto err = [&](double x) { return std::abs(x * x - hb1d::pwl_eval(f, x)); };
  consider(rep, err(p.front()), p.front());
  for (std::size_t k = 0; k + 1 < p.size(); ++k) {
    const double vertex = 0.5 * slope_at(f, 0.5 * (p[k] + p[k + 1]));
    if (vertex > p[k] && vertex < p[k + 1]) consider(rep, err(vertex), vertex);
    consider(rep, err(p[k + 1]), p[k + 1]);
  }
  return rep;
}

SupReport w1inf_error_vs_quadratic(const hb1d::PiecewiseLinear1D& f, double a, double b) {
  SupReport rep;
  const std::vector<double> p = pieces(f, a, b);
  if (p.size() == 1) {
    consider(rep, std::abs(2.0 * a - slope_at(f, a)), a);
    return rep;
  }
  for (std::size_t k = 0; k + 1 < p.size(); ++k) {
    const double m = slope_at(f, 0.5 * (p[k] + p[k + 1]));
    consider(rep, std::abs(2.0 * p[k] - m), p[k]);
    consider(rep, std::abs(2.0 * p[k + 1] - m), p[k + 1]);
  }
  return rep;
}

SupReport sup_error_sampled(const Evaluator& f, const Evaluator& g, const SampleBox& box,
                            const std::vector<std::vector<double>>& structured, std::size_t n_random,
                            std::uint64_t seed) {
  if (box.lo.size() != box.hi.size()) throw std::invalid_argument("box bounds differ in dimension");
  SupReport rep;
  rep.mode = SupMode::sampled;
  auto visit = [&](const std::vector<double>& x) {
    const double e = std::abs(f(x) - g(x));
    ++rep.sample_count;
    if (e > rep.value || rep.witness.empty()) {
      rep.value = e;
      rep.witness = x;
    }
  };
  for (const auto& x : structured) visit(x);
  UniformSampler rng(seed);
  std::vector<double> x(box.dim());
  for (std::size_t s = 0; s < n_random; ++s) {
    for (std::size_t k = 0; k < box.dim(); ++k) x[k] = rng.uniform(box.lo[k], box.hi[k]);
    visit(x);
  }
  return rep;
}

std::size_t linear_region_count(const hb1d::PiecewiseLinear1D& f) {
  if (f.segment_count() == 0) return 1;
  std::size_t count = 1;
  double last = f.slope(0);
  for (std::size_t k = 1; k < f.segment_count(); ++k) {
    const double m = f.slope(k);
    if (std::abs(m - last) >= 1e-12) ++count;
    last = m;
  }
  return count;
}

}  // namespace hbnet::pwl
