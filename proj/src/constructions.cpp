#include "hbnet/constructions.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace hbnet::constructions {

namespace {

using Vec = std::vector<double>;

double sq_mesh(int level) { return std::ldexp(1.0, -2 * level); }

Vec unit(std::size_t n, std::size_t k, double c = 1.0) {
  Vec v(n, 0.0);
  v[k] = c;
  return v;
}

Vec axpy(const Vec& a, double s, const Vec& b) {
  Vec out(a);
  for (std::size_t k = 0; k < b.size(); ++k) out[k] += s * b[k];
  return out;
}

Vec negated(const Vec& a) {
  Vec out(a);
  for (double& v : out) v = -v;
  return out;
}

// One neuron of a skip layer: ReLU(in . x + carry . f_prev + bias), entering
// the output with weight `out`. Short vectors are zero-extended.
struct Neuron {
  Vec in;
  Vec carry;
  double bias = 0.0;
  double out = 0.0;
};

class SkipAssembler {
 public:
  explicit SkipAssembler(std::size_t d) : d_(d), out_x_(d, 0.0) {}

  void add_layer(const std::vector<Neuron>& neurons) {
    const std::size_t w = neurons.size();
    SkipLayer layer{Matrix(w, d_), Matrix(w, prev_), Vec(w, 0.0)};
    Vec out(w, 0.0);
    for (std::size_t r = 0; r < w; ++r) {
      const Neuron& n = neurons[r];
      if (n.in.size() > d_ || n.carry.size() > prev_) throw std::logic_error("neuron reads past its inputs");
      for (std::size_t c = 0; c < n.in.size(); ++c) layer.input_block(r, c) = n.in[c];
      for (std::size_t c = 0; c < n.carry.size(); ++c) layer.carry_block(r, c) = n.carry[c];
      layer.bias[r] = n.bias;
      out[r] = n.out;
    }
    layers_.push_back(std::move(layer));
    outs_.push_back(std::move(out));
    prev_ = w;
  }

  Vec& out_x() { return out_x_; }
  void set_last_out(const Vec& w) { outs_.back() = w; }
  void set_out_bias(double b) { out_bias_ = b; }

  SkipNetwork finish() {
    SkipNetwork net;
    net.input_dim = d_;
    Vec w(out_x_);
    for (const Vec& o : outs_) w.insert(w.end(), o.begin(), o.end());
    const std::size_t cols = w.size();
    net.layers = std::move(layers_);
    net.output = AffineMap(Matrix(1, cols, std::move(w)), {out_bias_});
    net.validate();
    return net;
  }

 private:
  std::size_t d_;
  std::size_t prev_ = 0;
  std::vector<SkipLayer> layers_;
  std::vector<Vec> outs_;
  Vec out_x_;
  double out_bias_ = 0.0;
};

// Output weights of a skip network split into [x | f^1 | ... | f^L].
struct OutputBlocks {
  Vec x;
  std::vector<Vec> layers;
  double bias = 0.0;
};

OutputBlocks split_output(const SkipNetwork& net) {
  OutputBlocks b;
  const auto w = net.output.weights.row(0);
  std::size_t off = 0;
  b.x.assign(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(net.input_dim));
  off = net.input_dim;
  for (const auto& l : net.layers) {
    b.layers.emplace_back(w.begin() + static_cast<std::ptrdiff_t>(off),
                          w.begin() + static_cast<std::ptrdiff_t>(off + l.width()));
    off += l.width();
  }
  b.bias = net.output.bias[0];
  return b;
}

AffineMap join_output(const OutputBlocks& b) {
  Vec w(b.x);
  for (const Vec& l : b.layers) w.insert(w.end(), l.begin(), l.end());
  const std::size_t cols = w.size();
  return AffineMap(Matrix(1, cols, std::move(w)), {b.bias});
}

// Copy of `m` with `cols` columns (extra columns zero) and `rows` rows.
Matrix resized(const Matrix& m, std::size_t rows, std::size_t cols) {
  Matrix out(rows, cols);
  for (std::size_t r = 0; r < std::min(rows, m.rows()); ++r)
    for (std::size_t c = 0; c < std::min(cols, m.cols()); ++c) out(r, c) = m(r, c);
  return out;
}

bool fixed_width(const SkipNetwork& net, std::size_t& width) {
  const auto w = widths(net);
  if (w.empty()) return true;
  width = w.front();
  return std::all_of(w.begin(), w.end(), [&](std::size_t v) { return v == width; });
}

// Plain-network layer assembly.
AffineMap affine(std::size_t out, std::size_t in) { return AffineMap::zeros(out, in); }

constexpr std::array<double, 3> kTentCoeffs{2.0, -4.0, 2.0};
constexpr std::array<double, 3> kTentShifts{0.0, -0.5, -1.0};
constexpr std::array<double, 5> kG2Coeffs{4.0, -8.0, 8.0, -8.0, 4.0};

}  // namespace

// ---------------------------------------------------------------------------
// Monomial and Polynomial

Monomial::Monomial(std::vector<unsigned> k) : exponents(std::move(k)) {
  if (exponents.empty()) throw std::invalid_argument("monomial needs at least one variable");
  if (degree() < 1) throw std::invalid_argument("monomial degree must be at least 1");
}

unsigned Monomial::degree() const noexcept { return std::accumulate(exponents.begin(), exponents.end(), 0u); }

Polynomial::Polynomial(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw std::invalid_argument("polynomial needs at least one variable");
}

void Polynomial::add_term(std::vector<unsigned> exponents, double coeff) {
  if (exponents.size() != dim_) {
    throw std::invalid_argument("exponent vector has " + std::to_string(exponents.size()) + " entries, expected " +
                                std::to_string(dim_));
  }
  if (!std::isfinite(coeff)) throw std::invalid_argument("non-finite coefficient");
  const double sum = terms_[exponents] + coeff;
  if (sum == 0.0) {
    terms_.erase(exponents);
  } else {
    terms_[std::move(exponents)] = sum;
  }
}

unsigned Polynomial::degree() const noexcept {
  unsigned p = 0;
  for (const auto& [k, a] : terms_) p = std::max(p, std::accumulate(k.begin(), k.end(), 0u));
  return p;
}

double Polynomial::coeff_abs_sum() const noexcept {
  double s = 0.0;
  for (const auto& [k, a] : terms_) s += std::abs(a);
  return s;
}

double Polynomial::operator()(std::span<const double> x) const {
  if (x.size() != dim_) throw StructuralError("polynomial expects " + std::to_string(dim_) + " coordinates");
  double total = 0.0;
  for (const auto& [k, a] : terms_) {
    double v = a;
    for (std::size_t i = 0; i < dim_; ++i)
      for (unsigned e = 0; e < k[i]; ++e) v *= x[i];
    total += v;
  }
  return total;
}

Polynomial polynomial_from_json(const std::string& text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), "byte " + std::to_string(e.byte));
  }
  if (!doc.is_object() || !doc.contains("dim") || !doc["dim"].is_number_integer() || doc["dim"].get<long long>() < 1) {
    throw ParseError("missing positive integer dim", "/dim");
  }
  const std::size_t d = doc["dim"].get<std::size_t>();
  if (!doc.contains("terms") || !doc["terms"].is_array()) throw ParseError("missing terms array", "/terms");
  Polynomial p(d);
  for (std::size_t t = 0; t < doc["terms"].size(); ++t) {
    const std::string path = "/terms/" + std::to_string(t);
    const json& term = doc["terms"][t];
    if (!term.is_object() || !term.contains("exponents") || !term["exponents"].is_array()) {
      throw ParseError("missing exponents array", path + "/exponents");
    }
    if (!term.contains("coeff") || !term["coeff"].is_number()) throw ParseError("missing numeric coeff", path + "/coeff");
    std::vector<unsigned> k;
    for (const json& e : term["exponents"]) {
      if (!e.is_number_integer() || e.get<long long>() < 0) {
        throw ParseError("exponents must be non-negative integers", path + "/exponents");
      }
      k.push_back(e.get<unsigned>());
    }
    try {
      p.add_term(std::move(k), term["coeff"].get<double>());
    } catch (const std::invalid_argument& e) {
      throw ParseError(e.what(), path);
    }
  }
  return p;
}

std::string to_json(const Polynomial& p) {
  nlohmann::json doc{{"dim", p.dim()}, {"terms", nlohmann::json::array()}};
  for (const auto& [k, a] : p.terms()) doc["terms"].push_back({{"exponents", k}, {"coeff", a}});
  return doc.dump() + "\n";
}

// ---------------------------------------------------------------------------
// Sawtooth family

MlpNetwork build_g() { return build_g_ell(1); }

MlpNetwork build_g_ell(int level) {
  if (level < 1) throw std::invalid_argument("g_ell needs level >= 1");
  MlpNetwork net;
  net.input_dim = 1;
  AffineMap first = affine(3, 1);
  for (std::size_t r = 0; r < 3; ++r) {
    first.weights(r, 0) = 1.0;
    first.bias[r] = kTentShifts[r];
  }
  net.hidden.push_back(first);
  for (int l = 2; l <= level; ++l) {
    AffineMap layer = affine(3, 3);
    for (std::size_t r = 0; r < 3; ++r) {
      for (std::size_t c = 0; c < 3; ++c) layer.weights(r, c) = kTentCoeffs[c];
      layer.bias[r] = kTentShifts[r];
    }
    net.hidden.push_back(layer);
  }
  net.output = AffineMap(Matrix(1, 3, {kTentCoeffs.begin(), kTentCoeffs.end()}), {0.0});
  net.validate();
  return net;
}

MlpNetwork build_relu1() {
  MlpNetwork net;
  net.input_dim = 1;
  net.hidden.push_back(AffineMap(Matrix(2, 1, {1.0, 1.0}), {0.0, -1.0}));
  net.output = AffineMap(Matrix(1, 2, {1.0, -1.0}), {0.0});
  return net;
}

// ---------------------------------------------------------------------------
// Square and product

SkipNetwork build_x2_hat(int levels) {
  const double one = 1.0;
  return build_x2_hat_form(levels, std::span<const double>(&one, 1), 1.0);
}

SkipNetwork build_x2_hat_form(int levels, std::span<const double> form, double scale) {
  if (levels < 1) throw std::invalid_argument("x2_hat needs levels >= 1");
  if (form.empty()) throw std::invalid_argument("linear form must be non-empty");
  const Vec a(form.begin(), form.end());
  SkipAssembler net(a.size());
  // |t| from the pair ReLU(t), ReLU(-t); the third neuron is unused.
  net.add_layer({{a, {}, 0.0, scale}, {negated(a), {}, 0.0, scale}, {}});
  Vec source{1.0, 1.0, 0.0};
  for (int l = 2; l <= levels; ++l) {
    const double c = -scale * sq_mesh(l - 1);
    std::vector<Neuron> layer;
    for (std::size_t r = 0; r < 3; ++r) layer.push_back({{}, source, kTentShifts[r], c * kTentCoeffs[r]});
    net.add_layer(layer);
    source.assign(kTentCoeffs.begin(), kTentCoeffs.end());
  }
  return net.finish();
}

SkipNetwork build_xy_hat(int levels, double bound) {
  if (levels < 2) throw std::invalid_argument("xy_hat needs levels >= 2");
  if (!(bound > 0.0) || !std::isfinite(bound)) throw std::invalid_argument("bound M must be positive");
  const double s = 1.0 / (2.0 * bound);
  const double c = 2.0 * bound * bound;
  const Vec sum{s, s}, xs{s, 0.0}, ys{0.0, s};
  SkipNetwork out = build_x2_hat_form(levels, sum, c);
  out = net_add(out, build_x2_hat_form(levels, xs, -c));
  out = net_add(out, build_x2_hat_form(levels, ys, -c));
  return out;
}

SkipNetwork build_product_block(int levels, double bound, std::span<const double> u, std::span<const double> v) {
  if (levels < 2) throw std::invalid_argument("product block needs levels >= 2");
  if (!(bound > 0.0) || !std::isfinite(bound)) throw std::invalid_argument("bound M must be positive");
  if (u.size() != v.size() || u.empty()) throw std::invalid_argument("factor forms must have equal non-zero length");
  const std::size_t d = u.size();
  const double s = 1.0 / (2.0 * bound);
  Vec tA(d), tB(d), tC(d);
  for (std::size_t k = 0; k < d; ++k) {
    tA[k] = (u[k] + v[k]) * s;
    tB[k] = u[k] * s;
    tC[k] = v[k] * s;
  }
  const int L = levels;
  constexpr std::size_t W = 4;
  const Vec g_first{2.0, -4.0, 2.0, 0.0};
  const Vec g_next{2.0, -4.0, 0.0, 0.0};
  auto relu_of = [](const Vec& carry, double bias = 0.0) { return Neuron{{}, carry, bias, 0.0}; };
  // Tent expansion of a value in [0, 1] needs only ReLU(t) and ReLU(t - 1/2).
  auto expand_bounded = [&](const Vec& g) { return std::vector<Neuron>{relu_of(g), relu_of(g, -0.5)}; };

  SkipAssembler net(d);
  // Chain A works on |u+v|/2M, chain C on |v|/2M, chain B on |u|/2M.
  net.add_layer({{tA, {}}, {negated(tA), {}}, {tC, {}}, {negated(tC), {}}});
  const Vec wA{1.0, 1.0, 0.0, 0.0};
  const Vec wC{0.0, 0.0, 1.0, 1.0};
  net.add_layer({relu_of(wA), relu_of(wA, -0.5), relu_of(wA, -1.0), relu_of(wC)});
  Vec g = g_first;
  Vec acc = unit(W, 0);  // running s_hat of chain A, starts at |t_A|
  Vec carry_c = unit(W, 3);
  for (int k = 1; k <= L - 2; ++k) {
    auto layer = expand_bounded(g);
    layer.push_back(relu_of(axpy(acc, -sq_mesh(k), g)));
    layer.push_back(relu_of(carry_c));
    net.add_layer(layer);
    g = g_next;
    acc = unit(W, 2);
    carry_c = unit(W, 3);
  }
  // Chain C starts; chain A is closed into y = s_hat_A, which then collects
  // chain C's corrections with positive sign.
  net.add_layer({relu_of(carry_c), relu_of(carry_c, -0.5), relu_of(carry_c, -1.0),
                 relu_of(axpy(acc, -sq_mesh(L - 1), g))});
  g = g_first;
  Vec y = unit(W, 3);
  Vec abs_c = unit(W, 0);
  for (int k = 1; k <= L - 2; ++k) {
    auto layer = expand_bounded(g);
    layer.push_back(relu_of(axpy(y, sq_mesh(k), g)));
    layer.push_back(relu_of(abs_c));
    net.add_layer(layer);
    g = g_next;
    y = unit(W, 2);
    abs_c = unit(W, 3);
  }
  net.add_layer({{tB, {}}, {negated(tB), {}}, relu_of(axpy(y, sq_mesh(L - 1), g)), relu_of(abs_c)});
  // v = y - |t_C| + |t_B| + 1/2 stays positive: |t_A| + |t_B| >= |t_C| and the
  // chain A corrections sum to less than 1/3.
  const Vec wB{1.0, 1.0, 0.0, 0.0};
  Vec v_pre = axpy(axpy(unit(W, 2), -1.0, unit(W, 3)), 1.0, wB);
  net.add_layer({relu_of(wB), relu_of(wB, -0.5), relu_of(wB, -1.0), relu_of(v_pre, 0.5)});
  g = g_first;
  Vec acc_v = unit(W, 3);
  Vec abs_b = unit(W, 0);
  for (int k = 1; k <= L - 2; ++k) {
    auto layer = expand_bounded(g);
    layer.push_back(relu_of(axpy(acc_v, sq_mesh(k), g)));
    layer.push_back(relu_of(abs_b));
    net.add_layer(layer);
    g = g_next;
    acc_v = unit(W, 2);
    abs_b = unit(W, 3);
  }
  net.add_layer({relu_of(axpy(acc_v, sq_mesh(L - 1), g)), relu_of(abs_b), {}, {}});
  // value = 2M^2 (v - 1/2 - 2|t_B|)
  const double c = 2.0 * bound * bound;
  net.set_last_out({c, -2.0 * c, 0.0, 0.0});
  net.set_out_bias(-0.5 * c);
  return net.finish();
}

// ---------------------------------------------------------------------------
// Network algebra

SkipNetwork pad_width(const SkipNetwork& net, std::size_t width) {
  SkipNetwork out;
  out.input_dim = net.input_dim;
  OutputBlocks ob = split_output(net);
  std::size_t prev = 0;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const SkipLayer& src = net.layers[l];
    if (src.width() > width) throw StructuralError("cannot pad a layer to a smaller width");
    SkipLayer layer{resized(src.input_block, width, net.input_dim), resized(src.carry_block, width, prev),
                    Vec(width, 0.0)};
    std::copy(src.bias.begin(), src.bias.end(), layer.bias.begin());
    ob.layers[l].resize(width, 0.0);
    out.layers.push_back(std::move(layer));
    prev = width;
  }
  out.output = join_output(ob);
  out.validate();
  return out;
}

SkipNetwork scale_output(SkipNetwork net, double factor) {
  for (double& w : net.output.weights.row(0)) w *= factor;
  net.output.bias[0] *= factor;
  return net;
}

SkipNetwork zero_skip_network(std::size_t input_dim, std::size_t width, std::size_t depth) {
  if (input_dim == 0) throw StructuralError("input dimension must be positive");
  if (depth > 0 && width == 0) throw StructuralError("hidden width must be positive");
  SkipNetwork net;
  net.input_dim = input_dim;
  std::size_t prev = 0;
  for (std::size_t l = 0; l < depth; ++l) {
    net.layers.push_back({Matrix(width, input_dim), Matrix(width, prev), Vec(width, 0.0)});
    prev = width;
  }
  net.output = AffineMap::zeros(1, input_dim + depth * width);
  return net;
}

SkipNetwork net_add(const SkipNetwork& f, const SkipNetwork& g) {
  f.validate();
  g.validate();
  if (f.input_dim != g.input_dim) throw StructuralError("net_add: input dimensions differ");
  std::size_t wf = 0, wg = 0;
  if (!fixed_width(f, wf) || !fixed_width(g, wg)) throw StructuralError("net_add: operands must have fixed width");
  if (!f.layers.empty() && !g.layers.empty() && wf != wg) throw StructuralError("net_add: widths differ");

  const OutputBlocks of = split_output(f);
  const OutputBlocks og = split_output(g);
  SkipNetwork h;
  h.input_dim = f.input_dim;
  h.layers = f.layers;
  for (std::size_t l = 0; l < g.layers.size(); ++l) {
    SkipLayer layer = g.layers[l];
    // g's first layer reads only x; its carry block sees f's last layer.
    if (l == 0) layer.carry_block = Matrix(layer.width(), h.layers.empty() ? 0 : h.layers.back().width());
    h.layers.push_back(std::move(layer));
  }
  OutputBlocks oh;
  oh.x = axpy(of.x, 1.0, og.x);
  oh.layers = of.layers;
  oh.layers.insert(oh.layers.end(), og.layers.begin(), og.layers.end());
  oh.bias = of.bias + og.bias;
  h.output = join_output(oh);
  h.validate();
  return h;
}

SkipNetwork net_compose_modified(const SkipNetwork& f2, const SkipNetwork& f1) {
  f1.validate();
  f2.validate();
  const std::size_t d = f1.input_dim;
  if (f2.input_dim != d + 1) throw StructuralError("net_compose_modified: outer network must read (x0, x)");
  for (std::size_t l = 1; l < f2.layers.size(); ++l) {
    const Matrix& in = f2.layers[l].input_block;
    for (std::size_t r = 0; r < in.rows(); ++r) {
      if (in(r, 0) != 0.0) {
        throw StructuralError("net_compose_modified: outer layer " + std::to_string(l + 1) + " reads x0");
      }
    }
  }
  const OutputBlocks o1 = split_output(f1);
  const OutputBlocks o2 = split_output(f2);
  bool first_reads_x0 = false;
  if (!f2.layers.empty()) {
    const Matrix& in = f2.layers[0].input_block;
    for (std::size_t r = 0; r < in.rows(); ++r) first_reads_x0 = first_reads_x0 || in(r, 0) != 0.0;
  }
  if (first_reads_x0) {
    for (std::size_t l = 0; l + 1 < o1.layers.size(); ++l) {
      if (std::any_of(o1.layers[l].begin(), o1.layers[l].end(), [](double w) { return w != 0.0; })) {
        throw StructuralError("net_compose_modified: inner output must read only x and its last layer");
      }
    }
  }

  std::size_t width = 0;
  for (std::size_t w : widths(f1)) width = std::max(width, w);
  for (std::size_t w : widths(f2)) width = std::max(width, w);

  SkipNetwork h;
  h.input_dim = d;
  h.layers = f1.layers;
  const std::size_t n1_last = f1.layers.empty() ? 0 : f1.layers.back().width();
  for (std::size_t l = 0; l < f2.layers.size(); ++l) {
    const SkipLayer& src = f2.layers[l];
    const std::size_t n = src.width();
    SkipLayer layer{Matrix(n, d), Matrix(n, l == 0 ? n1_last : src.carry_block.cols()), src.bias};
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < d; ++c) layer.input_block(r, c) = src.input_block(r, c + 1);
      if (l == 0) {
        // x0 = f1(x) = o1.x . x + o1.last . f1^{L1} + o1.bias
        const double a = src.input_block(r, 0);
        for (std::size_t c = 0; c < d; ++c) layer.input_block(r, c) += a * o1.x[c];
        if (n1_last > 0) {
          for (std::size_t c = 0; c < n1_last; ++c) layer.carry_block(r, c) = a * o1.layers.back()[c];
        }
        layer.bias[r] += a * o1.bias;
      } else {
        for (std::size_t c = 0; c < src.carry_block.cols(); ++c) layer.carry_block(r, c) = src.carry_block(r, c);
      }
    }
    h.layers.push_back(std::move(layer));
  }
  OutputBlocks oh;
  const double a = o2.x[0];
  oh.x.assign(o2.x.begin() + 1, o2.x.end());
  for (std::size_t c = 0; c < d; ++c) oh.x[c] += a * o1.x[c];
  for (const Vec& l : o1.layers) oh.layers.push_back(axpy(Vec(l.size(), 0.0), a, l));
  oh.layers.insert(oh.layers.end(), o2.layers.begin(), o2.layers.end());
  oh.bias = o2.bias + a * o1.bias;
  h.output = join_output(oh);
  h.validate();
  return width == 0 ? h : pad_width(h, width);
}

MlpNetwork skip_to_mlp(const SkipNetwork& net) {
  net.validate();
  const std::size_t d = net.input_dim;
  const OutputBlocks ob = split_output(net);
  MlpNetwork out;
  out.input_dim = d;
  if (net.layers.empty()) {
    out.output = AffineMap(Matrix(1, d, ob.x), {ob.bias});
    return out;
  }
  // Each layer: [skip neurons | x+ (d) | x- (d) | s+ | s-], where s is the
  // output contribution of x and all earlier layers.
  std::size_t prev_n = 0;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const SkipLayer& src = net.layers[l];
    const std::size_t n = src.width();
    const std::size_t in = (l == 0) ? d : prev_n + 2 * d + 2;
    AffineMap layer = affine(n + 2 * d + 2, in);
    const std::size_t xp = prev_n, xm = prev_n + d, sp = prev_n + 2 * d, sm = sp + 1;
    for (std::size_t r = 0; r < n; ++r) {
      layer.bias[r] = src.bias[r];
      for (std::size_t c = 0; c < d; ++c) {
        if (l == 0) {
          layer.weights(r, c) = src.input_block(r, c);
        } else {
          layer.weights(r, xp + c) = src.input_block(r, c);
          layer.weights(r, xm + c) = -src.input_block(r, c);
        }
      }
      for (std::size_t c = 0; c < prev_n; ++c) layer.weights(r, c) = src.carry_block(r, c);
    }
    for (std::size_t k = 0; k < d; ++k) {
      if (l == 0) {
        layer.weights(n + k, k) = 1.0;
        layer.weights(n + d + k, k) = -1.0;
      } else {
        layer.weights(n + k, xp + k) = 1.0;
        layer.weights(n + k, xm + k) = -1.0;
        layer.weights(n + d + k, xp + k) = -1.0;
        layer.weights(n + d + k, xm + k) = 1.0;
      }
    }
    const std::size_t rs = n + 2 * d;
    if (l == 0) {
      for (std::size_t c = 0; c < d; ++c) {
        layer.weights(rs, c) = ob.x[c];
        layer.weights(rs + 1, c) = -ob.x[c];
      }
    } else {
      for (std::size_t c = 0; c < prev_n; ++c) {
        layer.weights(rs, c) = ob.layers[l - 1][c];
        layer.weights(rs + 1, c) = -ob.layers[l - 1][c];
      }
      layer.weights(rs, sp) = 1.0;
      layer.weights(rs, sm) = -1.0;
      layer.weights(rs + 1, sp) = -1.0;
      layer.weights(rs + 1, sm) = 1.0;
    }
    out.hidden.push_back(std::move(layer));
    prev_n = n;
  }
  AffineMap last = affine(1, prev_n + 2 * d + 2);
  for (std::size_t c = 0; c < prev_n; ++c) last.weights(0, c) = ob.layers.back()[c];
  last.weights(0, prev_n + 2 * d) = 1.0;
  last.weights(0, prev_n + 2 * d + 1) = -1.0;
  last.bias[0] = ob.bias;
  out.output = std::move(last);
  out.validate();
  return out;
}

// ---------------------------------------------------------------------------
// Polynomials

SkipNetwork build_monomial(const Monomial& k, int levels) {
  const std::size_t d = k.dim();
  const unsigned p = k.degree();
  auto lowest = [](const std::vector<unsigned>& e) {
    return static_cast<std::size_t>(std::find_if(e.begin(), e.end(), [](unsigned v) { return v > 0; }) - e.begin());
  };
  const std::size_t i = lowest(k.exponents);
  if (p == 1) {
    SkipNetwork net;
    net.input_dim = d;
    net.output = AffineMap(Matrix(1, d, unit(d, i)), {0.0});
    return net;
  }
  std::vector<unsigned> rest = k.exponents;
  --rest[i];
  if (p == 2) {
    const std::size_t j = lowest(rest);
    return build_product_block(levels, 1.0, unit(d, i), unit(d, j));
  }
  const SkipNetwork inner = build_monomial(Monomial(rest), levels);
  const SkipNetwork outer = build_product_block(levels, 1.0, unit(d + 1, i + 1), unit(d + 1, 0));
  return net_compose_modified(outer, inner);
}

SkipNetwork build_polynomial(const Polynomial& p, int levels) {
  if (p.terms().empty()) throw std::invalid_argument("polynomial has no terms");
  const std::size_t d = p.dim();
  SkipNetwork acc;
  acc.input_dim = d;
  Vec lin(d, 0.0);
  double constant = 0.0;
  for (const auto& [k, a] : p.terms()) {
    const unsigned deg = std::accumulate(k.begin(), k.end(), 0u);
    if (deg == 0) constant += a;
    if (deg == 1) lin[static_cast<std::size_t>(std::find(k.begin(), k.end(), 1u) - k.begin())] += a;
  }
  acc.output = AffineMap(Matrix(1, d, lin), {constant});
  for (const auto& [k, a] : p.terms()) {
    if (std::accumulate(k.begin(), k.end(), 0u) < 2) continue;
    acc = net_add(acc, scale_output(build_monomial(Monomial(k), levels), a));
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Two-dimensional constructions

MlpNetwork build_psi_ell(int level) {
  if (level < 1) throw std::invalid_argument("psi needs level >= 1");
  constexpr std::size_t W = 9;
  MlpNetwork net;
  net.input_dim = 2;
  // |x|, |y|, |x+y| from ReLU pairs; three padding neurons.
  AffineMap first = affine(W, 2);
  const std::array<std::array<double, 2>, 3> forms{{{1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}}};
  for (std::size_t ch = 0; ch < 3; ++ch) {
    for (std::size_t c = 0; c < 2; ++c) {
      first.weights(2 * ch, c) = forms[ch][c];
      first.weights(2 * ch + 1, c) = -forms[ch][c];
    }
  }
  net.hidden.push_back(first);
  // g_1(|.|/2) on each channel.
  AffineMap second = affine(W, W);
  for (std::size_t ch = 0; ch < 3; ++ch) {
    for (std::size_t r = 0; r < 3; ++r) {
      second.weights(3 * ch + r, 2 * ch) = 0.5;
      second.weights(3 * ch + r, 2 * ch + 1) = 0.5;
      second.bias[3 * ch + r] = kTentShifts[r];
    }
  }
  net.hidden.push_back(second);
  for (int l = 2; l <= level + 1; ++l) {
    AffineMap layer = affine(W, W);
    for (std::size_t ch = 0; ch < 3; ++ch) {
      for (std::size_t r = 0; r < 3; ++r) {
        for (std::size_t c = 0; c < 3; ++c) layer.weights(3 * ch + r, 3 * ch + c) = kTentCoeffs[c];
        layer.bias[3 * ch + r] = kTentShifts[r];
      }
    }
    net.hidden.push_back(layer);
  }
  AffineMap out = affine(1, W);
  const double c = 2.0 * sq_mesh(level + 1);
  const std::array<double, 3> sign{1.0, 1.0, -1.0};
  for (std::size_t ch = 0; ch < 3; ++ch)
    for (std::size_t r = 0; r < 3; ++r) out.weights(0, 3 * ch + r) = c * sign[ch] * kTentCoeffs[r];
  net.output = out;
  net.validate();
  return net;
}

namespace {

// Hat blocks written into layer-1 rows [4b, 4b+4) and layer-2 rows
// [15b, 15b+15): ReLU(T1), ReLU(T1 - 1), ReLU(T2), ReLU(T2 - 1), then g_2 of
// ReLU1(T1)/2, ReLU1(T2)/2 and their sum over 2.
void write_hat_block(AffineMap& first, AffineMap& second, AffineMap& out, std::size_t b, const HatPlacement& p) {
  const std::size_t r1 = 4 * b, r2 = 15 * b;
  for (std::size_t comp = 0; comp < 2; ++comp) {
    for (std::size_t shift = 0; shift < 2; ++shift) {
      const std::size_t r = r1 + 2 * comp + shift;
      first.weights(r, 0) = p.linear[2 * comp];
      first.weights(r, 1) = p.linear[2 * comp + 1];
      first.bias[r] = p.shift[comp] - static_cast<double>(shift);
    }
  }
  // Channel inputs as combinations of the block's four layer-1 neurons.
  const std::array<std::array<double, 4>, 3> chan{{{0.5, -0.5, 0.0, 0.0}, {0.0, 0.0, 0.5, -0.5}, {0.5, -0.5, 0.5, -0.5}}};
  const std::array<double, 3> sign{0.5, 0.5, -0.5};
  for (std::size_t ch = 0; ch < 3; ++ch) {
    for (std::size_t k = 0; k < 5; ++k) {
      const std::size_t r = r2 + 5 * ch + k;
      for (std::size_t c = 0; c < 4; ++c) second.weights(r, r1 + c) = chan[ch][c];
      second.bias[r] = -0.25 * static_cast<double>(k);
      out.weights(0, r) = p.coeff * sign[ch] * kG2Coeffs[k];
    }
  }
}

}  // namespace

MlpNetwork build_hat2d() {
  MlpNetwork net = build_fem2d(std::vector<HatPlacement>{HatPlacement{}});
  // Pad layer 1 to the declared width 15.
  AffineMap first = affine(15, 2);
  AffineMap second = affine(15, 15);
  for (std::size_t r = 0; r < 4; ++r) {
    first.weights(r, 0) = net.hidden[0].weights(r, 0);
    first.weights(r, 1) = net.hidden[0].weights(r, 1);
    first.bias[r] = net.hidden[0].bias[r];
  }
  for (std::size_t r = 0; r < 15; ++r) {
    for (std::size_t c = 0; c < 4; ++c) second.weights(r, c) = net.hidden[1].weights(r, c);
    second.bias[r] = net.hidden[1].bias[r];
  }
  net.hidden = {first, second};
  net.validate();
  return net;
}

MlpNetwork build_hat2d_unguarded() {
  MlpNetwork net;
  net.input_dim = 2;
  AffineMap first = affine(15, 2);
  AffineMap out = affine(1, 15);
  const std::array<std::array<double, 2>, 3> forms{{{0.5, 0.0}, {0.0, 0.5}, {0.5, 0.5}}};
  const std::array<double, 3> sign{0.5, 0.5, -0.5};
  for (std::size_t ch = 0; ch < 3; ++ch) {
    for (std::size_t k = 0; k < 5; ++k) {
      const std::size_t r = 5 * ch + k;
      first.weights(r, 0) = forms[ch][0];
      first.weights(r, 1) = forms[ch][1];
      first.bias[r] = -0.25 * static_cast<double>(k);
      out.weights(0, r) = sign[ch] * kG2Coeffs[k];
    }
  }
  net.hidden.push_back(first);
  net.output = out;
  net.validate();
  return net;
}

MlpNetwork build_fem2d(std::span<const HatPlacement> placements) {
  if (placements.empty()) throw std::invalid_argument("build_fem2d needs at least one placement");
  const std::size_t n = placements.size();
  AffineMap first = affine(4 * n, 2);
  AffineMap second = affine(15 * n, 4 * n);
  AffineMap out = affine(1, 15 * n);
  for (std::size_t b = 0; b < n; ++b) {
    const auto& m = placements[b].linear;
    const double det = m[0] * m[3] - m[1] * m[2];
    const double scale = std::max({std::abs(m[0]), std::abs(m[1]), std::abs(m[2]), std::abs(m[3])});
    if (!std::isfinite(det) || !(std::abs(det) > 1e-14 * scale * scale)) {
      throw std::invalid_argument("placement " + std::to_string(b) + " has a singular affine map");
    }
    write_hat_block(first, second, out, b, placements[b]);
  }
  MlpNetwork net;
  net.input_dim = 2;
  net.hidden = {first, second};
  net.output = out;
  net.validate();
  return net;
}

std::vector<HatPlacement> fem_to_placements(const fem2d::FemFunction2D& f) {
  const auto& mesh = f.mesh;
  const double inv = 1.0 / (2.0 * mesh.h());
  std::vector<HatPlacement> out;
  for (std::size_t j = 0; j < mesh.nodes_y(); ++j) {
    for (std::size_t i = 0; i < mesh.nodes_x(); ++i) {
      const double mu = f.nodal(i, j);
      if (mu == 0.0) continue;
      HatPlacement p;
      p.linear = {inv, 0.0, 0.0, inv};
      p.shift = {0.5 - mesh.x(i) * inv, 0.5 - mesh.y(j) * inv};
      p.coeff = mu;
      out.push_back(p);
    }
  }
  return out;
}

}  // namespace hbnet::constructions
