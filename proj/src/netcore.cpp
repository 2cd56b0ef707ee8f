#include "hbnet/netcore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "hbnet/random.hpp"

namespace hbnet {

using nlohmann::json;

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw StructuralError("matrix data has " + std::to_string(data_.size()) + " entries, expected " +
                          std::to_string(rows_ * cols_));
  }
}

AffineMap::AffineMap(Matrix w, std::vector<double> b) : weights(std::move(w)), bias(std::move(b)) {
  validate();
}

AffineMap AffineMap::zeros(std::size_t out, std::size_t in) {
  return AffineMap(Matrix(out, in), std::vector<double>(out, 0.0));
}

void AffineMap::apply(std::span<const double> x, std::span<double> out) const {
  if (x.size() != in_dim()) {
    throw StructuralError("affine map expects input of length " + std::to_string(in_dim()) + ", got " +
                          std::to_string(x.size()));
  }
  for (std::size_t r = 0; r < out_dim(); ++r) {
    const auto w = weights.row(r);
    out[r] = std::inner_product(w.begin(), w.end(), x.begin(), bias[r]);
  }
}

std::vector<double> AffineMap::apply(std::span<const double> x) const {
  std::vector<double> out(out_dim());
  apply(x, out);
  return out;
}

void AffineMap::validate() const {
  if (bias.size() != weights.rows()) {
    throw StructuralError("bias length " + std::to_string(bias.size()) + " does not match " +
                          std::to_string(weights.rows()) + " weight rows");
  }
  auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(weights.data().begin(), weights.data().end(), finite) ||
      !std::all_of(bias.begin(), bias.end(), finite)) {
    throw StructuralError("affine map has a non-finite entry");
  }
}

void MlpNetwork::validate() const {
  if (input_dim == 0) throw StructuralError("input dimension must be positive");
  std::size_t prev = input_dim;
  for (std::size_t l = 0; l < hidden.size(); ++l) {
    hidden[l].validate();
    if (hidden[l].in_dim() != prev) {
      throw StructuralError("hidden layer " + std::to_string(l + 1) + " reads " +
                            std::to_string(hidden[l].in_dim()) + " inputs, previous width is " +
                            std::to_string(prev));
    }
    if (hidden[l].out_dim() == 0) throw StructuralError("hidden layer " + std::to_string(l + 1) + " is empty");
    prev = hidden[l].out_dim();
  }
  output.validate();
  if (output.in_dim() != prev) {
    throw StructuralError("output map reads " + std::to_string(output.in_dim()) + " inputs, last width is " +
                          std::to_string(prev));
  }
  if (output.out_dim() != 1) throw StructuralError("only scalar outputs are supported");
}

void SkipNetwork::validate() const {
  if (input_dim == 0) throw StructuralError("input dimension must be positive");
  std::size_t prev = 0;
  std::size_t total = input_dim;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const SkipLayer& layer = layers[l];
    const std::string tag = "skip layer " + std::to_string(l + 1);
    if (layer.width() == 0) throw StructuralError(tag + " is empty");
    if (layer.input_block.rows() != layer.width() || layer.input_block.cols() != input_dim) {
      throw StructuralError(tag + " input block must be " + std::to_string(layer.width()) + "x" +
                            std::to_string(input_dim));
    }
    if (layer.carry_block.rows() != layer.width() || layer.carry_block.cols() != prev) {
      throw StructuralError(tag + " carry block must be " + std::to_string(layer.width()) + "x" +
                            std::to_string(prev));
    }
    AffineMap(layer.input_block, layer.bias);
    AffineMap(layer.carry_block, layer.bias);
    prev = layer.width();
    total += prev;
  }
  output.validate();
  if (output.in_dim() != total) {
    throw StructuralError("output map reads " + std::to_string(output.in_dim()) + " inputs, expected " +
                          std::to_string(total));
  }
  if (output.out_dim() != 1) throw StructuralError("only scalar outputs are supported");
}

double relu(double v) noexcept { return v > 0.0 ? v : 0.0; }

namespace {

void check_input(std::size_t expected, std::size_t got) {
  if (expected != got) {
    throw StructuralError("network expects input of length " + std::to_string(expected) + ", got " +
                          std::to_string(got));
  }
}

}  // namespace

double eval_mlp(const MlpNetwork& net, std::span<const double> x) {
  check_input(net.input_dim, x.size());
  std::vector<double> cur(x.begin(), x.end());
  std::vector<double> next;
  for (const AffineMap& layer : net.hidden) {
    next.resize(layer.out_dim());
    layer.apply(cur, next);
    for (double& v : next) v = relu(v);
    cur.swap(next);
  }
  double out = 0.0;
  net.output.apply(cur, std::span<double>(&out, 1));
  return out;
}

double eval_skip(const SkipNetwork& net, std::span<const double> x) {
  check_input(net.input_dim, x.size());
  const auto out_w = net.output.weights.row(0);
  double acc = net.output.bias[0];
  std::size_t offset = 0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += out_w[offset++] * x[i];

  std::vector<double> prev;
  std::vector<double> cur;
  for (const SkipLayer& layer : net.layers) {
    cur.assign(layer.bias.begin(), layer.bias.end());
    for (std::size_t r = 0; r < cur.size(); ++r) {
      const auto wx = layer.input_block.row(r);
      const auto wf = layer.carry_block.row(r);
      double v = cur[r];
      for (std::size_t c = 0; c < wx.size(); ++c) v += wx[c] * x[c];
      for (std::size_t c = 0; c < wf.size(); ++c) v += wf[c] * prev[c];
      cur[r] = relu(v);
      acc += out_w[offset++] * cur[r];
    }
    prev.swap(cur);
  }
  return acc;
}

double eval(const Network& net, std::span<const double> x) {
  return std::visit(
      [&](const auto& n) -> double {
        if constexpr (std::is_same_v<std::decay_t<decltype(n)>, MlpNetwork>) {
          return eval_mlp(n, x);
        } else {
          return eval_skip(n, x);
        }
      },
      net);
}

std::vector<std::size_t> widths(const MlpNetwork& net) {
  std::vector<std::size_t> w;
  for (const auto& l : net.hidden) w.push_back(l.out_dim());
  return w;
}

std::vector<std::size_t> widths(const SkipNetwork& net) {
  std::vector<std::size_t> w;
  for (const auto& l : net.layers) w.push_back(l.width());
  return w;
}

std::vector<std::size_t> widths(const Network& net) {
  return std::visit([](const auto& n) { return widths(n); }, net);
}

std::size_t depth(const MlpNetwork& net) noexcept { return net.hidden.size(); }
std::size_t depth(const SkipNetwork& net) noexcept { return net.layers.size(); }
std::size_t depth(const Network& net) noexcept {
  return std::visit([](const auto& n) { return depth(n); }, net);
}

std::size_t max_width(const Network& net) {
  const auto w = widths(net);
  return w.empty() ? 0 : *std::max_element(w.begin(), w.end());
}

std::size_t input_dim(const Network& net) noexcept {
  return std::visit([](const auto& n) { return n.input_dim; }, net);
}

// ---------------------------------------------------------------------------
// Document format

namespace {

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

json affine_to_json(const Matrix& w, const std::vector<double>& b) {
  return json{{"weights", matrix_to_json(w)}, {"bias", b}};
}

// Concatenates [W_x | W_f] row by row.
Matrix hstack(const Matrix& left, const Matrix& right) {
  Matrix out(left.rows(), left.cols() + right.cols());
  for (std::size_t r = 0; r < left.rows(); ++r) {
    for (std::size_t c = 0; c < left.cols(); ++c) out(r, c) = left(r, c);
    for (std::size_t c = 0; c < right.cols(); ++c) out(r, left.cols() + c) = right(r, c);
  }
  return out;
}

const json& field(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) throw ParseError("expected an object", path);
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(std::string("missing field \"") + key + "\"", path);
  return *it;
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ParseError("expected a number", path);
  return v.get<double>();
}

std::size_t count(const json& v, const std::string& path) {
  if (!v.is_number_integer() || v.get<long long>() < 0) throw ParseError("expected a non-negative integer", path);
  return v.get<std::size_t>();
}

Matrix matrix_from_json(const json& v, std::size_t expected_cols, const std::string& path) {
  if (!v.is_array()) throw ParseError("expected an array of rows", path);
  std::vector<double> data;
  for (std::size_t r = 0; r < v.size(); ++r) {
    const std::string rpath = path + "/" + std::to_string(r);
    if (!v[r].is_array()) throw ParseError("expected a row array", rpath);
    if (v[r].size() != expected_cols) {
      throw ParseError("row has " + std::to_string(v[r].size()) + " columns, expected " +
                           std::to_string(expected_cols),
                       rpath);
    }
    for (std::size_t c = 0; c < v[r].size(); ++c) data.push_back(number(v[r][c], rpath + "/" + std::to_string(c)));
  }
  return Matrix(v.size(), expected_cols, std::move(data));
}

std::vector<double> vector_from_json(const json& v, std::size_t expected, const std::string& path) {
  if (!v.is_array()) throw ParseError("expected an array", path);
  if (v.size() != expected) {
    throw ParseError("length " + std::to_string(v.size()) + ", expected " + std::to_string(expected), path);
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], path + "/" + std::to_string(i)));
  return out;
}

std::size_t row_count(const json& w, const std::string& path) {
  if (!w.is_array()) throw ParseError("expected an array of rows", path);
  return w.size();
}

AffineMap affine_from_json(const json& obj, std::size_t in_dim, const std::string& path) {
  const json& w = field(obj, "weights", path);
  const std::size_t rows = row_count(w, path + "/weights");
  Matrix m = matrix_from_json(w, in_dim, path + "/weights");
  auto b = vector_from_json(field(obj, "bias", path), rows, path + "/bias");
  try {
    return AffineMap(std::move(m), std::move(b));
  } catch (const StructuralError& e) {
    throw ParseError(e.what(), path);
  }
}

}  // namespace

std::string serialize(const Network& net) {
  json doc;
  if (const auto* mlp = std::get_if<MlpNetwork>(&net)) {
    mlp->validate();
    doc["kind"] = "mlp";
    doc["input_dim"] = mlp->input_dim;
    doc["layers"] = json::array();
    for (const auto& l : mlp->hidden) doc["layers"].push_back(affine_to_json(l.weights, l.bias));
    doc["output"] = affine_to_json(mlp->output.weights, mlp->output.bias);
  } else {
    const auto& skip = std::get<SkipNetwork>(net);
    skip.validate();
    doc["kind"] = "skip";
    doc["input_dim"] = skip.input_dim;
    doc["layers"] = json::array();
    for (const auto& l : skip.layers) {
      json layer = affine_to_json(hstack(l.input_block, l.carry_block), l.bias);
      layer["input_block_cols"] = skip.input_dim;
      doc["layers"].push_back(std::move(layer));
    }
    doc["output"] = affine_to_json(skip.output.weights, skip.output.bias);
  }
  return doc.dump(1) + "\n";
}

Network deserialize(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), "byte " + std::to_string(e.byte));
  }
  const json& kind = field(doc, "kind", "");
  if (!kind.is_string()) throw ParseError("kind must be a string", "/kind");
  const std::size_t d = count(field(doc, "input_dim", ""), "/input_dim");
  if (d == 0) throw ParseError("input_dim must be positive", "/input_dim");
  const json& layers = field(doc, "layers", "");
  if (!layers.is_array()) throw ParseError("layers must be an array", "/layers");

  if (kind == "mlp") {
    MlpNetwork net;
    net.input_dim = d;
    std::size_t prev = d;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      net.hidden.push_back(affine_from_json(layers[l], prev, "/layers/" + std::to_string(l)));
      prev = net.hidden.back().out_dim();
      if (prev == 0) throw ParseError("empty layer", "/layers/" + std::to_string(l));
    }
    net.output = affine_from_json(field(doc, "output", ""), prev, "/output");
    if (net.output.out_dim() != 1) throw ParseError("output must have exactly one row", "/output/weights");
    return net;
  }
  if (kind == "skip") {
    SkipNetwork net;
    net.input_dim = d;
    std::size_t prev = 0;
    std::size_t total = d;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const std::string path = "/layers/" + std::to_string(l);
      const std::size_t cols = count(field(layers[l], "input_block_cols", path), path + "/input_block_cols");
      if (cols != d) throw ParseError("input_block_cols must equal input_dim", path + "/input_block_cols");
      AffineMap full = affine_from_json(layers[l], d + prev, path);
      if (full.out_dim() == 0) throw ParseError("empty layer", path);
      SkipLayer layer;
      layer.input_block = Matrix(full.out_dim(), d);
      layer.carry_block = Matrix(full.out_dim(), prev);
      for (std::size_t r = 0; r < full.out_dim(); ++r) {
        for (std::size_t c = 0; c < d; ++c) layer.input_block(r, c) = full.weights(r, c);
        for (std::size_t c = 0; c < prev; ++c) layer.carry_block(r, c) = full.weights(r, d + c);
      }
      layer.bias = std::move(full.bias);
      prev = layer.width();
      total += prev;
      net.layers.push_back(std::move(layer));
    }
    net.output = affine_from_json(field(doc, "output", ""), total, "/output");
    if (net.output.out_dim() != 1) throw ParseError("output must have exactly one row", "/output/weights");
    return net;
  }
  throw ParseError("kind must be \"mlp\" or \"skip\"", "/kind");
}

SkipNetwork random_skip_network(std::uint64_t seed, std::size_t input_dim, std::span<const std::size_t> widths) {
  if (widths.empty()) throw StructuralError("random_skip_network needs at least one hidden layer");
  if (input_dim == 0) throw StructuralError("input dimension must be positive");
  UniformSampler rng(seed);
  auto fill = [&](Matrix& m) {
    for (std::size_t r = 0; r < m.rows(); ++r)
      for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = rng.uniform(-1.0, 1.0);
  };
  SkipNetwork net;
  net.input_dim = input_dim;
  std::size_t prev = 0;
  std::size_t total = input_dim;
  for (std::size_t w : widths) {
    if (w == 0) throw StructuralError("hidden widths must be positive");
    SkipLayer layer{Matrix(w, input_dim), Matrix(w, prev), std::vector<double>(w)};
    fill(layer.input_block);
    fill(layer.carry_block);
    for (double& b : layer.bias) b = rng.uniform(-1.0, 1.0);
    net.layers.push_back(std::move(layer));
    prev = w;
    total += w;
  }
  Matrix out(1, total);
  fill(out);
  net.output = AffineMap(std::move(out), {rng.uniform(-1.0, 1.0)});
  return net;
}

}  // namespace hbnet
