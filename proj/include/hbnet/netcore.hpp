#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace hbnet {

/// Raised when network shapes do not chain or an input has the wrong length.
class StructuralError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised by the document readers. `position()` is a byte offset for syntax
/// errors and a JSON pointer for shape errors.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::string position)
      : std::runtime_error(what + " (at " + position + ")"), position_(std::move(position)) {}
  const std::string& position() const noexcept { return position_; }

 private:
  std::string position_;
};

/// Dense row-major matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  const std::vector<double>& data() const noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// theta(x) = W x + b.
struct AffineMap {
  Matrix weights;
  std::vector<double> bias;

  AffineMap() = default;
  AffineMap(Matrix w, std::vector<double> b);
  /// Zero map from R^in to R^out.
  static AffineMap zeros(std::size_t out, std::size_t in);

  std::size_t in_dim() const noexcept { return weights.cols(); }
  std::size_t out_dim() const noexcept { return weights.rows(); }

  /// out = W x + b; `out` must have out_dim() entries.
  void apply(std::span<const double> x, std::span<double> out) const;
  std::vector<double> apply(std::span<const double> x) const;

  /// Throws StructuralError if the bias length or any entry is invalid.
  void validate() const;

  bool operator==(const AffineMap&) const = default;
};

/// Plain ReLU network: output o ReLU o hidden[L-1] o ... o ReLU o hidden[0].
struct MlpNetwork {
  std::size_t input_dim = 0;
  std::vector<AffineMap> hidden;
  AffineMap output;

  void validate() const;
  bool operator==(const MlpNetwork&) const = default;
};

/// One hidden layer of a skip-connected network, stored as the two column
/// blocks of its affine map over [x, f^{l-1}].
struct SkipLayer {
  Matrix input_block;  // n_l x d
  Matrix carry_block;  // n_l x n_{l-1}; zero columns for the first layer
  std::vector<double> bias;

  std::size_t width() const noexcept { return bias.size(); }
  bool operator==(const SkipLayer&) const = default;
};

/// Skip-connected network: every hidden layer re-reads x and the output map
/// reads [x, f^1, ..., f^L].
struct SkipNetwork {
  std::size_t input_dim = 0;
  std::vector<SkipLayer> layers;
  AffineMap output;  // 1 x (d + sum of widths)

  void validate() const;
  bool operator==(const SkipNetwork&) const = default;
};

using Network = std::variant<MlpNetwork, SkipNetwork>;

double relu(double v) noexcept;

double eval_mlp(const MlpNetwork& net, std::span<const double> x);
double eval_skip(const SkipNetwork& net, std::span<const double> x);
double eval(const Network& net, std::span<const double> x);

std::vector<std::size_t> widths(const MlpNetwork& net);
std::vector<std::size_t> widths(const SkipNetwork& net);
std::vector<std::size_t> widths(const Network& net);
std::size_t depth(const MlpNetwork& net) noexcept;
std::size_t depth(const SkipNetwork& net) noexcept;
std::size_t depth(const Network& net) noexcept;
std::size_t max_width(const Network& net);
std::size_t input_dim(const Network& net) noexcept;

std::string serialize(const Network& net);
Network deserialize(const std::string& text);

/// Entries uniform in [-1, 1]; identical for identical arguments.
SkipNetwork random_skip_network(std::uint64_t seed, std::size_t input_dim,
                                std::span<const std::size_t> widths);

}  // namespace hbnet
