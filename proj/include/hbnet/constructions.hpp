#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hbnet/fem2d.hpp"
#include "hbnet/netcore.hpp"

namespace hbnet::constructions {

/// Exponent vector k of x^k = x_1^{k_1} ... x_d^{k_d}.
struct Monomial {
  std::vector<unsigned> exponents;

  explicit Monomial(std::vector<unsigned> k);
  std::size_t dim() const noexcept { return exponents.size(); }
  unsigned degree() const noexcept;
};

/// Sum of a_k x^k. Zero coefficients are never stored.
class Polynomial {
 public:
  explicit Polynomial(std::size_t dim);

  void add_term(std::vector<unsigned> exponents, double coeff);
  std::size_t dim() const noexcept { return dim_; }
  unsigned degree() const noexcept;
  double coeff_abs_sum() const noexcept;
  const std::map<std::vector<unsigned>, double>& terms() const noexcept { return terms_; }
  double operator()(std::span<const double> x) const;

 private:
  std::size_t dim_;
  std::map<std::vector<unsigned>, double> terms_;
};

/// Document: { "dim": d, "terms": [ {"exponents": [...], "coeff": a}, ... ] }.
Polynomial polynomial_from_json(const std::string& text);
std::string to_json(const Polynomial& p);

/// u(x, y) = mu * phi(A (x, y) + shift) for the reference hat phi.
struct HatPlacement {
  std::array<double, 4> linear{1.0, 0.0, 0.0, 1.0};  // row-major 2x2
  std::array<double, 2> shift{0.0, 0.0};
  double coeff = 1.0;
};

// 1D sawtooth family -------------------------------------------------------

/// Tent map as a width-3 one-hidden-layer network.
MlpNetwork build_g();
/// level-fold composition of the tent map, `level` layers of width 3.
MlpNetwork build_g_ell(int level);
/// Clamp to [0, 1] with two neurons.
MlpNetwork build_relu1();

// Square and product ---------------------------------------------------------

/// Width-3 skip network of depth L equal to |x| - sum_{l<L} 4^-l g_l(|x|), the
/// interpolant of x^2 with mesh 2^{1-L} on [-1, 1].
SkipNetwork build_x2_hat(int levels);

/// scale * x2_hat_L(a . x) for a linear form `a` over R^d.
SkipNetwork build_x2_hat_form(int levels, std::span<const double> form, double scale);

/// M^2 (2 s(x+y)/2M - 2 s(x/2M) - 2 s(y/2M)) with s = build_x2_hat(levels),
/// stacked sequentially to depth 3L at width 3.
SkipNetwork build_xy_hat(int levels, double bound);

/// The same product approximant, rewired into width 4 so that the second
/// factor is read by the first layer only and the value is an affine function
/// of the last layer. Factors are the linear forms u . z and v . z of the
/// network input z. Depth 3L.
SkipNetwork build_product_block(int levels, double bound, std::span<const double> u, std::span<const double> v);

// Network algebra ------------------------------------------------------------

/// Sum of two skip networks of equal input dimension and equal fixed width.
/// The second network's first layer re-reads x through the skip input; depth
/// adds. Depth-0 (affine) operands are accepted with any width.
SkipNetwork net_add(const SkipNetwork& f, const SkipNetwork& g);

/// f2(f1(x), x) where f2 reads (x0, x). Requires f2 to read x0 only in its
/// first hidden layer and its output map, and, when that first layer does read
/// x0, requires f1's output to depend on x and its last hidden layer only.
/// Layers are zero-padded to the larger width.
SkipNetwork net_compose_modified(const SkipNetwork& f2, const SkipNetwork& f1);

/// Adds zero neurons so that every hidden layer has `width` neurons.
SkipNetwork pad_width(const SkipNetwork& net, std::size_t width);

/// Multiplies the output map by `factor`.
SkipNetwork scale_output(SkipNetwork net, double factor);

/// Zero function of the given shape.
SkipNetwork zero_skip_network(std::size_t input_dim, std::size_t width, std::size_t depth);

/// Plain network of the same depth with widths n_l + 2(d+1): input and
/// running output sum are carried through ReLU pairs.
MlpNetwork skip_to_mlp(const SkipNetwork& net);

// Polynomials ----------------------------------------------------------------

/// Width-4 approximant of x^k on [-1, 1]^d with depth 3(p-1)L. Degree 1
/// returns the coordinate as a depth-0 network.
SkipNetwork build_monomial(const Monomial& k, int levels);

/// Affine part in the output map, higher terms as scaled monomials summed
/// with net_add.
SkipNetwork build_polynomial(const Polynomial& p, int levels);

// Two-dimensional finite elements ---------------------------------------------

/// Level-l hierarchical detail of xy as a plain network of depth l+2, width 9.
MlpNetwork build_psi_ell(int level);

/// Reference hat on all of R^2, two hidden layers of width 15.
MlpNetwork build_hat2d();

/// The unguarded hat formula 1/2 (g2(x/2) + g2(y/2) - g2((x+y)/2)) as a
/// one-hidden-layer network; equals the hat only on [0, 1]^2.
MlpNetwork build_hat2d_unguarded();

/// sum_i mu_i phi(T_i(x, y)) with two hidden layers of widths 4N and 15N.
/// Throws std::invalid_argument on a singular T_i.
MlpNetwork build_fem2d(std::span<const HatPlacement> placements);

/// One placement per node with a nonzero value.
std::vector<HatPlacement> fem_to_placements(const fem2d::FemFunction2D& f);

}  // namespace hbnet::constructions
