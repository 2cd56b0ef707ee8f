#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace hbnet::hb1d {

/// Dyadic grid on [0, 1]: points i * 2^-level for 0 <= i <= 2^level.
struct Grid1D {
  int level = 0;

  explicit Grid1D(int level);
  double h() const noexcept;
  std::size_t intervals() const noexcept { return std::size_t{1} << level; }
  std::size_t size() const noexcept { return intervals() + 1; }
  double point(std::size_t i) const noexcept { return static_cast<double>(i) * h(); }
  std::vector<double> points() const;
};

/// Continuous piecewise-linear function given by its breakpoints, with
/// linear extension outside the hull.
struct PiecewiseLinear1D {
  std::vector<double> breakpoints;
  std::vector<double> values;
  double left_slope = 0.0;
  double right_slope = 0.0;

  /// Throws std::invalid_argument on unsorted or mismatched data.
  void validate() const;
  std::size_t segment_count() const noexcept { return breakpoints.empty() ? 0 : breakpoints.size() - 1; }
  double slope(std::size_t segment) const;
};

/// Tent map: 2x on [0, 1/2], 2(1 - x) on (1/2, 1], zero elsewhere.
double tent(double x) noexcept;

/// Hat function of level `level` at node `i` (0 <= i <= 2^level).
double nodal_basis(int level, std::size_t i, double x);

/// Interpolant on Grid1D(level) of the given nodal samples.
PiecewiseLinear1D interpolate_1d(std::span<const double> samples, int level);
PiecewiseLinear1D interpolate_1d(const std::function<double(double)>& u, int level);

/// Hierarchical surpluses: result[l-1][k] is the coefficient of the hat at
/// odd node i = 2k + 1 of level l, for l = 1..max_level.
std::vector<std::vector<double>> hierarchical_coeffs(const std::function<double(double)>& u, int max_level);

/// I_0 u + sum of hierarchical details evaluated at x.
double hierarchical_eval(double u0, double u1, const std::vector<std::vector<double>>& coeffs, double x);

double pwl_eval(const PiecewiseLinear1D& f, double x);

}  // namespace hbnet::hb1d
