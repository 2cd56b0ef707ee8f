#include "hbnet/hb1d.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace hbnet::hb1d {

Grid1D::Grid1D(int lvl) : level(lvl) {
  if (lvl < 0 || lvl > 52) throw std::invalid_argument("grid level must lie in [0, 52]");
}

double Grid1D::h() const noexcept { return std::ldexp(1.0, -level); }

std::vector<double> Grid1D::points() const {
  std::vector<double> pts(size());
  for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = point(i);
  return pts;
}

void PiecewiseLinear1D::validate() const {
  if (breakpoints.empty()) throw std::invalid_argument("piecewise-linear function needs a breakpoint");
  if (breakpoints.size() != values.size()) throw std::invalid_argument("breakpoint and value counts differ");
  for (std::size_t k = 0; k + 1 < breakpoints.size(); ++k) {
    const double gap = breakpoints[k + 1] - breakpoints[k];
    if (!(gap > 1e-14 * std::max(1.0, std::abs(breakpoints[k])))) {
      throw std::invalid_argument("breakpoints must be strictly increasing");
    }
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite value");
  }
}

double PiecewiseLinear1D::slope(std::size_t segment) const {
  return (values[segment + 1] - values[segment]) / (breakpoints[segment + 1] - breakpoints[segment]);
}

double tent(double x) noexcept {
  if (x < 0.0 || x > 1.0) return 0.0;
  return x <= 0.5 ? 2.0 * x : 2.0 * (1.0 - x);
}

double nodal_basis(int level, std::size_t i, double x) {
  const Grid1D grid(level);
  if (i > grid.intervals()) {
    throw std::invalid_argument("node index " + std::to_string(i) + " outside [0, " +
                                std::to_string(grid.intervals()) + "]");
  }
  if (level == 0) {
    // Boundary pair 1 - x and x, cut off outside their unit-width supports.
    if (i == 0) return (x >= -1.0 && x <= 1.0) ? 1.0 - std::abs(x) : 0.0;
    return (x >= 0.0 && x <= 2.0) ? 1.0 - std::abs(x - 1.0) : 0.0;
  }
  const double h = grid.h();
  return tent((x - (static_cast<double>(i) - 1.0) * h) / (2.0 * h));
}

PiecewiseLinear1D interpolate_1d(std::span<const double> samples, int level) {
  const Grid1D grid(level);
  if (samples.size() != grid.size()) {
    throw std::invalid_argument("expected " + std::to_string(grid.size()) + " samples for level " +
                                std::to_string(level) + ", got " + std::to_string(samples.size()));
  }
  PiecewiseLinear1D f;
  f.breakpoints = grid.points();
  f.values.assign(samples.begin(), samples.end());
  f.left_slope = f.slope(0);
  f.right_slope = f.slope(f.segment_count() - 1);
  f.validate();
  return f;
}

PiecewiseLinear1D interpolate_1d(const std::function<double(double)>& u, int level) {
  const Grid1D grid(level);
  std::vector<double> samples(grid.size());
  for (std::size_t i = 0; i < samples.size(); ++i) samples[i] = u(grid.point(i));
  return interpolate_1d(samples, level);
}

std::vector<std::vector<double>> hierarchical_coeffs(const std::function<double(double)>& u, int max_level) {
  std::vector<std::vector<double>> coeffs;
  for (int level = 1; level <= max_level; ++level) {
    const Grid1D grid(level);
    std::vector<double> mu;
    for (std::size_t i = 1; i < grid.intervals(); i += 2) {
      mu.push_back(u(grid.point(i)) - 0.5 * (u(grid.point(i - 1)) + u(grid.point(i + 1))));
    }
    coeffs.push_back(std::move(mu));
  }
  return coeffs;
}

double hierarchical_eval(double u0, double u1, const std::vector<std::vector<double>>& coeffs, double x) {
  double v = u0 * nodal_basis(0, 0, x) + u1 * nodal_basis(0, 1, x);
  for (std::size_t l = 0; l < coeffs.size(); ++l) {
    const int level = static_cast<int>(l) + 1;
    for (std::size_t k = 0; k < coeffs[l].size(); ++k) v += coeffs[l][k] * nodal_basis(level, 2 * k + 1, x);
  }
  return v;
}

double pwl_eval(const PiecewiseLinear1D& f, double x) {
  const auto& bp = f.breakpoints;
  if (x <= bp.front()) return f.values.front() + f.left_slope * (x - bp.front());
  if (x >= bp.back()) return f.values.back() + f.right_slope * (x - bp.back());
  const auto it = std::upper_bound(bp.begin(), bp.end(), x);
  const std::size_t k = static_cast<std::size_t>(it - bp.begin()) - 1;
  if (x == bp[k]) return f.values[k];
  const double t = (x - bp[k]) / (bp[k + 1] - bp[k]);
  return f.values[k] + t * (f.values[k + 1] - f.values[k]);
}

}  // namespace hbnet::hb1d
