#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "hbnet/hb1d.hpp"
#include "hbnet/netcore.hpp"

namespace hbnet::pwl {

enum class SupMode { exact, sampled };

/// Supremum of an error together with the point where it was attained.
struct SupReport {
  double value = 0.0;
  std::vector<double> witness;
  std::size_t sample_count = 0;
  SupMode mode = SupMode::exact;
};

/// Axis-aligned box given by per-coordinate bounds.
struct SampleBox {
  std::vector<double> lo;
  std::vector<double> hi;

  std::size_t dim() const noexcept { return lo.size(); }
};

using Evaluator = std::function<double(std::span<const double>)>;

/// Breakpoints of a one-input network on [a, b], found layer by layer from
/// the zero crossings of every pre-activation. The returned slopes beyond
/// the hull are the one-sided slopes at a and b. Throws StructuralError if
/// the input dimension is not 1 and std::invalid_argument if a > b.
hb1d::PiecewiseLinear1D extract_pwl(const Network& net, double a, double b);

/// One-input network t -> net(x + t (y - x)).
Network restrict_to_line(const Network& net, std::span<const double> x, std::span<const double> y);

/// sup over [a, b] of |x^2 - f(x)|, from segment endpoints and x = m/2.
SupReport sup_error_vs_quadratic(const hb1d::PiecewiseLinear1D& f, double a, double b);

/// sup over [a, b] of |2x - f'(x)|, from segment endpoints.
SupReport w1inf_error_vs_quadratic(const hb1d::PiecewiseLinear1D& f, double a, double b);

/// max |f - g| over the structured points and n_random uniform points of the
/// box. The same seed gives the same points.
SupReport sup_error_sampled(const Evaluator& f, const Evaluator& g, const SampleBox& box,
                            const std::vector<std::vector<double>>& structured, std::size_t n_random,
                            std::uint64_t seed);

/// Number of maximal linear pieces inside the hull; neighbours whose slopes
/// differ by less than 1e-12 are merged.
std::size_t linear_region_count(const hb1d::PiecewiseLinear1D& f);

}  // namespace hbnet::pwl
