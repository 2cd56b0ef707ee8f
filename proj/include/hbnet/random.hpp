#pragma once

#include <cstdint>
#include <random>

namespace hbnet {

/// Seeded uniform reals with a fixed bit-to-double mapping, so sequences are
/// reproducible across standard library implementations.
class UniformSampler {
 public:
  explicit UniformSampler(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace hbnet
