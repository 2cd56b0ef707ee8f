#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hbnet/fem2d.hpp"

namespace hbnet::verify {

enum class ClaimKind {
  equal,     // |measured - theoretical| <= tolerance
  at_most,   // measured <= theoretical + tolerance
  nonzero,   // |measured| > tolerance
};

/// One checked claim.
struct ClaimRow {
  std::string claim_id;
  std::string anchor;
  ClaimKind kind = ClaimKind::equal;
  double theoretical = 0.0;
  double measured = 0.0;
  std::vector<double> witness;
  double tolerance = 0.0;
  bool pass = false;
  double runtime_ms = 0.0;
};

struct Options {
  std::optional<int> max_level;  // suite default when unset
  std::uint64_t seed = 1;
  std::size_t trials = 20;
};

/// Suite names accepted by run_suite, "all" last.
const std::vector<std::string>& suite_names();

/// Runs one suite, or every suite for "all". Throws std::invalid_argument
/// for an unknown name or a bad level.
std::vector<ClaimRow> run_suite(const std::string& suite, const Options& opts);

/// CSV with header claim_id,paper_anchor,theoretical,measured,witness,tolerance,pass,runtime_ms.
/// Without timing the runtime column is written as 0.
std::string to_csv(const std::vector<ClaimRow>& rows, bool timing = true);

/// Writes the error-curve and function tables plus README.txt into `dir`,
/// creating it if needed. Throws std::runtime_error if a file cannot be
/// written.
void write_report(const std::filesystem::path& dir, std::uint64_t seed = 1);

/// Nodal values uniform in [-1, 1] on the level-`level` mesh of `box`.
fem2d::FemFunction2D random_fem_function(int level, const fem2d::Box& box, std::uint64_t seed);

/// %.17g formatting.
std::string format_real(double v);

}  // namespace hbnet::verify
