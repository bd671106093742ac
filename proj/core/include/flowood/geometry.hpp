#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flowood/matrix.hpp"

namespace flowood {

// Rows must be unit length to within this tolerance.
inline constexpr double kUnitNormTolerance = 1e-3;
// Above this many rows pair expectations are estimated by sampling.
inline constexpr std::size_t kExactPairLimit = 20000;
inline constexpr std::size_t kSampledPairs = 4'000'000;

struct PairStatistic {
  double value = 0.0;
  std::size_t pair_count = 0;  // ordered pairs averaged over
  bool sampled = false;
};

// log of the mean over ordered pairs (self-pairs included) of
// exp(-t |z_i - z_j|^2).
PairStatistic uniformity(const Matrix& features, double t,
                         std::uint64_t sample_seed = 0);

// Mean of z_i . z_j over ordered same-label pairs (self-pairs included).
PairStatistic tolerance(const Matrix& features, std::span<const std::int64_t> labels);

struct GeometryReport {
  double t = 2.0;
  std::size_t n = 0;
  double uniformity = 0.0;
  double negative_uniformity = 0.0;
  std::optional<double> tolerance;
  std::size_t uniformity_pairs = 0;
  std::size_t tolerance_pairs = 0;
  bool sampled = false;
  std::vector<std::string> warnings;
};

// L2-normalizes features, then computes both statistics. Tolerance is left
// empty with a warning when labels are absent.
GeometryReport geometry(const Matrix& features,
                        const std::optional<std::vector<std::int64_t>>& labels,
                        double t = 2.0);

}  // namespace flowood
