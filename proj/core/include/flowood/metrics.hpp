#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace flowood {

// Probability that a random ID score exceeds a random OOD score, ties counted
// one half (Mann-Whitney U / (n_id * n_ood)). O(N log N) via rank sums.
// auroc(a, b) + auroc(b, a) == 1 holds exactly in floating point.
double auroc(std::span<const double> id_scores, std::span<const double> ood_scores);

struct Histogram {
  std::vector<double> edges;         // bins + 1 entries
  std::vector<std::size_t> counts;   // bins entries
};

// Uniform bins over `range` (default: min..max of scores). Interior edges
// belong to the bin on their right; the last bin includes its right edge.
// Values outside an explicit range are not counted. A degenerate range puts
// everything in a single bin.
Histogram histogram(std::span<const double> scores, std::size_t bins,
                    std::optional<std::pair<double, double>> range = std::nullopt);

struct EvalReport {
  std::string method;
  double auroc = 0.5;
  std::size_t n_id = 0;
  std::size_t n_ood = 0;
  Histogram id_histogram;
  Histogram ood_histogram;
};

// AUROC plus both histograms over the shared min..max range.
EvalReport evaluate(std::span<const double> id_scores,
                    std::span<const double> ood_scores, std::size_t bins,
                    std::string method = "");

}  // namespace flowood
