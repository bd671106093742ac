#include "flowood/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "flowood/error.hpp"

namespace flowood {

namespace {

void require_scores(std::span<const double> s, const char* what) {
  if (s.empty()) throw ConfigError(std::string(what) + " scores are empty");
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!std::isfinite(s[i]))
      throw NumericError(std::string(what) + " score at index " + std::to_string(i) +
                         " is not finite");
  }
}

}  // namespace

double auroc(std::span<const double> id_scores, std::span<const double> ood_scores) {
  require_scores(id_scores, "ID");
  require_scores(ood_scores, "OOD");
  struct Entry {
    double score;
    bool is_id;
  };
  std::vector<Entry> all;
  all.reserve(id_scores.size() + ood_scores.size());
  for (double s : id_scores) all.push_back({s, true});
  for (double s : ood_scores) all.push_back({s, false});
  std::sort(all.begin(), all.end(),
            [](const Entry& a, const Entry& b) { return a.score < b.score; });

  // Twice the Mann-Whitney U, kept integral so ties stay exact.
  std::uint64_t twice_u = 0;
  std::uint64_t ood_below = 0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    std::uint64_t id_tied = 0, ood_tied = 0;
    while (j < all.size() && all[j].score == all[i].score) {
      (all[j].is_id ? id_tied : ood_tied) += 1;
      ++j;
    }
    twice_u += id_tied * (2 * ood_below + ood_tied);
    ood_below += ood_tied;
    i = j;
  }
  const std::uint64_t twice_pairs =
      2 * static_cast<std::uint64_t>(id_scores.size()) * ood_scores.size();
  // Divide on the side at or below one half so that the mirrored call
  // computes 1 - (the same quotient) and the pair sums to exactly 1.
  if (2 * twice_u <= twice_pairs)
    return static_cast<double>(twice_u) / static_cast<double>(twice_pairs);
  return 1.0 - static_cast<double>(twice_pairs - twice_u) /
                   static_cast<double>(twice_pairs);
}

Histogram histogram(std::span<const double> scores, std::size_t bins,
                    std::optional<std::pair<double, double>> range) {
  if (bins < 1) throw ConfigError("histogram needs at least one bin");
  Histogram h;
  if (scores.empty() && !range) {
    h.edges = {0.0, 0.0};
    h.counts = {0};
    return h;
  }
  double lo, hi;
  if (range) {
    std::tie(lo, hi) = *range;
    if (hi < lo) throw ConfigError("histogram range is inverted");
  } else {
    const auto [mn, mx] = std::minmax_element(scores.begin(), scores.end());
    lo = *mn;
    hi = *mx;
  }
  if (lo == hi) {
    h.edges = {lo, hi};
    std::size_t c = 0;
    for (double s : scores) c += (s == lo) ? 1 : 0;
    h.counts = {c};
    return h;
  }
  h.edges.resize(bins + 1);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = lo + width * static_cast<double>(i);
  h.edges[bins] = hi;
  h.counts.assign(bins, 0);
  for (double s : scores) {
    if (!(s >= lo && s <= hi)) continue;
    auto idx = static_cast<std::size_t>(std::floor((s - lo) / width));
    idx = std::min(idx, bins - 1);
    // Settle rounding against the stored edges.
    while (idx > 0 && s < h.edges[idx]) --idx;
    while (idx + 1 < bins && s >= h.edges[idx + 1]) ++idx;
    ++h.counts[idx];
  }
  return h;
}

EvalReport evaluate(std::span<const double> id_scores,
                    std::span<const double> ood_scores, std::size_t bins,
                    std::string method) {
  EvalReport report;
  report.method = std::move(method);
  report.auroc = auroc(id_scores, ood_scores);
  report.n_id = id_scores.size();
  report.n_ood = ood_scores.size();
  const auto [id_lo, id_hi] = std::minmax_element(id_scores.begin(), id_scores.end());
  const auto [ood_lo, ood_hi] = std::minmax_element(ood_scores.begin(), ood_scores.end());
  const std::pair<double, double> shared{std::min(*id_lo, *ood_lo),
                                         std::max(*id_hi, *ood_hi)};
  report.id_histogram = histogram(id_scores, bins, shared);
  report.ood_histogram = histogram(ood_scores, bins, shared);
  return report;
}

}  // namespace flowood
