#include <gtest/gtest.h>

#include <limits>
#include <numeric>
#include <random>

#include <json.hpp>

#include "flowood/error.hpp"
#include "flowood/metrics.hpp"
#include "flowood/report_io.hpp"
#include "oracles.hpp"

namespace flowood {
namespace {

using testing::brute_force_auroc;

std::vector<double> draws(std::size_t n, double shift, std::mt19937_64& rng, int grid) {
  std::normal_distribution<double> normal(shift, 1.0);
  std::vector<double> v(n);
  for (double& x : v) {
    x = normal(rng);
    // Rounding onto a coarse grid injects many ties.
    if (grid > 0) x = std::round(x * grid) / grid;
  }
  return v;
}

TEST(Auroc, HandCases) {
  const std::vector<double> id{2, 3};
  const std::vector<double> ood{0, 1};
  EXPECT_EQ(auroc(id, ood), 1.0);
  EXPECT_EQ(auroc(ood, id), 0.0);
  EXPECT_EQ(auroc(id, id), 0.5);
  EXPECT_EQ(auroc(std::vector<double>{1, 1, 1}, std::vector<double>{1, 1}), 0.5);
  EXPECT_EQ(auroc(std::vector<double>{1, 2}, std::vector<double>{1}), 0.75);
}

TEST(Auroc, MatchesBruteForceWithTies) {
  std::mt19937_64 rng(1);
  for (std::size_t n : {1u, 7u, 100u, 2000u}) {
    for (int grid : {0, 1, 4}) {
      const auto id = draws(n, 0.7, rng, grid);
      const auto ood = draws(n / 2 + 1, 0.0, rng, grid);
      EXPECT_NEAR(auroc(id, ood), brute_force_auroc(id, ood), 1e-12) << n << " " << grid;
    }
  }
}

TEST(Auroc, SymmetryIsExact) {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 50; ++rep) {
    const auto a = draws(97, 0.3, rng, 3);
    const auto b = draws(61, 0.0, rng, 3);
    EXPECT_EQ(auroc(a, b) + auroc(b, a), 1.0);
  }
}

TEST(Auroc, InvariantUnderMonotoneTransform) {
  std::mt19937_64 rng(3);
  const auto a = draws(200, 0.5, rng, 0);
  const auto b = draws(150, 0.0, rng, 0);
  std::vector<double> ea(a.size()), eb(b.size());
  for (std::size_t i = 0; i < a.size(); ++i) ea[i] = std::exp(3.0 * a[i]) + 1.0;
  for (std::size_t i = 0; i < b.size(); ++i) eb[i] = std::exp(3.0 * b[i]) + 1.0;
  EXPECT_EQ(auroc(a, b), auroc(ea, eb));
}

TEST(Auroc, RejectsEmptyAndNonFinite) {
  const std::vector<double> ok{1.0};
  EXPECT_THROW(auroc(std::vector<double>{}, ok), ConfigError);
  EXPECT_THROW(auroc(ok, std::vector<double>{}), ConfigError);
  EXPECT_THROW(auroc(ok, std::vector<double>{std::numeric_limits<double>::quiet_NaN()}),
               NumericError);
}

TEST(Histogram, CountsAndEdges) {
  const std::vector<double> s{0.0, 0.5, 1.0, 1.5, 2.0, 2.0};
  const auto h = histogram(s, 4);
  EXPECT_EQ(h.edges, (std::vector<double>{0.0, 0.5, 1.0, 1.5, 2.0}));
  EXPECT_EQ(h.counts, (std::vector<std::size_t>{1, 1, 1, 3}));
}

TEST(Histogram, ExplicitRangeDropsOutsiders) {
  const std::vector<double> s{-1.0, 0.1, 0.9, 5.0};
  const auto h = histogram(s, 2, std::pair{0.0, 1.0});
  EXPECT_EQ(h.counts, (std::vector<std::size_t>{1, 1}));
}

TEST(Histogram, DegenerateRangeIsOneBin) {
  const std::vector<double> s{3.0, 3.0};
  const auto h = histogram(s, 10);
  EXPECT_EQ(h.counts, (std::vector<std::size_t>{2}));
  EXPECT_THROW(histogram(s, 0), ConfigError);
}

TEST(Histogram, TotalsPreservedOnRandomData) {
  std::mt19937_64 rng(4);
  const auto s = draws(5000, 0.0, rng, 0);
  for (std::size_t bins : {1u, 7u, 50u}) {
    const auto h = histogram(s, bins);
    EXPECT_EQ(std::accumulate(h.counts.begin(), h.counts.end(), std::size_t{0}), s.size());
  }
}

TEST(Evaluate, SharedRangeAndCounts) {
  const std::vector<double> id{2, 3};
  const std::vector<double> ood{0, 1};
  const auto r = evaluate(id, ood, 3, "msp");
  EXPECT_EQ(r.auroc, 1.0);
  EXPECT_EQ(r.n_id, 2u);
  EXPECT_EQ(r.n_ood, 2u);
  EXPECT_EQ(r.id_histogram.edges, r.ood_histogram.edges);
  EXPECT_EQ(r.id_histogram.edges.front(), 0.0);
  EXPECT_EQ(r.id_histogram.edges.back(), 3.0);
  EXPECT_EQ(r.id_histogram.counts, (std::vector<std::size_t>{0, 0, 2}));
  EXPECT_EQ(r.ood_histogram.counts, (std::vector<std::size_t>{1, 1, 0}));
}

TEST(ReportIo, EvalJsonAndCsv) {
  const std::vector<double> id{2, 3};
  const std::vector<double> ood{0, 1};
  const auto r = evaluate(id, ood, 2, "energy");
  const auto j = nlohmann::json::parse(to_json(r));
  EXPECT_EQ(j.at("method"), "energy");
  EXPECT_EQ(j.at("auroc"), 1.0);
  EXPECT_EQ(j.at("n_id"), 2);
  EXPECT_EQ(histogram_csv(r.ood_histogram), "edge_low,edge_high,count\n0,1.5,2\n1.5,3,0\n");
}

}  // namespace
}  // namespace flowood
