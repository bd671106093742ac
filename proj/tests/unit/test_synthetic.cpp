#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "flowood/error.hpp"
#include "flowood/feature_set.hpp"
#include "flowood/geometry.hpp"
#include "flowood/npy.hpp"
#include "flowood/synthetic.hpp"

namespace flowood {
namespace {

SyntheticSpec small_spec() {
  SyntheticSpec s;
  s.dim = 16;
  s.id_clusters = 4;
  s.ood_clusters = 3;
  s.samples_per_cluster = 50;
  return s;
}

TEST(Synthetic, Shapes) {
  const auto data = generate_synthetic(small_spec());
  EXPECT_EQ(data.id_train.size(), 200u);
  EXPECT_EQ(data.id_val.size(), 40u);
  EXPECT_EQ(data.ood.size(), 30u);
  EXPECT_EQ(data.id_train.dim(), 16u);
  EXPECT_EQ(data.id_centers.rows(), 4u);
  EXPECT_EQ(data.ood_centers.rows(), 3u);
  ASSERT_TRUE(data.id_train.labels.has_value());
  EXPECT_EQ((*data.id_train.labels)[0], 0);
  EXPECT_EQ(data.id_train.labels->back(), 3);
  EXPECT_FALSE(data.ood.labels.has_value());
  for (const FeatureSet* s : {&data.id_train, &data.id_val, &data.ood}) {
    EXPECT_NO_THROW(s->validate());
    EXPECT_LE(head_identity_deviation(*s), kHeadIdentityTolerance);
  }
}

TEST(Synthetic, CentersAreUnitVectors) {
  const auto data = generate_synthetic(small_spec());
  for (const Matrix* c : {&data.id_centers, &data.ood_centers})
    for (std::size_t r = 0; r < c->rows(); ++r) {
      double sq = 0.0;
      for (float v : c->row(r)) sq += static_cast<double>(v) * v;
      EXPECT_NEAR(std::sqrt(sq), 1.0, 1e-6);
    }
}

TEST(Synthetic, DegenerateLimit) {
  SyntheticSpec s = small_spec();
  s.cluster_spread = 0.0;
  s.norm_std = 0.0;
  s.norm_mean = 3.0;
  const auto data = generate_synthetic(s);
  const auto n = l2_normalize(data.id_train.features);
  for (double v : n.norms) EXPECT_NEAR(v, 3.0, 1e-5);
  const auto& z = n.normalized;
  const auto& labels = *data.id_train.labels;
  for (std::size_t i = 0; i < z.rows(); i += 7)
    for (std::size_t j = 0; j < z.rows(); j += 5) {
      if (labels[i] != labels[j]) continue;
      double dot = 0.0;
      for (std::size_t c = 0; c < z.cols(); ++c) dot += static_cast<double>(z(i, c)) * z(j, c);
      EXPECT_NEAR(dot, 1.0, 1e-6);
    }
}

TEST(Synthetic, NormsFollowRequestedDistribution) {
  SyntheticSpec s = small_spec();
  s.samples_per_cluster = 2000;
  s.norm_mean = 10.0;
  s.norm_std = 2.0;
  const auto n = l2_normalize(generate_synthetic(s).id_train.features).norms;
  double mean = 0.0, sq = 0.0;
  for (double v : n) mean += v;
  mean /= static_cast<double>(n.size());
  for (double v : n) sq += (v - mean) * (v - mean);
  EXPECT_NEAR(mean, 10.0, 0.1);
  EXPECT_NEAR(std::sqrt(sq / static_cast<double>(n.size())), 2.0, 0.1);
}

TEST(Synthetic, Deterministic) {
  const auto a = generate_synthetic(small_spec());
  const auto b = generate_synthetic(small_spec());
  EXPECT_EQ(a.id_train.features, b.id_train.features);
  EXPECT_EQ(encode_npy(to_npy(a.ood.features)), encode_npy(to_npy(b.ood.features)));
  SyntheticSpec other = small_spec();
  other.seed = 1;
  EXPECT_NE(generate_synthetic(other).id_train.features, a.id_train.features);
}

TEST(Synthetic, CentersWellSeparatedAtSmallSpread) {
  // sigma <= 0.1 and D >= 16: the closest ID/OOD pair of centers is farther
  // than 4 sigma in at least 99 of 100 seeds.
  int separated = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    SyntheticSpec s;
    s.dim = 16;
    s.cluster_spread = 0.1;
    s.samples_per_cluster = 1;
    s.seed = seed;
    const auto data = generate_synthetic(s);
    double closest = 1e9;
    for (std::size_t i = 0; i < data.id_centers.rows(); ++i)
      for (std::size_t j = 0; j < data.ood_centers.rows(); ++j) {
        double sq = 0.0;
        for (std::size_t c = 0; c < s.dim; ++c) {
          const double d = data.id_centers(i, c) - data.ood_centers(j, c);
          sq += d * d;
        }
        closest = std::min(closest, std::sqrt(sq));
      }
    if (closest > 4.0 * s.cluster_spread) ++separated;
  }
  EXPECT_GE(separated, 99);
}

TEST(Synthetic, ToleranceDecreasesWithSpread) {
  double previous = 2.0;
  for (double sigma : {0.01, 0.05, 0.2}) {
    SyntheticSpec s = small_spec();
    s.cluster_spread = sigma;
    const auto data = generate_synthetic(s);
    const auto report = geometry(data.id_train.features, data.id_train.labels);
    ASSERT_TRUE(report.tolerance.has_value());
    EXPECT_LT(*report.tolerance, previous) << sigma;
    previous = *report.tolerance;
  }
}

TEST(Synthetic, ValidatesSpec) {
  SyntheticSpec s;
  s.dim = 1;
  EXPECT_THROW(generate_synthetic(s), ConfigError);
  s = SyntheticSpec{};
  s.cluster_spread = -1.0;
  EXPECT_THROW(generate_synthetic(s), ConfigError);
  s = SyntheticSpec{};
  s.norm_mean = 0.0;
  EXPECT_THROW(generate_synthetic(s), ConfigError);
  s = SyntheticSpec{};
  s.id_clusters = 0;
  EXPECT_THROW(generate_synthetic(s), ConfigError);
}

}  // namespace
}  // namespace flowood
