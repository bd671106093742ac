#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "flowood/error.hpp"
#include "flowood/scores.hpp"
#include "flowood/synthetic.hpp"
#include "flowood/train.hpp"

namespace flowood {
namespace {

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

TEST(Scores, MethodNames) {
  for (auto m : {ScoreMethod::kFde, ScoreMethod::kMsp, ScoreMethod::kEnergy,
                 ScoreMethod::kReactEnergy})
    EXPECT_EQ(parse_score_method(to_string(m)), m);
  EXPECT_THROW(parse_score_method("odin"), ConfigError);
}

TEST(Scores, MspHandValues) {
  const auto s = msp_score(Matrix{{0, 0}, {1, 2}, {-5, 30}});
  EXPECT_DOUBLE_EQ(s.values[0], 0.5);
  EXPECT_NEAR(s.values[1], std::exp(2.0) / (std::exp(1.0) + std::exp(2.0)), 1e-15);
  EXPECT_NEAR(s.values[2], 1.0, 1e-15);
  EXPECT_THROW(msp_score(Matrix{{1}}), DimensionError);
}

TEST(Scores, EnergyHandValues) {
  const auto s = energy_score(Matrix{{0, 0}, {1000, 1000}, {1, 2}}, 1.0);
  EXPECT_NEAR(s.values[0], std::log(2.0), 1e-15);
  EXPECT_NEAR(s.values[1], 1000.0 + std::log(2.0), 1e-12);
  EXPECT_NEAR(s.values[2], std::log(std::exp(1.0) + std::exp(2.0)), 1e-14);
  const auto t = energy_score(Matrix{{1, 2}}, 2.0);
  EXPECT_NEAR(t.values[0], 2.0 * std::log(std::exp(0.5) + std::exp(1.0)), 1e-14);
  EXPECT_THROW(energy_score(Matrix{{1, 2}}, 0.0), ConfigError);
}

TEST(Scores, ReactClipsBeforeTheHead) {
  FeatureSet f;
  f.features = Matrix{{3, 0.5f}};
  f.head_weight = Matrix{{1, 0}, {0, 1}};
  f.head_bias = std::vector<float>{0, 0};
  const auto clipped = react_energy_score(f, 1.0);
  EXPECT_NEAR(clipped.values[0], std::log(std::exp(1.0) + std::exp(0.5)), 1e-6);
  const auto open = react_energy_score(f, std::numeric_limits<double>::infinity());
  EXPECT_NEAR(open.values[0], std::log(std::exp(3.0) + std::exp(0.5)), 1e-6);
  EXPECT_EQ(clipped.method, ScoreMethod::kReactEnergy);
  EXPECT_EQ(clipped.params.clip_threshold, 1.0);
}

TEST(Scores, ReactWithoutHeadNamesFile) {
  FeatureSet f;
  f.features = Matrix{{1, 2}};
  f.source_name = "dir";
  try {
    react_energy_score(f, 1.0);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("head_weight.npy"), std::string::npos);
  }
}

TEST(Scores, ReactThresholdIsInterpolatedPercentile) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<float> u(0.0f, 5.0f);
  Matrix x(37, 3);
  for (float& v : x.values()) v = u(rng);
  std::vector<double> sorted(x.values().begin(), x.values().end());
  std::sort(sorted.begin(), sorted.end());
  for (double p : {10.0, 50.0, 90.0, 99.0}) {
    const double pos = p / 100.0 * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const double expect = sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
    EXPECT_NEAR(fit_react_threshold(x, p), expect, 1e-12) << p;
  }
  EXPECT_DOUBLE_EQ(fit_react_threshold(Matrix{{1, 2, 3, 4, 5}}, 50.0), 3.0);
  EXPECT_THROW(fit_react_threshold(x, 100.0), ConfigError);
}

TEST(Scores, FdeOnIdentityModel) {
  FlowModel model = FlowModel::identity(2, 2, 4);
  model.set_trained_on_normalized(true);
  FeatureSet f;
  f.features = Matrix{{5, 0}};
  const auto s = fde_score(model, f, true);
  EXPECT_NEAR(s.values[0], -2.3378770664093453, 1e-6);
}

TEST(Scores, FdeNormalizationMismatchIsAnError) {
  FlowModel model = FlowModel::identity(2, 2, 4);
  FeatureSet f;
  f.features = Matrix{{1, 0}};
  EXPECT_NO_THROW(fde_score(model, f, false));
  EXPECT_THROW(fde_score(model, f, true), ConfigError);
  FeatureSet wide;
  wide.features = Matrix{{1, 0, 0}};
  EXPECT_THROW(fde_score(model, wide, false), DimensionError);
}

TEST(Scores, EveryMethodRanksIdAboveOod) {
  SyntheticSpec spec;
  spec.dim = 16;
  spec.id_clusters = 5;
  spec.ood_clusters = 3;
  spec.samples_per_cluster = 400;
  const auto data = generate_synthetic(spec);
  TrainConfig config;
  config.blocks = 4;
  const auto trained = train(data.id_train.features, data.id_val.features, nullptr, config);
  const double clip = fit_react_threshold(data.id_train.features);
  auto all = [&](const FeatureSet& f) {
    return std::vector<ScoreVector>{fde_score(trained.model, f, true), msp_score(*f.logits),
                                    energy_score(*f.logits), react_energy_score(f, clip)};
  };
  const auto id = all(data.id_val);
  const auto ood = all(data.ood);
  for (std::size_t m = 0; m < id.size(); ++m)
    EXPECT_GT(mean(id[m].values), mean(ood[m].values)) << to_string(id[m].method);
}

}  // namespace
}  // namespace flowood
