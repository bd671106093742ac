#include <gtest/gtest.h>

#include <limits>
#include <random>

#include "flowood/error.hpp"
#include "flowood/serialize.hpp"
#include "flowood/train.hpp"
#include "oracles.hpp"

namespace flowood {
namespace {

using testing::random_matrix;

Matrix gaussian(std::size_t n, std::size_t d, std::uint64_t seed, double shift = 0.0) {
  std::mt19937_64 rng(seed);
  Matrix m = random_matrix(n, d, rng, 0.5).cast<float>();
  for (float& v : m.values()) v += static_cast<float>(shift);
  return m;
}

TrainConfig small_config() {
  TrainConfig c;
  c.blocks = 2;
  c.hidden_width = 8;
  c.batch_size = 32;
  c.learning_rate = 1e-3;
  c.normalize_features = false;
  return c;
}

TEST(Train, DeterministicModelBytes) {
  const Matrix x = gaussian(200, 4, 1);
  const Matrix v = gaussian(50, 4, 2);
  TrainConfig c = small_config();
  c.epochs = 3;
  const auto a = train(x, v, nullptr, c);
  const auto b = train(x, v, nullptr, c);
  EXPECT_EQ(serialize(a.model), serialize(b.model));
  EXPECT_EQ(a.history.to_csv(), b.history.to_csv());
  c.seed = 1;
  EXPECT_NE(serialize(train(x, v, nullptr, c).model), serialize(a.model));
}

TEST(Train, ReducesValidationLoss) {
  const Matrix x = gaussian(1000, 3, 3, 2.0);
  const Matrix v = gaussian(200, 3, 4, 2.0);
  TrainConfig c = small_config();
  c.epochs = 5;
  const auto r = train(x, v, nullptr, c);
  EXPECT_LT(r.history.records.back().val_nll, r.history.records.front().val_nll);
}

TEST(Train, HistoryRowsFollowEvalEvery) {
  const Matrix x = gaussian(64, 4, 5);
  TrainConfig c = small_config();
  c.epochs = 5;
  c.eval_every = 2;
  std::vector<std::size_t> seen;
  const auto r = train(x, x, nullptr, c, [&](const TrainRecord& rec) { seen.push_back(rec.epoch); });
  std::vector<std::size_t> epochs;
  for (const auto& rec : r.history.records) epochs.push_back(rec.epoch);
  EXPECT_EQ(epochs, (std::vector<std::size_t>{0, 2, 4, 5}));
  EXPECT_EQ(seen, epochs);
  EXPECT_EQ(r.history.records.back().step, 10u);
}

TEST(Train, ZeroEpochsOnlyInitializesActNorm) {
  const Matrix x = gaussian(64, 4, 6);
  TrainConfig c = small_config();
  c.epochs = 0;
  const auto r = train(x, x, nullptr, c);
  ASSERT_EQ(r.history.records.size(), 1u);
  EXPECT_EQ(r.history.records[0].step, 0u);
  EXPECT_TRUE(r.model.actnorm_ready());
}

TEST(Train, OodProbeFillsHistoryColumns) {
  const Matrix x = gaussian(128, 4, 7);
  const Matrix ood = gaussian(64, 4, 8, 3.0);
  TrainConfig c = small_config();
  const auto with = train(x, x, &ood, c);
  for (const auto& rec : with.history.records) {
    ASSERT_TRUE(rec.ood_nll.has_value());
    ASSERT_TRUE(rec.auroc.has_value());
    EXPECT_GT(*rec.auroc, 0.9);
  }
  const auto without = train(x, x, nullptr, c);
  EXPECT_FALSE(without.history.records[0].ood_nll.has_value());
  const std::string csv = without.history.to_csv();
  EXPECT_EQ(csv.rfind("epoch,step,train_nll,val_nll,ood_nll,auroc\n", 0), 0u);
  EXPECT_NE(csv.find(",,\n"), std::string::npos);
}

TEST(Train, NormalizationFlagIsRecorded) {
  const Matrix x = gaussian(64, 4, 9, 1.0);
  TrainConfig c = small_config();
  c.normalize_features = true;
  EXPECT_TRUE(train(x, x, nullptr, c).model.trained_on_normalized());
  c.normalize_features = false;
  EXPECT_FALSE(train(x, x, nullptr, c).model.trained_on_normalized());
}

TEST(Train, RejectsBadInputs) {
  const Matrix x = gaussian(64, 4, 10);
  TrainConfig c = small_config();
  EXPECT_THROW(train(x, gaussian(8, 3, 1), nullptr, c), DimensionError);
  EXPECT_THROW(train(Matrix(1, 4, 1.0f), x, nullptr, c), ConfigError);
  Matrix bad = x;
  bad(3, 2) = std::numeric_limits<float>::infinity();
  EXPECT_THROW(train(bad, x, nullptr, c), NumericError);
  c.normalize_features = true;
  Matrix zero_row = x;
  for (float& v : zero_row.row(5)) v = 0.0f;
  EXPECT_THROW(train(zero_row, x, nullptr, c), NumericError);
}

TEST(Train, ConfigValidation) {
  TrainConfig c;
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.learning_rate = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.blocks = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.eval_every = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_EQ(TrainConfig{}.resolved_hidden(64), 64u);
}

}  // namespace
}  // namespace flowood
