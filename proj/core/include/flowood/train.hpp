#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "flowood/flow_model.hpp"
#include "flowood/matrix.hpp"

namespace flowood {

struct TrainConfig {
  std::size_t blocks = 10;
  std::size_t hidden_width = 0;  // 0: same as the feature dimension
  double learning_rate = 1e-4;
  std::size_t epochs = 1;  // 0 is allowed: ActNorm init only
  std::size_t batch_size = 256;
  std::uint64_t seed = 0;
  bool normalize_features = true;
  std::size_t eval_every = 1;  // in epochs; the last epoch is always recorded
  FlowArch arch = FlowArch::kGlow;

  void validate() const;
  std::size_t resolved_hidden(std::size_t dim) const noexcept {
    return hidden_width == 0 ? dim : hidden_width;
  }
};

struct TrainRecord {
  std::size_t epoch = 0;  // 0 = after ActNorm init, before any update
  std::size_t step = 0;   // optimizer steps taken so far
  double train_nll = 0.0;  // epoch 0: full training set; else mean batch loss
  double val_nll = 0.0;
  std::optional<double> ood_nll;
  std::optional<double> auroc;  // validation vs OOD probe log-likelihoods
};

struct TrainHistory {
  std::vector<TrainRecord> records;

  // Columns: epoch,step,train_nll,val_nll,ood_nll,auroc; empty cells where a
  // value was not computed.
  std::string to_csv() const;
};

struct TrainResult {
  FlowModel model;
  TrainHistory history;
};

using TrainObserver = std::function<void(const TrainRecord&)>;

// Minimizes mean NLL with Adam over seeded shuffled mini-batches. With
// normalize_features set, every input is L2-normalized first and the model is
// flagged accordingly. ActNorm layers are initialized on the first batch.
// Deterministic for a given config. Throws NumericError naming the step if the
// loss becomes non-finite.
TrainResult train(const Matrix& features_train, const Matrix& features_val,
                  const Matrix* ood_probe, const TrainConfig& config,
                  const TrainObserver& observer = {});

}  // namespace flowood
