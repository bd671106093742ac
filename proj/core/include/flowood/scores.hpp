#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "flowood/feature_set.hpp"
#include "flowood/flow_model.hpp"
#include "flowood/matrix.hpp"

namespace flowood {

enum class ScoreMethod : std::uint8_t { kFde, kMsp, kEnergy, kReactEnergy };

std::string to_string(ScoreMethod m);
ScoreMethod parse_score_method(const std::string& name);

struct ScoreParams {
  double temperature = 1.0;
  double clip_threshold = std::numeric_limits<double>::infinity();
  double percentile = 90.0;
  bool normalize = true;
};

// Per-sample scores, always oriented so that higher means more in-distribution.
struct ScoreVector {
  std::vector<double> values;
  ScoreMethod method = ScoreMethod::kFde;
  ScoreParams params;
};

// Flow log-likelihood of (optionally L2-normalized) features. The flag must
// match the normalization the model was trained with.
ScoreVector fde_score(const FlowModel& model, const FeatureSet& fs, bool normalize);

// Maximum softmax probability.
ScoreVector msp_score(const Matrix& logits);

// Negative free energy T * logsumexp(logits / T).
ScoreVector energy_score(const Matrix& logits, double temperature = 1.0);

// Clips features at clip_threshold, recomputes logits through the stored
// head and applies energy_score.
ScoreVector react_energy_score(const FeatureSet& fs, double clip_threshold,
                               double temperature = 1.0);

// Percentile (linear interpolation between order statistics) of all
// activations pooled.
double fit_react_threshold(const Matrix& id_features, double percentile = 90.0);

}  // namespace flowood
