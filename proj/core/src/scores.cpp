#include "flowood/scores.hpp"

#include <algorithm>
#include <cmath>

#include "flowood/error.hpp"

namespace flowood {

std::string to_string(ScoreMethod m) {
  switch (m) {
    case ScoreMethod::kFde: return "fde";
    case ScoreMethod::kMsp: return "msp";
    case ScoreMethod::kEnergy: return "energy";
    case ScoreMethod::kReactEnergy: return "react";
  }
  return "unknown";
}

ScoreMethod parse_score_method(const std::string& name) {
  if (name == "fde") return ScoreMethod::kFde;
  if (name == "msp") return ScoreMethod::kMsp;
  if (name == "energy") return ScoreMethod::kEnergy;
  if (name == "react") return ScoreMethod::kReactEnergy;
  throw ConfigError("unknown score method '" + name + "'");
}

ScoreVector fde_score(const FlowModel& model, const FeatureSet& fs, bool normalize) {
  if (model.dim() != fs.dim())
    throw DimensionError("fde_score: model dimension " + std::to_string(model.dim()) +
                         " does not match feature dimension " + std::to_string(fs.dim()));
  if (normalize != model.trained_on_normalized())
    throw ConfigError(std::string("fde_score: normalize=") + (normalize ? "true" : "false") +
                      " but the model was trained on " +
                      (model.trained_on_normalized() ? "normalized" : "unnormalized") +
                      " features");
  ScoreVector out;
  out.method = ScoreMethod::kFde;
  out.params.normalize = normalize;
  out.values = normalize ? model.log_prob(l2_normalize(fs.features).normalized)
                         : model.log_prob(fs.features);
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    if (!std::isfinite(out.values[i]))
      throw NumericError("fde_score: non-finite log-likelihood at row " + std::to_string(i));
  }
  return out;
}

ScoreVector msp_score(const Matrix& logits) {
  if (logits.cols() < 2) throw DimensionError("msp_score needs at least 2 classes");
  ScoreVector out;
  out.method = ScoreMethod::kMsp;
  out.values.resize(logits.rows());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto l = logits.row(r);
    const double mx = *std::max_element(l.begin(), l.end());
    double denom = 0.0;
    for (float v : l) denom += std::exp(static_cast<double>(v) - mx);
    out.values[r] = 1.0 / denom;
  }
  return out;
}

ScoreVector energy_score(const Matrix& logits, double temperature) {
  if (!(temperature > 0.0)) throw ConfigError("energy temperature must be positive");
  if (logits.cols() < 1) throw DimensionError("energy_score needs at least 1 class");
  ScoreVector out;
  out.method = ScoreMethod::kEnergy;
  out.params.temperature = temperature;
  out.values.resize(logits.rows());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto l = logits.row(r);
    const double mx = *std::max_element(l.begin(), l.end()) / temperature;
    double acc = 0.0;
    for (float v : l) acc += std::exp(static_cast<double>(v) / temperature - mx);
    out.values[r] = temperature * (mx + std::log(acc));
  }
  return out;
}

ScoreVector react_energy_score(const FeatureSet& fs, double clip_threshold,
                               double temperature) {
  if (!fs.has_head())
    throw ConfigError(fs.source_name +
                      ": react needs head_weight.npy and head_bias.npy");
  if (std::isnan(clip_threshold)) throw ConfigError("react clip threshold is NaN");
  Matrix clipped = fs.features;
  for (float& v : clipped.values())
    v = static_cast<float>(std::min(static_cast<double>(v), clip_threshold));
  ScoreVector out =
      energy_score(head_logits(clipped, *fs.head_weight, *fs.head_bias), temperature);
  out.method = ScoreMethod::kReactEnergy;
  out.params.clip_threshold = clip_threshold;
  return out;
}

double fit_react_threshold(const Matrix& id_features, double percentile) {
  if (!(percentile > 0.0 && percentile < 100.0))
    throw ConfigError("react percentile must be in (0, 100)");
  if (id_features.empty()) throw ConfigError("react threshold needs nonempty features");
  std::vector<double> pooled(id_features.values().begin(), id_features.values().end());
  const double pos = percentile / 100.0 * static_cast<double>(pooled.size() - 1);
  const auto lower = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(lower);
  std::nth_element(pooled.begin(), pooled.begin() + static_cast<std::ptrdiff_t>(lower),
                   pooled.end());
  const double a = pooled[lower];
  if (frac == 0.0 || lower + 1 >= pooled.size()) return a;
  const double b = *std::min_element(
      pooled.begin() + static_cast<std::ptrdiff_t>(lower) + 1, pooled.end());
  return a + frac * (b - a);
}

}  // namespace flowood
