#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "flowood/matrix.hpp"

namespace flowood {

// Max-abs tolerance between stored logits and features * W^T + b.
inline constexpr double kHeadIdentityTolerance = 1e-3;

struct FeatureMeta {
  std::string backbone;
  bool augment = false;
};

// Penultimate-layer features of a backbone plus whatever else the extractor
// exported for the same rows.
struct FeatureSet {
  Matrix features;                                // [N x D]
  std::optional<Matrix> logits;                   // [N x C]
  std::optional<std::vector<std::int64_t>> labels;  // [N]
  std::optional<Matrix> head_weight;              // [C x D]
  std::optional<std::vector<float>> head_bias;    // [C]
  std::string source_name;
  FeatureMeta meta;

  std::size_t size() const noexcept { return features.rows(); }
  std::size_t dim() const noexcept { return features.cols(); }
  bool has_head() const noexcept { return head_weight && head_bias; }

  // Checks shapes, label range and finiteness. Throws DimensionError,
  // NumericError or FormatError.
  void validate() const;
};

// features * head_weight^T + head_bias, in double then rounded to float.
Matrix head_logits(const Matrix& features, const Matrix& head_weight,
                   const std::vector<float>& head_bias);

// Largest |stored logit - recomputed logit|; requires logits and head.
double head_identity_deviation(const FeatureSet& fs);

// Reads features.npy plus optional logits.npy, labels.npy, head_weight.npy,
// head_bias.npy and meta.json. Error messages name the offending files.
FeatureSet load_feature_set(const std::filesystem::path& dir);
void save_feature_set(const std::filesystem::path& dir, const FeatureSet& fs);

struct NormalizedFeatures {
  Matrix normalized;
  std::vector<double> norms;
};

// Scales each row to unit Euclidean norm. Throws NumericError with the row
// index for a zero row.
NormalizedFeatures l2_normalize(const Matrix& features);

// Disjoint seeded row partition; part_a gets round(fraction * N) rows, both
// parts keep the original row order.
std::pair<FeatureSet, FeatureSet> split(const FeatureSet& fs, double fraction,
                                        std::uint64_t seed);

FeatureSet select_rows(const FeatureSet& fs, const std::vector<std::size_t>& rows);

}  // namespace flowood
