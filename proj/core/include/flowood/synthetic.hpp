#pragma once

#include <cstdint>

#include "flowood/feature_set.hpp"

namespace flowood {

// Clustered-hypersphere stand-in for backbone features. Holdout sets (ID
// validation and OOD) draw max(1, samples_per_cluster / 5) rows per cluster.
struct SyntheticSpec {
  std::size_t dim = 64;
  std::size_t id_clusters = 10;
  std::size_t ood_clusters = 5;
  std::size_t samples_per_cluster = 1000;
  double cluster_spread = 0.05;
  double norm_mean = 10.0;
  double norm_std = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t holdout_per_cluster() const noexcept {
    return samples_per_cluster / 5 > 0 ? samples_per_cluster / 5 : 1;
  }
};

struct SyntheticData {
  FeatureSet id_train;
  FeatureSet id_val;
  FeatureSet ood;
  Matrix id_centers;   // [K x D], unit rows
  Matrix ood_centers;  // [M x D], unit rows
};

// ID and OOD centers are independent uniform draws on the unit sphere. A
// sample is center + N(0, s^2 I) rescaled to a norm drawn from
// N(norm_mean, norm_std^2) (redrawn until positive). ID sets carry cluster
// labels; all sets carry logits of a linear head whose rows are the ID centers.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

}  // namespace flowood
