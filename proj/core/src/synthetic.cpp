#include "flowood/synthetic.hpp"

#include <cmath>
#include <random>

#include "flowood/error.hpp"

namespace flowood {

namespace {

std::vector<double> random_unit(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(dim);
  double sq = 0.0;
  do {
    sq = 0.0;
    for (auto& x : v) {
      x = normal(rng);
      sq += x * x;
    }
  } while (sq == 0.0);
  const double norm = std::sqrt(sq);
  for (auto& x : v) x /= norm;
  return v;
}

Matrix to_matrix(const std::vector<std::vector<double>>& rows, std::size_t dim) {
  Matrix m(rows.size(), dim);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t j = 0; j < dim; ++j) m(r, j) = static_cast<float>(rows[r][j]);
  return m;
}

FeatureSet draw_set(const std::vector<std::vector<double>>& centers,
                    std::size_t per_cluster, const SyntheticSpec& spec,
                    bool with_labels, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t dim = spec.dim;
  FeatureSet out;
  out.features = Matrix(centers.size() * per_cluster, dim);
  std::vector<std::int64_t> labels;
  std::vector<double> v(dim);
  std::size_t row = 0;
  for (std::size_t k = 0; k < centers.size(); ++k) {
    for (std::size_t i = 0; i < per_cluster; ++i, ++row) {
      double sq = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        v[j] = centers[k][j] + spec.cluster_spread * normal(rng);
        sq += v[j] * v[j];
      }
      double target = 0.0;
      do {
        target = spec.norm_mean + spec.norm_std * normal(rng);
      } while (!(target > 0.0));
      const double scale = target / std::sqrt(sq);
      auto x = out.features.row(row);
      for (std::size_t j = 0; j < dim; ++j) x[j] = static_cast<float>(v[j] * scale);
      labels.push_back(static_cast<std::int64_t>(k));
    }
  }
  if (with_labels) out.labels = std::move(labels);
  return out;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (dim < 2) throw ConfigError("synthetic dim must be >= 2");
  if (id_clusters < 1) throw ConfigError("synthetic id_clusters must be >= 1");
  if (ood_clusters < 1) throw ConfigError("synthetic ood_clusters must be >= 1");
  if (samples_per_cluster < 1) throw ConfigError("synthetic samples_per_cluster must be >= 1");
  if (!(cluster_spread >= 0.0) || !std::isfinite(cluster_spread))
    throw ConfigError("synthetic cluster_spread must be finite and >= 0");
  if (!(norm_mean > 0.0) || !std::isfinite(norm_mean))
    throw ConfigError("synthetic norm_mean must be positive");
  if (!(norm_std >= 0.0) || !std::isfinite(norm_std))
    throw ConfigError("synthetic norm_std must be finite and >= 0");
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);

  std::vector<std::vector<double>> id_centers;
  for (std::size_t k = 0; k < spec.id_clusters; ++k)
    id_centers.push_back(random_unit(spec.dim, rng));

  std::vector<std::vector<double>> ood_centers;
  for (std::size_t k = 0; k < spec.ood_clusters; ++k)
    ood_centers.push_back(random_unit(spec.dim, rng));

  SyntheticData data;
  data.id_centers = to_matrix(id_centers, spec.dim);
  data.ood_centers = to_matrix(ood_centers, spec.dim);
  data.id_train = draw_set(id_centers, spec.samples_per_cluster, spec, true, rng);
  data.id_val = draw_set(id_centers, spec.holdout_per_cluster(), spec, true, rng);
  data.ood = draw_set(ood_centers, spec.holdout_per_cluster(), spec, false, rng);

  // Linear head whose class directions are the ID centers.
  const std::vector<float> bias(spec.id_clusters, 0.0f);
  for (FeatureSet* set : {&data.id_train, &data.id_val, &data.ood}) {
    set->head_weight = data.id_centers;
    set->head_bias = bias;
    set->logits = head_logits(set->features, data.id_centers, bias);
    set->meta.backbone = "synthetic";
  }
  data.id_train.source_name = "synthetic/id_train";
  data.id_val.source_name = "synthetic/id_val";
  data.ood.source_name = "synthetic/ood";
  return data;
}

}  // namespace flowood
