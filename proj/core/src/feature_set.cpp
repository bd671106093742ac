#include "flowood/feature_set.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

#include "flowood/error.hpp"
#include "flowood/npy.hpp"

namespace flowood {

namespace fs = std::filesystem;

void FeatureSet::validate() const {
  const std::size_t n = size();
  if (!features.all_finite())
    throw NumericError(source_name + ": features contain non-finite values");
  std::size_t classes = 0;
  if (logits) {
    if (logits->rows() != n)
      throw DimensionError(source_name + ": logits.npy has " +
                           std::to_string(logits->rows()) +
                           " rows but features.npy has " + std::to_string(n));
    if (!logits->all_finite())
      throw NumericError(source_name + ": logits contain non-finite values");
    classes = logits->cols();
  }
  if (labels) {
    if (labels->size() != n)
      throw DimensionError(source_name + ": labels.npy has " +
                           std::to_string(labels->size()) +
                           " entries but features.npy has " + std::to_string(n));
    for (std::size_t i = 0; i < labels->size(); ++i) {
      const auto l = (*labels)[i];
      if (l < 0 || (classes > 0 && static_cast<std::size_t>(l) >= classes))
        throw FormatError(source_name + ": label " + std::to_string(l) +
                          " at row " + std::to_string(i) + " is out of range");
    }
  }
  if (head_weight.has_value() != head_bias.has_value())
    throw FormatError(source_name +
                      ": head_weight.npy and head_bias.npy must be present together");
  if (has_head()) {
    if (head_weight->cols() != dim())
      throw DimensionError(source_name + ": head_weight.npy has " +
                           std::to_string(head_weight->cols()) +
                           " columns but features.npy has D=" + std::to_string(dim()));
    if (head_bias->size() != head_weight->rows())
      throw DimensionError(source_name + ": head_bias.npy length " +
                           std::to_string(head_bias->size()) +
                           " does not match head_weight.npy rows " +
                           std::to_string(head_weight->rows()));
    if (logits && logits->cols() != head_weight->rows())
      throw DimensionError(source_name + ": logits.npy has C=" +
                           std::to_string(logits->cols()) +
                           " but head_weight.npy has C=" +
                           std::to_string(head_weight->rows()));
    if (!head_weight->all_finite())
      throw NumericError(source_name + ": head weights contain non-finite values");
  }
}

Matrix head_logits(const Matrix& features, const Matrix& head_weight,
                   const std::vector<float>& head_bias) {
  require_cols(head_weight.cols(), features.cols(), "head_weight");
  const std::size_t c = head_weight.rows();
  Matrix out(features.rows(), c);
  for (std::size_t r = 0; r < features.rows(); ++r) {
    auto x = features.row(r);
    for (std::size_t k = 0; k < c; ++k) {
      auto w = head_weight.row(k);
      double acc = head_bias[k];
      for (std::size_t j = 0; j < x.size(); ++j) acc += static_cast<double>(x[j]) * w[j];
      out(r, k) = static_cast<float>(acc);
    }
  }
  return out;
}

double head_identity_deviation(const FeatureSet& fs) {
  if (!fs.logits || !fs.has_head())
    throw ConfigError(fs.source_name + ": head identity needs logits and head");
  const Matrix recomputed = head_logits(fs.features, *fs.head_weight, *fs.head_bias);
  double worst = 0.0;
  auto a = fs.logits->values();
  auto b = recomputed.values();
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(static_cast<double>(a[i]) - b[i]));
  return worst;
}

FeatureSet load_feature_set(const fs::path& dir) {
  const fs::path features_path = dir / "features.npy";
  if (!fs::exists(features_path))
    throw IoError("missing " + features_path.string());
  FeatureSet out;
  out.source_name = dir.filename().string();
  out.features = npy_to_matrix(read_npy(features_path), features_path.string());

  if (const auto p = dir / "logits.npy"; fs::exists(p))
    out.logits = npy_to_matrix(read_npy(p), p.string());
  if (const auto p = dir / "labels.npy"; fs::exists(p))
    out.labels = npy_to_labels(read_npy(p), p.string());
  if (const auto p = dir / "head_weight.npy"; fs::exists(p))
    out.head_weight = npy_to_matrix(read_npy(p), p.string());
  if (const auto p = dir / "head_bias.npy"; fs::exists(p)) {
    const auto reals = npy_to_reals(read_npy(p), p.string());
    out.head_bias = std::vector<float>(reals.begin(), reals.end());
  }
  if (const auto p = dir / "meta.json"; fs::exists(p)) {
    std::ifstream in(p);
    try {
      const auto meta = nlohmann::json::parse(in);
      out.source_name = meta.value("source_name", out.source_name);
      out.meta.backbone = meta.value("backbone", std::string{});
      out.meta.augment = meta.value("augment", false);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(p.string() + ": " + e.what());
    }
  }
  out.source_name = out.source_name.empty() ? dir.string() : out.source_name;
  try {
    out.validate();
  } catch (const Error& e) {
    throw FormatError(dir.string() + ": " + e.what());
  }
  if (out.logits && out.has_head()) {
    const double dev = head_identity_deviation(out);
    if (dev > kHeadIdentityTolerance)
      throw FormatError(dir.string() + ": logits.npy disagrees with features through "
                        "head_weight.npy/head_bias.npy (max abs deviation " +
                        std::to_string(dev) + ")");
  }
  return out;
}

void save_feature_set(const fs::path& dir, const FeatureSet& fset) {
  fset.validate();
  fs::create_directories(dir);
  write_npy(dir / "features.npy", to_npy(fset.features));
  if (fset.logits) write_npy(dir / "logits.npy", to_npy(*fset.logits));
  if (fset.labels) write_npy(dir / "labels.npy", to_npy(*fset.labels));
  if (fset.head_weight) write_npy(dir / "head_weight.npy", to_npy(*fset.head_weight));
  if (fset.head_bias) write_npy(dir / "head_bias.npy", to_npy(*fset.head_bias));
  nlohmann::ordered_json meta;
  meta["source_name"] = fset.source_name;
  meta["backbone"] = fset.meta.backbone;
  meta["augment"] = fset.meta.augment;
  std::ofstream out(dir / "meta.json", std::ios::trunc);
  if (!out) throw IoError("cannot write " + (dir / "meta.json").string());
  out << meta.dump(2) << '\n';
}

NormalizedFeatures l2_normalize(const Matrix& features) {
  NormalizedFeatures out{Matrix(features.rows(), features.cols()),
                         std::vector<double>(features.rows())};
  for (std::size_t r = 0; r < features.rows(); ++r) {
    auto x = features.row(r);
    double sq = 0.0;
    for (float v : x) sq += static_cast<double>(v) * v;
    const double norm = std::sqrt(sq);
    if (!(norm > 0.0) || !std::isfinite(norm))
      throw NumericError("l2_normalize: row " + std::to_string(r) +
                         " has zero or non-finite norm");
    out.norms[r] = norm;
    auto y = out.normalized.row(r);
    for (std::size_t j = 0; j < x.size(); ++j)
      y[j] = static_cast<float>(static_cast<double>(x[j]) / norm);
  }
  return out;
}

FeatureSet select_rows(const FeatureSet& fset, const std::vector<std::size_t>& rows) {
  FeatureSet out;
  out.features = fset.features.select_rows(rows);
  if (fset.logits) out.logits = fset.logits->select_rows(rows);
  if (fset.labels) {
    std::vector<std::int64_t> l(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) l[i] = (*fset.labels)[rows[i]];
    out.labels = std::move(l);
  }
  out.head_weight = fset.head_weight;
  out.head_bias = fset.head_bias;
  out.source_name = fset.source_name;
  out.meta = fset.meta;
  return out;
}

std::pair<FeatureSet, FeatureSet> split(const FeatureSet& fset, double fraction,
                                        std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw ConfigError("split fraction must be in (0, 1)");
  const std::size_t n = fset.size();
  const auto n_a = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  if (n_a == 0 || n_a >= n)
    throw ConfigError("split of " + std::to_string(n) + " rows at fraction " +
                      std::to_string(fraction) + " leaves an empty side");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> a(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_a));
  std::vector<std::size_t> b(order.begin() + static_cast<std::ptrdiff_t>(n_a), order.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return {select_rows(fset, a), select_rows(fset, b)};
}

}  // namespace flowood
