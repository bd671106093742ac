#include "flowood/geometry.hpp"

#include <cmath>
#include <map>
#include <random>

#include "eigen_view.hpp"
#include "flowood/error.hpp"
#include "flowood/feature_set.hpp"
#include "flowood/parallel.hpp"

namespace flowood {

namespace {

constexpr std::size_t kBlockRows = 256;

void require_unit_rows(const Matrix& z, const char* what) {
  for (std::size_t r = 0; r < z.rows(); ++r) {
    double sq = 0.0;
    for (float v : z.row(r)) sq += static_cast<double>(v) * v;
    if (std::abs(std::sqrt(sq) - 1.0) >= kUnitNormTolerance)
      throw NumericError(std::string(what) + ": row " + std::to_string(r) +
                         " is not L2-normalized");
  }
}

MatrixD rows_as_double(const Matrix& z, std::size_t begin, std::size_t end) {
  MatrixD out(end - begin, z.cols());
  for (std::size_t r = begin; r < end; ++r) {
    auto src = z.row(r);
    std::copy(src.begin(), src.end(), out.row(r - begin).begin());
  }
  return out;
}

double exact_kernel_sum(const Matrix& z, double t) {
  const std::size_t n = z.rows();
  const std::size_t blocks = (n + kBlockRows - 1) / kBlockRows;
  std::vector<double> partial(blocks, 0.0);
  parallel_for(blocks, [&](std::size_t bi) {
    const std::size_t i0 = bi * kBlockRows, i1 = std::min(n, i0 + kBlockRows);
    const MatrixD a = rows_as_double(z, i0, i1);
    const auto av = detail::view(a);
    const Eigen::VectorXd a_sq = av.rowwise().squaredNorm();
    double sum = 0.0;
    for (std::size_t j0 = 0; j0 < n; j0 += kBlockRows) {
      const std::size_t j1 = std::min(n, j0 + kBlockRows);
      const MatrixD b = rows_as_double(z, j0, j1);
      const auto bv = detail::view(b);
      const Eigen::VectorXd b_sq = bv.rowwise().squaredNorm();
      const Eigen::MatrixXd gram = av * bv.transpose();
      for (Eigen::Index i = 0; i < gram.rows(); ++i)
        for (Eigen::Index j = 0; j < gram.cols(); ++j) {
          const double d2 = std::max(0.0, a_sq(i) + b_sq(j) - 2.0 * gram(i, j));
          sum += std::exp(-t * d2);
        }
    }
    partial[bi] = sum;
  });
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace

PairStatistic uniformity(const Matrix& features, double t, std::uint64_t sample_seed) {
  if (!(t > 0.0)) throw ConfigError("uniformity weight t must be positive");
  if (features.rows() == 0) throw ConfigError("uniformity of an empty feature set");
  require_unit_rows(features, "uniformity");
  const std::size_t n = features.rows();
  PairStatistic out;
  if (n <= kExactPairLimit) {
    out.pair_count = n * n;
    out.value = std::log(exact_kernel_sum(features, t) / static_cast<double>(out.pair_count));
    return out;
  }
  std::mt19937_64 rng(sample_seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  double sum = 0.0;
  for (std::size_t p = 0; p < kSampledPairs; ++p) {
    auto a = features.row(pick(rng));
    auto b = features.row(pick(rng));
    double d2 = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
      const double d = static_cast<double>(a[j]) - b[j];
      d2 += d * d;
    }
    sum += std::exp(-t * d2);
  }
  out.pair_count = kSampledPairs;
  out.sampled = true;
  out.value = std::log(sum / static_cast<double>(kSampledPairs));
  return out;
}

PairStatistic tolerance(const Matrix& features, std::span<const std::int64_t> labels) {
  if (labels.size() != features.rows())
    throw DimensionError("tolerance: labels length does not match feature rows");
  if (features.rows() == 0) throw ConfigError("tolerance of an empty feature set");
  require_unit_rows(features, "tolerance");
  // Sum over same-label ordered pairs of z_i . z_j equals the sum over classes
  // of |sum of the class's rows|^2, so this is exact in O(N D).
  std::map<std::int64_t, std::pair<std::vector<double>, std::size_t>> classes;
  for (std::size_t r = 0; r < features.rows(); ++r) {
    auto& [sum, count] = classes[labels[r]];
    if (sum.empty()) sum.assign(features.cols(), 0.0);
    auto x = features.row(r);
    for (std::size_t j = 0; j < x.size(); ++j) sum[j] += x[j];
    ++count;
  }
  double numerator = 0.0;
  std::size_t pairs = 0;
  for (const auto& [label, entry] : classes) {
    const auto& [sum, count] = entry;
    for (double v : sum) numerator += v * v;
    pairs += count * count;
  }
  return {numerator / static_cast<double>(pairs), pairs, false};
}

GeometryReport geometry(const Matrix& features,
                        const std::optional<std::vector<std::int64_t>>& labels,
                        double t) {
  const Matrix z = l2_normalize(features).normalized;
  GeometryReport report;
  report.t = t;
  report.n = z.rows();
  const PairStatistic u = uniformity(z, t);
  report.uniformity = u.value;
  report.negative_uniformity = -u.value;
  report.uniformity_pairs = u.pair_count;
  report.sampled = u.sampled;
  if (labels) {
    const PairStatistic tol = tolerance(z, *labels);
    report.tolerance = tol.value;
    report.tolerance_pairs = tol.pair_count;
  } else {
    report.warnings.push_back("labels.npy not present; tolerance omitted");
  }
  return report;
}

}  // namespace flowood
