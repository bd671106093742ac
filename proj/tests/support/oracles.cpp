#include "oracles.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace flowood::testing {

double brute_force_auroc(std::span<const double> id, std::span<const double> ood) {
  std::uint64_t twice_u = 0;
  for (double a : id) {
    for (double b : ood) {
      if (a > b) twice_u += 2;
      else if (a == b) twice_u += 1;
    }
  }
  return static_cast<double>(twice_u) /
         (2.0 * static_cast<double>(id.size()) * static_cast<double>(ood.size()));
}

double fd_log_abs_det(const VectorMap& f, const std::vector<double>& x, double h) {
  const std::size_t n = x.size();
  std::vector<std::vector<long double>> jac(n, std::vector<long double>(n));
  for (std::size_t j = 0; j < n; ++j) {
    auto xp = x;
    auto xm = x;
    xp[j] += h;
    xm[j] -= h;
    const auto fp = f(xp);
    const auto fm = f(xm);
    for (std::size_t i = 0; i < n; ++i) jac[i][j] = (fp[i] - fm[i]) / (2.0L * h);
  }
  long double log_det = 0.0L;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t pivot = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::fabs(jac[i][k]) > std::fabs(jac[pivot][k])) pivot = i;
    if (jac[pivot][k] == 0.0L) throw std::runtime_error("singular jacobian");
    std::swap(jac[k], jac[pivot]);
    log_det += std::log(std::fabs(jac[k][k]));
    for (std::size_t i = k + 1; i < n; ++i) {
      const long double factor = jac[i][k] / jac[k][k];
      for (std::size_t c = k; c < n; ++c) jac[i][c] -= factor * jac[k][c];
    }
  }
  return static_cast<double>(log_det);
}

double brute_force_uniformity(const MatrixD& z, double t) {
  long double sum = 0.0L;
  for (std::size_t i = 0; i < z.rows(); ++i) {
    for (std::size_t j = 0; j < z.rows(); ++j) {
      long double sq = 0.0L;
      for (std::size_t c = 0; c < z.cols(); ++c) {
        const long double d = z(i, c) - z(j, c);
        sq += d * d;
      }
      sum += std::exp(-t * sq);
    }
  }
  const long double pairs = static_cast<long double>(z.rows()) * z.rows();
  return static_cast<double>(std::log(sum / pairs));
}

double brute_force_tolerance(const MatrixD& z, std::span<const std::int64_t> labels) {
  long double sum = 0.0L;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < z.rows(); ++i) {
    for (std::size_t j = 0; j < z.rows(); ++j) {
      if (labels[i] != labels[j]) continue;
      long double dot = 0.0L;
      for (std::size_t c = 0; c < z.cols(); ++c) dot += z(i, c) * z(j, c);
      sum += dot;
      ++pairs;
    }
  }
  return static_cast<double>(sum / pairs);
}

double grid_mass(const std::function<std::vector<double>(const MatrixD&)>& log_density,
                 double half_width, std::size_t cells) {
  const double step = 2.0 * half_width / static_cast<double>(cells);
  MatrixD points(cells * cells, 2);
  for (std::size_t i = 0; i < cells; ++i) {
    for (std::size_t j = 0; j < cells; ++j) {
      points(i * cells + j, 0) = -half_width + (static_cast<double>(i) + 0.5) * step;
      points(i * cells + j, 1) = -half_width + (static_cast<double>(j) + 0.5) * step;
    }
  }
  double mass = 0.0;
  for (double lp : log_density(points)) mass += std::exp(lp);
  return mass * step * step;
}

MatrixD random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                      double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  MatrixD m(rows, cols);
  for (double& v : m.values()) v = normal(rng);
  return m;
}

void perturb(FlowModelD& model, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  for (auto& p : model.params())
    for (double& v : p.value) v += normal(rng);
}

std::vector<double> row_vector(const MatrixD& m, std::size_t r) {
  auto row = m.row(r);
  return {row.begin(), row.end()};
}

MatrixD single_row(const std::vector<double>& v) { return MatrixD(1, v.size(), v); }

}  // namespace flowood::testing
