#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "flowood/actnorm.hpp"
#include "flowood/coupling.hpp"
#include "flowood/error.hpp"
#include "flowood/gradcheck.hpp"
#include "flowood/inv_linear.hpp"
#include "oracles.hpp"

namespace flowood {
namespace {

using testing::fd_log_abs_det;
using testing::random_matrix;
using testing::row_vector;
using testing::single_row;

constexpr double kStep = 1e-5;

template <typename Layer>
MatrixD run_forward(const Layer& layer, const MatrixD& x, std::vector<double>& ld,
                    typename Coupling<double>::Trace* trace = nullptr) {
  ld.assign(x.rows(), 0.0);
  if constexpr (std::is_same_v<Layer, Coupling<double>>) {
    return layer.forward(x, ld, trace);
  } else {
    (void)trace;
    return layer.forward(x, ld);
  }
}

// L = sum(w * y) + sum(c * log_det) for fixed random w, c.
template <typename Layer>
double probe_loss(const Layer& layer, const MatrixD& x, const MatrixD& w,
                  const std::vector<double>& c) {
  std::vector<double> ld;
  const MatrixD y = run_forward(layer, x, ld);
  double loss = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) loss += w.values()[i] * y.values()[i];
  for (std::size_t r = 0; r < ld.size(); ++r) loss += c[r] * ld[r];
  return loss;
}

template <typename Layer>
void check_layer(Layer layer, std::uint64_t seed) {
  std::size_t d = 0;
  if constexpr (std::is_same_v<Layer, Coupling<double>>) d = layer.dim;
  else d = layer.dim();
  std::mt19937_64 rng(seed);
  const MatrixD x = random_matrix(6, d, rng);

  // Invertibility.
  std::vector<double> ld;
  const MatrixD y = run_forward(layer, x, ld);
  const MatrixD back = layer.inverse(y);
  for (std::size_t i = 0; i < x.size(); ++i)
    EXPECT_NEAR(back.values()[i], x.values()[i], 1e-10);

  // Log-det against the finite-difference Jacobian.
  for (std::size_t r = 0; r < 3; ++r) {
    const double fd = fd_log_abs_det(
        [&](const std::vector<double>& v) {
          std::vector<double> unused;
          return row_vector(run_forward(layer, single_row(v), unused), 0);
        },
        row_vector(x, r), kStep);
    EXPECT_LT(std::abs(ld[r] - fd) / std::abs(fd), 1e-3) << "row " << r;
    EXPECT_NEAR(ld[r], fd, 1e-6) << "row " << r;
  }

  // Backward against central differences, for the input and every parameter.
  const MatrixD w = random_matrix(x.rows(), d, rng);
  std::vector<double> c(x.rows());
  std::normal_distribution<double> normal;
  for (double& v : c) v = normal(rng);

  layer.zero_grad();
  MatrixD grad_x;
  if constexpr (std::is_same_v<Layer, Coupling<double>>) {
    typename Coupling<double>::Trace trace;
    run_forward(layer, x, ld, &trace);
    grad_x = layer.backward(x, trace, w, c);
  } else {
    grad_x = layer.backward(x, w, c);
  }

  const std::vector<double> xs(x.values().begin(), x.values().end());
  const double err_x = finite_diff_check(
      [&](std::span<const double> v) {
        return probe_loss(layer, MatrixD(x.rows(), d, {v.begin(), v.end()}), w, c);
      },
      xs, grad_x.values(), kStep);
  EXPECT_LT(err_x, 1e-4) << "input gradient";

  auto params = layer.params();
  for (std::size_t p = 0; p < params.size(); ++p) {
    const std::vector<double> values(params[p].value.begin(), params[p].value.end());
    const std::vector<double> grads(params[p].grad.begin(), params[p].grad.end());
    const double err = finite_diff_check(
        [&](std::span<const double> v) {
          Layer copy = layer;
          auto target = copy.params()[p].value;
          std::copy(v.begin(), v.end(), target.begin());
          return probe_loss(copy, x, w, c);
        },
        values, grads, kStep);
    EXPECT_LT(err, 1e-4) << params[p].name;
  }
}

void randomize(std::vector<ParamRef<double>> params, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  for (auto& p : params)
    for (double& v : p.value) v += normal(rng);
}

ActNorm<double> random_actnorm(std::size_t d, std::mt19937_64& rng) {
  ActNorm<double> a = ActNorm<double>::identity(d);
  std::uniform_real_distribution<double> u(0.1, 0.5);
  for (double& v : a.log_scale) v = u(rng);
  for (double& v : a.bias) v = u(rng) - 0.3;
  return a;
}

InvertibleLinear<double> random_inv_linear(std::size_t d, std::mt19937_64& rng) {
  InvertibleLinear<double> m(d, rng);
  randomize(m.params(), rng, 0.3);
  std::uniform_real_distribution<double> u(0.1, 0.5);
  for (double& v : m.log_magnitude) v = u(rng);
  m.sign[0] = -1;
  return m;
}

Coupling<double> random_coupling(std::size_t d, int parity, std::mt19937_64& rng) {
  Coupling<double> c(d, parity, 12, rng);
  randomize(c.params(), rng, 0.3);
  return c;
}

TEST(ActNorm, AnalyticProperties) {
  for (std::size_t d : {3u, 8u}) {
    std::mt19937_64 rng(d);
    check_layer(random_actnorm(d, rng), 10 + d);
  }
}

TEST(InvertibleLinear, AnalyticProperties) {
  for (std::size_t d : {3u, 5u, 8u}) {
    std::mt19937_64 rng(d);
    check_layer(random_inv_linear(d, rng), 20 + d);
  }
}

TEST(Coupling, AnalyticProperties) {
  for (std::size_t d : {2u, 5u, 8u}) {
    for (int parity : {0, 1}) {
      std::mt19937_64 rng(d * 2 + parity);
      check_layer(random_coupling(d, parity, rng), 30 + d + parity);
    }
  }
}

TEST(ActNorm, InitializeStandardizesBatch) {
  std::mt19937_64 rng(4);
  MatrixD x = random_matrix(50, 4, rng, 3.0);
  for (std::size_t r = 0; r < x.rows(); ++r) x(r, 2) += 7.0;
  ActNorm<double> a(4);
  a.initialize(x);
  std::vector<double> ld(x.rows());
  const MatrixD y = a.forward(x, ld);
  for (std::size_t j = 0; j < 4; ++j) {
    double mean = 0.0, sq = 0.0;
    for (std::size_t r = 0; r < y.rows(); ++r) mean += y(r, j);
    mean /= static_cast<double>(y.rows());
    for (std::size_t r = 0; r < y.rows(); ++r) sq += (y(r, j) - mean) * (y(r, j) - mean);
    EXPECT_NEAR(mean, 0.0, 1e-12);
    EXPECT_NEAR(sq / static_cast<double>(y.rows()), 1.0, 1e-12);
  }
}

TEST(ActNorm, ZeroVarianceNamesDimension) {
  MatrixD x{{1, 2, 3}, {4, 2, 6}};
  ActNorm<double> a(3);
  try {
    a.initialize(x);
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("dimension 1"), std::string::npos) << e.what();
  }
}

TEST(ActNorm, UseBeforeInitializationThrows) {
  ActNorm<double> a(2);
  std::vector<double> ld(1);
  EXPECT_THROW(a.forward(MatrixD{{1, 2}}, ld), ConfigError);
}

TEST(InvertibleLinear, WeightIsPermutedLowerUpperProduct) {
  std::mt19937_64 rng(5);
  const auto m = random_inv_linear(4, rng);
  const MatrixD l = m.lower();
  const MatrixD u = m.upper();
  MatrixD lu(4, 4);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      for (std::size_t k = 0; k < 4; ++k) lu(i, j) += l(i, k) * u(k, j);
  const MatrixD w = m.weight();
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(l(i, i), 1.0);
    EXPECT_EQ(u(i, i), m.sign[i] * std::exp(m.log_magnitude[i]));
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(w(i, j), lu(m.permutation[i], j), 1e-14);
  }
  std::mt19937_64 xr(6);
  const MatrixD x = random_matrix(3, 4, xr);
  std::vector<double> ld(3);
  const MatrixD y = m.forward(x, ld);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t i = 0; i < 4; ++i) {
      double expect = 0.0;
      for (std::size_t j = 0; j < 4; ++j) expect += w(i, j) * x(r, j);
      EXPECT_NEAR(y(r, i), expect, 1e-12);
    }
  double sum = 0.0;
  for (double v : m.log_magnitude) sum += v;
  EXPECT_DOUBLE_EQ(m.log_det(), sum);
}

TEST(InvertibleLinear, IdentityConstruction) {
  InvertibleLinear<double> m(3);
  const MatrixD w = m.weight();
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(w(i, j), i == j ? 1.0 : 0.0);
  EXPECT_EQ(m.log_det(), 0.0);
}

TEST(Coupling, StartsAsIdentity) {
  std::mt19937_64 rng(7);
  Coupling<double> c(5, 1, 8, rng);
  const MatrixD x = random_matrix(4, 5, rng);
  std::vector<double> ld(4, 0.0);
  EXPECT_EQ(c.forward(x, ld), x);
  for (double v : ld) EXPECT_EQ(v, 0.0);
}

TEST(Coupling, PassThroughPartUnchangedAndScaleBounded) {
  std::mt19937_64 rng(8);
  Coupling<double> c(7, 0, 8, rng);
  randomize(c.params(), rng, 50.0);
  const MatrixD x = random_matrix(10, 7, rng);
  std::vector<double> ld(10, 0.0);
  const MatrixD y = c.forward(x, ld);
  EXPECT_EQ(c.pass_size(), 4u);
  EXPECT_EQ(c.transform_size(), 3u);
  for (std::size_t r = 0; r < 10; ++r) {
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(y(r, j), x(r, j));
    EXPECT_LE(std::abs(ld[r]), 3 * kCouplingScaleBound + 1e-12);
  }
}

TEST(Coupling, RejectsDimensionOne) {
  std::mt19937_64 rng(9);
  EXPECT_THROW(Coupling<double>(1, 0, 4, rng), ConfigError);
}

}  // namespace
}  // namespace flowood
