#include "flowood/actnorm.hpp"

#include <cmath>
#include <string>

#include "flowood/error.hpp"

namespace flowood {

template <typename T>
ActNorm<T>::ActNorm(std::size_t dim)
    : log_scale(dim, T{0}),
      bias(dim, T{0}),
      grad_log_scale(dim, T{0}),
      grad_bias(dim, T{0}) {}

template <typename T>
ActNorm<T> ActNorm<T>::identity(std::size_t dim) {
  ActNorm layer(dim);
  layer.initialized = true;
  return layer;
}

template <typename T>
double ActNorm<T>::log_det() const {
  double total = 0.0;
  for (T v : log_scale) total += v;
  return total;
}

template <typename T>
void ActNorm<T>::initialize(const BasicMatrix<T>& batch) {
  require_cols(batch.cols(), dim(), "actnorm_init batch");
  if (batch.rows() < 2)
    throw ConfigError("actnorm_init needs a batch with at least 2 rows");
  const auto n = static_cast<double>(batch.rows());
  for (std::size_t j = 0; j < dim(); ++j) {
    double mean = 0.0;
    for (std::size_t r = 0; r < batch.rows(); ++r) mean += batch(r, j);
    mean /= n;
    double var = 0.0;
    for (std::size_t r = 0; r < batch.rows(); ++r) {
      const double d = batch(r, j) - mean;
      var += d * d;
    }
    var /= n;
    const double sd = std::sqrt(var);
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
      throw NumericError("actnorm_init: zero variance in dimension " +
                         std::to_string(j));
    }
    log_scale[j] = static_cast<T>(-std::log(sd));
    bias[j] = static_cast<T>(-mean / sd);
  }
  initialized = true;
}

template <typename T>
BasicMatrix<T> ActNorm<T>::forward(const BasicMatrix<T>& x,
                                   std::span<double> log_det) const {
  if (!initialized) throw ConfigError("actnorm layer used before initialization");
  require_cols(x.cols(), dim(), "actnorm forward input");
  BasicMatrix<T> y(x.rows(), x.cols());
  std::vector<T> scale(dim());
  for (std::size_t j = 0; j < dim(); ++j) scale[j] = std::exp(log_scale[j]);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto in = x.row(r);
    auto out = y.row(r);
    for (std::size_t j = 0; j < dim(); ++j) out[j] = in[j] * scale[j] + bias[j];
  }
  const double ld = this->log_det();
  for (auto& v : log_det) v += ld;
  return y;
}

template <typename T>
BasicMatrix<T> ActNorm<T>::inverse(const BasicMatrix<T>& y) const {
  if (!initialized) throw ConfigError("actnorm layer used before initialization");
  require_cols(y.cols(), dim(), "actnorm inverse input");
  BasicMatrix<T> x(y.rows(), y.cols());
  std::vector<T> inv_scale(dim());
  for (std::size_t j = 0; j < dim(); ++j) inv_scale[j] = std::exp(-log_scale[j]);
  for (std::size_t r = 0; r < y.rows(); ++r) {
    auto in = y.row(r);
    auto out = x.row(r);
    for (std::size_t j = 0; j < dim(); ++j) out[j] = (in[j] - bias[j]) * inv_scale[j];
  }
  return x;
}

template <typename T>
BasicMatrix<T> ActNorm<T>::backward(const BasicMatrix<T>& x,
                                    const BasicMatrix<T>& grad_y,
                                    std::span<const double> grad_log_det) {
  require_shape(grad_y.rows(), grad_y.cols(), x.rows(), dim(),
                "actnorm backward grad");
  BasicMatrix<T> grad_x(x.rows(), x.cols());
  std::vector<double> g_scale(dim(), 0.0);
  std::vector<double> g_bias(dim(), 0.0);
  std::vector<T> scale(dim());
  for (std::size_t j = 0; j < dim(); ++j) scale[j] = std::exp(log_scale[j]);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto xi = x.row(r);
    auto gy = grad_y.row(r);
    auto gx = grad_x.row(r);
    for (std::size_t j = 0; j < dim(); ++j) {
      gx[j] = gy[j] * scale[j];
      g_scale[j] += static_cast<double>(gy[j]) * xi[j] * scale[j];
      g_bias[j] += gy[j];
    }
  }
  double g_ld = 0.0;
  for (double g : grad_log_det) g_ld += g;
  for (std::size_t j = 0; j < dim(); ++j) {
    grad_log_scale[j] += static_cast<T>(g_scale[j] + g_ld);
    grad_bias[j] += static_cast<T>(g_bias[j]);
  }
  return grad_x;
}

template <typename T>
std::vector<ParamRef<T>> ActNorm<T>::params() {
  return {{"actnorm.log_scale", log_scale, grad_log_scale},
          {"actnorm.bias", bias, grad_bias}};
}

template <typename T>
void ActNorm<T>::zero_grad() {
  std::fill(grad_log_scale.begin(), grad_log_scale.end(), T{0});
  std::fill(grad_bias.begin(), grad_bias.end(), T{0});
}

template struct ActNorm<float>;
template struct ActNorm<double>;

}  // namespace flowood
