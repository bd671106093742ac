#pragma once

#include <span>
#include <vector>

#include "flowood/adam.hpp"
#include "flowood/matrix.hpp"

namespace flowood {

// Per-dimension affine layer y = x * exp(log_scale) + bias with Glow-style
// data-dependent initialization.
template <typename T>
struct ActNorm {
  std::vector<T> log_scale;
  std::vector<T> bias;
  std::vector<T> grad_log_scale;
  std::vector<T> grad_bias;
  bool initialized = false;

  ActNorm() = default;
  explicit ActNorm(std::size_t dim);
  static ActNorm identity(std::size_t dim);

  std::size_t dim() const noexcept { return log_scale.size(); }
  double log_det() const;

  // Sets parameters so that `batch` maps to per-dimension zero mean and unit
  // (population) variance. Throws NumericError naming a zero-variance dim.
  void initialize(const BasicMatrix<T>& batch);

  BasicMatrix<T> forward(const BasicMatrix<T>& x, std::span<double> log_det) const;
  BasicMatrix<T> inverse(const BasicMatrix<T>& y) const;
  BasicMatrix<T> backward(const BasicMatrix<T>& x, const BasicMatrix<T>& grad_y,
                          std::span<const double> grad_log_det);

  std::vector<ParamRef<T>> params();
  void zero_grad();

  template <typename U>
  ActNorm<U> cast() const {
    ActNorm<U> out;
    out.log_scale.assign(log_scale.begin(), log_scale.end());
    out.bias.assign(bias.begin(), bias.end());
    out.grad_log_scale.assign(grad_log_scale.begin(), grad_log_scale.end());
    out.grad_bias.assign(grad_bias.begin(), grad_bias.end());
    out.initialized = initialized;
    return out;
  }
};

}  // namespace flowood
