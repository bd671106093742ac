#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "flowood/matrix.hpp"

namespace flowood {

// Fully connected layer y = W x + b applied to each row of a batch.
template <typename T>
struct LinearLayer {
  BasicMatrix<T> weight;  // [out x in]
  std::vector<T> bias;    // [out]
  BasicMatrix<T> grad_weight;
  std::vector<T> grad_bias;

  LinearLayer() = default;
  LinearLayer(std::size_t in_features, std::size_t out_features);

  std::size_t in_features() const noexcept { return weight.cols(); }
  std::size_t out_features() const noexcept { return weight.rows(); }

  // Uniform in +-sqrt(1/fan_in) for weights and bias.
  void init_uniform(std::mt19937_64& rng);
  void zero_parameters();
  void zero_grad();

  template <typename U>
  LinearLayer<U> cast() const {
    LinearLayer<U> out;
    out.weight = weight.template cast<U>();
    out.bias.assign(bias.begin(), bias.end());
    out.grad_weight = grad_weight.template cast<U>();
    out.grad_bias.assign(grad_bias.begin(), grad_bias.end());
    return out;
  }
};

template <typename T>
BasicMatrix<T> linear_forward(const LinearLayer<T>& layer,
                              const BasicMatrix<T>& x);

// Accumulates grad_weight += grad_out^T x and grad_bias += colsum(grad_out);
// returns grad_out * W.
template <typename T>
BasicMatrix<T> linear_backward(LinearLayer<T>& layer, const BasicMatrix<T>& x,
                               const BasicMatrix<T>& grad_out);

template <typename T>
BasicMatrix<T> relu_forward(const BasicMatrix<T>& x);

template <typename T>
BasicMatrix<T> relu_backward(const BasicMatrix<T>& x,
                             const BasicMatrix<T>& grad_out);

}  // namespace flowood
