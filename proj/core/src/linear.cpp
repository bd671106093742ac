#include "flowood/linear.hpp"

#include <cmath>

#include "eigen_view.hpp"
#include "flowood/error.hpp"

namespace flowood {

template <typename T>
LinearLayer<T>::LinearLayer(std::size_t in_features, std::size_t out_features)
    : weight(out_features, in_features),
      bias(out_features, T{0}),
      grad_weight(out_features, in_features),
      grad_bias(out_features, T{0}) {}

template <typename T>
void LinearLayer<T>::init_uniform(std::mt19937_64& rng) {
  const double bound = std::sqrt(1.0 / static_cast<double>(in_features()));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (T& w : weight.values()) w = static_cast<T>(dist(rng));
  for (T& b : bias) b = static_cast<T>(dist(rng));
}

template <typename T>
void LinearLayer<T>::zero_parameters() {
  weight.fill(T{0});
  std::fill(bias.begin(), bias.end(), T{0});
}

template <typename T>
void LinearLayer<T>::zero_grad() {
  grad_weight.fill(T{0});
  std::fill(grad_bias.begin(), grad_bias.end(), T{0});
}

template <typename T>
BasicMatrix<T> linear_forward(const LinearLayer<T>& layer,
                              const BasicMatrix<T>& x) {
  require_cols(x.cols(), layer.in_features(), "linear_forward input");
  BasicMatrix<T> out = matmul_nt(x, layer.weight);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += layer.bias[c];
  }
  return out;
}

template <typename T>
BasicMatrix<T> linear_backward(LinearLayer<T>& layer, const BasicMatrix<T>& x,
                               const BasicMatrix<T>& grad_out) {
  require_cols(x.cols(), layer.in_features(), "linear_backward input");
  require_shape(grad_out.rows(), grad_out.cols(), x.rows(),
                layer.out_features(), "linear_backward grad_out");
  if (x.rows() > 0) {
    detail::view(layer.grad_weight).noalias() +=
        detail::view(grad_out).transpose() * detail::view(x);
    const auto colsum = detail::view(grad_out).colwise().sum();
    for (std::size_t c = 0; c < layer.grad_bias.size(); ++c)
      layer.grad_bias[c] += colsum(static_cast<Eigen::Index>(c));
  }
  return matmul(grad_out, layer.weight);
}

template <typename T>
BasicMatrix<T> relu_forward(const BasicMatrix<T>& x) {
  BasicMatrix<T> y = x;
  for (T& v : y.values()) v = v > T{0} ? v : T{0};
  return y;
}

template <typename T>
BasicMatrix<T> relu_backward(const BasicMatrix<T>& x,
                             const BasicMatrix<T>& grad_out) {
  require_shape(grad_out.rows(), grad_out.cols(), x.rows(), x.cols(),
                "relu_backward grad_out");
  BasicMatrix<T> g = grad_out;
  auto gv = g.values();
  auto xv = x.values();
  for (std::size_t i = 0; i < gv.size(); ++i) {
    if (!(xv[i] > T{0})) gv[i] = T{0};
  }
  return g;
}

template struct LinearLayer<float>;
template struct LinearLayer<double>;
template BasicMatrix<float> linear_forward(const LinearLayer<float>&, const BasicMatrix<float>&);
template BasicMatrix<double> linear_forward(const LinearLayer<double>&, const BasicMatrix<double>&);
template BasicMatrix<float> linear_backward(LinearLayer<float>&, const BasicMatrix<float>&, const BasicMatrix<float>&);
template BasicMatrix<double> linear_backward(LinearLayer<double>&, const BasicMatrix<double>&, const BasicMatrix<double>&);
template BasicMatrix<float> relu_forward(const BasicMatrix<float>&);
template BasicMatrix<double> relu_forward(const BasicMatrix<double>&);
template BasicMatrix<float> relu_backward(const BasicMatrix<float>&, const BasicMatrix<float>&);
template BasicMatrix<double> relu_backward(const BasicMatrix<double>&, const BasicMatrix<double>&);

}  // namespace flowood
