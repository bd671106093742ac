#pragma once

#include <random>
#include <span>
#include <vector>

#include "flowood/adam.hpp"
#include "flowood/linear.hpp"
#include "flowood/matrix.hpp"

namespace flowood {

inline constexpr double kCouplingScaleBound = 2.0;

// Affine coupling over contiguous halves. The vector is cut at ceil(D/2);
// parity 0 conditions on the first part and transforms the second, parity 1
// the reverse. A two-layer ReLU MLP maps the conditioning part to
// (raw_s, t) over the transformed part and
//   y_b = x_b * exp(s) + t,  s = scale_bound * tanh(raw_s),  log-det = sum(s).
template <typename T>
struct Coupling {
  struct Trace {
    BasicMatrix<T> pass_in;
    BasicMatrix<T> hidden_pre;
    BasicMatrix<T> hidden;
    BasicMatrix<T> tanh_raw_s;
    BasicMatrix<T> s;
  };

  std::size_t dim = 0;
  int parity = 0;
  T scale_bound = static_cast<T>(kCouplingScaleBound);
  LinearLayer<T> hidden;  // pass -> hidden_width
  LinearLayer<T> output;  // hidden_width -> 2 * transformed (raw_s then t)

  Coupling() = default;
  // Hidden layer uniform, output layer zero: the coupling starts as identity.
  Coupling(std::size_t dim, int parity, std::size_t hidden_width,
           std::mt19937_64& rng);

  std::size_t split_point() const noexcept { return (dim + 1) / 2; }
  std::size_t pass_begin() const noexcept { return parity == 0 ? 0 : split_point(); }
  std::size_t pass_size() const noexcept {
    return parity == 0 ? split_point() : dim - split_point();
  }
  std::size_t transform_begin() const noexcept {
    return parity == 0 ? split_point() : 0;
  }
  std::size_t transform_size() const noexcept { return dim - pass_size(); }
  std::size_t hidden_width() const noexcept { return hidden.out_features(); }

  BasicMatrix<T> forward(const BasicMatrix<T>& x, std::span<double> log_det,
                         Trace* trace = nullptr) const;
  BasicMatrix<T> inverse(const BasicMatrix<T>& y) const;
  // `trace` must come from forward() on the same `x` with current parameters.
  BasicMatrix<T> backward(const BasicMatrix<T>& x, const Trace& trace,
                          const BasicMatrix<T>& grad_y,
                          std::span<const double> grad_log_det);

  std::vector<ParamRef<T>> params();
  void zero_grad();

  template <typename U>
  Coupling<U> cast() const {
    Coupling<U> out;
    out.dim = dim;
    out.parity = parity;
    out.scale_bound = static_cast<U>(scale_bound);
    out.hidden = hidden.template cast<U>();
    out.output = output.template cast<U>();
    return out;
  }
};

}  // namespace flowood
