#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "flowood/adam.hpp"
#include "flowood/matrix.hpp"

namespace flowood {

// Invertible linear map W = P L U on feature vectors, the vector analogue of
// Glow's 1x1 convolution.
//
// `lu` packs both triangular factors: entries below the diagonal belong to the
// unit-lower-triangular L, entries above it to U. The diagonal of `lu` is not
// used; U's diagonal is sign[i] * exp(log_magnitude[i]), so W is invertible
// for any parameter values and log|det W| = sum(log_magnitude).
//
// P is stored as an index map: (P v)[i] = v[permutation[i]].
template <typename T>
struct InvertibleLinear {
  std::vector<std::uint32_t> permutation;
  BasicMatrix<T> lu;
  std::vector<std::int8_t> sign;
  std::vector<T> log_magnitude;
  BasicMatrix<T> grad_lu;
  std::vector<T> grad_log_magnitude;

  InvertibleLinear() = default;
  // Identity permutation, L = U = I.
  explicit InvertibleLinear(std::size_t dim);
  // Random permutation, L = U = I.
  InvertibleLinear(std::size_t dim, std::mt19937_64& rng);

  std::size_t dim() const noexcept { return permutation.size(); }
  double log_det() const;

  BasicMatrix<T> lower() const;  // dense L
  BasicMatrix<T> upper() const;  // dense U
  BasicMatrix<T> weight() const;  // dense W = P L U

  BasicMatrix<T> forward(const BasicMatrix<T>& x, std::span<double> log_det) const;
  BasicMatrix<T> inverse(const BasicMatrix<T>& y) const;
  BasicMatrix<T> backward(const BasicMatrix<T>& x, const BasicMatrix<T>& grad_y,
                          std::span<const double> grad_log_det);

  std::vector<ParamRef<T>> params();
  void zero_grad();

  template <typename U>
  InvertibleLinear<U> cast() const {
    InvertibleLinear<U> out;
    out.permutation = permutation;
    out.lu = lu.template cast<U>();
    out.sign = sign;
    out.log_magnitude.assign(log_magnitude.begin(), log_magnitude.end());
    out.grad_lu = grad_lu.template cast<U>();
    out.grad_log_magnitude.assign(grad_log_magnitude.begin(),
                                  grad_log_magnitude.end());
    return out;
  }
};

}  // namespace flowood
