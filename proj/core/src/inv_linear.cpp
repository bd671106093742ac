#include "flowood/inv_linear.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "eigen_view.hpp"
#include "flowood/error.hpp"

namespace flowood {

template <typename T>
InvertibleLinear<T>::InvertibleLinear(std::size_t dim)
    : permutation(dim),
      lu(dim, dim),
      sign(dim, 1),
      log_magnitude(dim, T{0}),
      grad_lu(dim, dim),
      grad_log_magnitude(dim, T{0}) {
  std::iota(permutation.begin(), permutation.end(), 0u);
}

template <typename T>
InvertibleLinear<T>::InvertibleLinear(std::size_t dim, std::mt19937_64& rng)
    : InvertibleLinear(dim) {
  std::shuffle(permutation.begin(), permutation.end(), rng);
}

template <typename T>
double InvertibleLinear<T>::log_det() const {
  double total = 0.0;
  for (T v : log_magnitude) total += v;
  return total;
}

template <typename T>
BasicMatrix<T> InvertibleLinear<T>::lower() const {
  const std::size_t d = dim();
  BasicMatrix<T> l(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < i; ++j) l(i, j) = lu(i, j);
    l(i, i) = T{1};
  }
  return l;
}

template <typename T>
BasicMatrix<T> InvertibleLinear<T>::upper() const {
  const std::size_t d = dim();
  BasicMatrix<T> u(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    u(i, i) = static_cast<T>(sign[i] * std::exp(static_cast<double>(log_magnitude[i])));
    for (std::size_t j = i + 1; j < d; ++j) u(i, j) = lu(i, j);
  }
  return u;
}

template <typename T>
BasicMatrix<T> InvertibleLinear<T>::weight() const {
  const BasicMatrix<T> lu_product = matmul(lower(), upper());
  BasicMatrix<T> w(dim(), dim());
  for (std::size_t i = 0; i < dim(); ++i) {
    auto src = lu_product.row(permutation[i]);
    std::copy(src.begin(), src.end(), w.row(i).begin());
  }
  return w;
}

template <typename T>
BasicMatrix<T> InvertibleLinear<T>::forward(const BasicMatrix<T>& x,
                                            std::span<double> log_det) const {
  require_cols(x.cols(), dim(), "invertible linear forward input");
  const BasicMatrix<T> a = matmul_nt(x, upper());
  const BasicMatrix<T> b = matmul_nt(a, lower());
  BasicMatrix<T> y(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto br = b.row(r);
    auto yr = y.row(r);
    for (std::size_t i = 0; i < dim(); ++i) yr[i] = br[permutation[i]];
  }
  const double ld = this->log_det();
  for (auto& v : log_det) v += ld;
  return y;
}

template <typename T>
BasicMatrix<T> InvertibleLinear<T>::inverse(const BasicMatrix<T>& y) const {
  require_cols(y.cols(), dim(), "invertible linear inverse input");
  const std::size_t d = dim();
  // Solve in double regardless of storage precision.
  MatrixD bt(d, y.rows());
  for (std::size_t r = 0; r < y.rows(); ++r)
    for (std::size_t i = 0; i < d; ++i) bt(permutation[i], r) = y(r, i);
  const MatrixD l = lower().template cast<double>();
  const MatrixD u = upper().template cast<double>();
  auto bv = detail::view(bt);
  detail::view(l).template triangularView<Eigen::UnitLower>().solveInPlace(bv);
  detail::view(u).template triangularView<Eigen::Upper>().solveInPlace(bv);
  BasicMatrix<T> x(y.rows(), d);
  for (std::size_t r = 0; r < y.rows(); ++r)
    for (std::size_t i = 0; i < d; ++i) x(r, i) = static_cast<T>(bt(i, r));
  return x;
}

template <typename T>
BasicMatrix<T> InvertibleLinear<T>::backward(const BasicMatrix<T>& x,
                                             const BasicMatrix<T>& grad_y,
                                             std::span<const double> grad_log_det) {
  const std::size_t d = dim();
  require_shape(grad_y.rows(), grad_y.cols(), x.rows(), d,
                "invertible linear backward grad");
  const BasicMatrix<T> l = lower();
  const BasicMatrix<T> u = upper();
  const BasicMatrix<T> a = matmul_nt(x, u);

  BasicMatrix<T> grad_b(x.rows(), d);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto gy = grad_y.row(r);
    auto gb = grad_b.row(r);
    for (std::size_t i = 0; i < d; ++i) gb[permutation[i]] = gy[i];
  }
  const BasicMatrix<T> grad_l = matmul_tn(grad_b, a);
  const BasicMatrix<T> grad_a = matmul(grad_b, l);
  const BasicMatrix<T> grad_u = matmul_tn(grad_a, x);

  double g_ld = 0.0;
  for (double g : grad_log_det) g_ld += g;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < i; ++j) grad_lu(i, j) += grad_l(i, j);
    for (std::size_t j = i + 1; j < d; ++j) grad_lu(i, j) += grad_u(i, j);
    grad_log_magnitude[i] +=
        static_cast<T>(static_cast<double>(grad_u(i, i)) * u(i, i) + g_ld);
  }
  return matmul(grad_a, u);
}

template <typename T>
std::vector<ParamRef<T>> InvertibleLinear<T>::params() {
  return {{"invlinear.lu", lu.values(), grad_lu.values()},
          {"invlinear.log_magnitude", log_magnitude, grad_log_magnitude}};
}

template <typename T>
void InvertibleLinear<T>::zero_grad() {
  grad_lu.fill(T{0});
  std::fill(grad_log_magnitude.begin(), grad_log_magnitude.end(), T{0});
}

template struct InvertibleLinear<float>;
template struct InvertibleLinear<double>;

}  // namespace flowood
