#include "flowood/matrix.hpp"

#include <cmath>
#include <string>

#include "eigen_view.hpp"
#include "flowood/error.hpp"

namespace flowood {

template <typename T>
BasicMatrix<T>::BasicMatrix(std::size_t rows, std::size_t cols, T fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

template <typename T>
BasicMatrix<T>::BasicMatrix(std::size_t rows, std::size_t cols,
                            std::vector<T> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw DimensionError("matrix data length " + std::to_string(data_.size()) +
                         " does not equal " + std::to_string(rows_) + "x" +
                         std::to_string(cols_));
  }
}

template <typename T>
BasicMatrix<T>::BasicMatrix(std::initializer_list<std::initializer_list<T>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionError("ragged matrix initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

template <typename T>
void BasicMatrix<T>::fill(T value) {
  std::fill(data_.begin(), data_.end(), value);
}

template <typename T>
bool BasicMatrix<T>::all_finite() const noexcept {
  for (T v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

template <typename T>
BasicMatrix<T> BasicMatrix<T>::select_rows(
    std::span<const std::size_t> indices) const {
  BasicMatrix out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= rows_) throw DimensionError("row index out of range");
    std::copy_n(data_.data() + indices[i] * cols_, cols_,
                out.data_.data() + i * cols_);
  }
  return out;
}

template <typename T>
BasicMatrix<T> BasicMatrix<T>::transposed() const {
  BasicMatrix out(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) out(c, r) = (*this)(r, c);
  return out;
}

void require_shape(std::size_t rows, std::size_t cols, std::size_t want_rows,
                   std::size_t want_cols, const char* what) {
  if (rows != want_rows || cols != want_cols) {
    throw DimensionError(std::string(what) + ": expected " +
                         std::to_string(want_rows) + "x" +
                         std::to_string(want_cols) + ", got " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  }
}

void require_cols(std::size_t cols, std::size_t want_cols, const char* what) {
  if (cols != want_cols) {
    throw DimensionError(std::string(what) + ": expected " +
                         std::to_string(want_cols) + " columns, got " +
                         std::to_string(cols));
  }
}

template <typename T>
BasicMatrix<T> matmul(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  if (a.cols() != b.rows()) throw DimensionError("matmul: inner dimension mismatch");
  BasicMatrix<T> out(a.rows(), b.cols());
  if (!out.empty() && a.cols() > 0) detail::view(out).noalias() = detail::view(a) * detail::view(b);
  return out;
}

template <typename T>
BasicMatrix<T> matmul_nt(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  if (a.cols() != b.cols()) throw DimensionError("matmul_nt: inner dimension mismatch");
  BasicMatrix<T> out(a.rows(), b.rows());
  if (!out.empty() && a.cols() > 0)
    detail::view(out).noalias() = detail::view(a) * detail::view(b).transpose();
  return out;
}

template <typename T>
BasicMatrix<T> matmul_tn(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  if (a.rows() != b.rows()) throw DimensionError("matmul_tn: inner dimension mismatch");
  BasicMatrix<T> out(a.cols(), b.cols());
  if (!out.empty() && a.rows() > 0)
    detail::view(out).noalias() = detail::view(a).transpose() * detail::view(b);
  return out;
}

template class BasicMatrix<float>;
template class BasicMatrix<double>;
template BasicMatrix<float> matmul(const BasicMatrix<float>&, const BasicMatrix<float>&);
template BasicMatrix<double> matmul(const BasicMatrix<double>&, const BasicMatrix<double>&);
template BasicMatrix<float> matmul_nt(const BasicMatrix<float>&, const BasicMatrix<float>&);
template BasicMatrix<double> matmul_nt(const BasicMatrix<double>&, const BasicMatrix<double>&);
template BasicMatrix<float> matmul_tn(const BasicMatrix<float>&, const BasicMatrix<float>&);
template BasicMatrix<double> matmul_tn(const BasicMatrix<double>&, const BasicMatrix<double>&);

}  // namespace flowood
