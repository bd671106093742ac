#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace flowood {

// Dense row-major matrix. Float is the storage type everywhere outside of
// gradient checking, where the same code runs in double.
template <typename T>
class BasicMatrix {
 public:
  using value_type = T;

  BasicMatrix() = default;
  BasicMatrix(std::size_t rows, std::size_t cols, T fill = T{0});
  BasicMatrix(std::size_t rows, std::size_t cols, std::vector<T> data);
  BasicMatrix(std::initializer_list<std::initializer_list<T>> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }

  void fill(T value);
  bool all_finite() const noexcept;

  BasicMatrix select_rows(std::span<const std::size_t> indices) const;
  BasicMatrix transposed() const;

  template <typename U>
  BasicMatrix<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return BasicMatrix<U>(rows_, cols_, std::move(out));
  }

  friend bool operator==(const BasicMatrix&, const BasicMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using Matrix = BasicMatrix<float>;
using MatrixD = BasicMatrix<double>;

// Throws DimensionError naming `what` when the shapes disagree.
void require_shape(std::size_t rows, std::size_t cols, std::size_t want_rows,
                   std::size_t want_cols, const char* what);
void require_cols(std::size_t cols, std::size_t want_cols, const char* what);

// out = a * b
template <typename T>
BasicMatrix<T> matmul(const BasicMatrix<T>& a, const BasicMatrix<T>& b);
// out = a * b^T
template <typename T>
BasicMatrix<T> matmul_nt(const BasicMatrix<T>& a, const BasicMatrix<T>& b);
// out = a^T * b
template <typename T>
BasicMatrix<T> matmul_tn(const BasicMatrix<T>& a, const BasicMatrix<T>& b);

}  // namespace flowood
