#pragma once

#include <Eigen/Core>

#include "flowood/matrix.hpp"

namespace flowood::detail {

template <typename T>
using RowMajor =
    Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
Eigen::Map<RowMajor<T>> view(BasicMatrix<T>& m) {
  return {m.data(), static_cast<Eigen::Index>(m.rows()),
          static_cast<Eigen::Index>(m.cols())};
}

template <typename T>
Eigen::Map<const RowMajor<T>> view(const BasicMatrix<T>& m) {
  return {m.data(), static_cast<Eigen::Index>(m.rows()),
          static_cast<Eigen::Index>(m.cols())};
}

}  // namespace flowood::detail
