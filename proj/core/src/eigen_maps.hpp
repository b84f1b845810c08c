#pragma once

#include <Eigen/Core>

#include "cgrn/tensor.hpp"

namespace cgrn::detail {

using MatrixRM = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatrixRM>;
using ConstMapRM = Eigen::Map<const MatrixRM>;

inline MapRM as_matrix(Real* data, std::size_t rows, std::size_t cols) {
  return MapRM(data, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

inline ConstMapRM as_matrix(const Real* data, std::size_t rows, std::size_t cols) {
  return ConstMapRM(data, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

}  // namespace cgrn::detail
