#pragma once

#include <Eigen/SVD>

#include "lsvd/matrix.hpp"

namespace lsvd::test {

inline Eigen::MatrixXd to_eigen(const Matrix& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
  return e;
}

// Largest singular value from Eigen's two-sided Jacobi SVD.
inline double eigen_spectral_norm(const Matrix& m) {
  return Eigen::JacobiSVD<Eigen::MatrixXd>(to_eigen(m)).singularValues()(0);
}

}  // namespace lsvd::test
