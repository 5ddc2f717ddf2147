#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <string>

#include "rfpa/error.hpp"

namespace rfpa {

// Dense LU with partial pivoting. A pivot below `rel_tol` times the largest
// matrix entry is treated as singular; `describe` names the unknown whose
// column collapsed so callers can report a suspect node.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> solve_dense(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& a,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& b,
    const std::function<std::string(Eigen::Index)>& describe,
    double rel_tol = 1e-14) {
  const Eigen::Index n = a.rows();
  if (n == 0) return {};
  Eigen::PartialPivLU<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> lu(a);
  const double scale = a.cwiseAbs().maxCoeff();
  const auto& packed = lu.matrixLU();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double pivot = std::abs(packed(i, i));
    if (!(pivot > rel_tol * scale) || !std::isfinite(pivot))
      throw SingularMatrixError(describe(i));
  }
  return lu.solve(b);
}

}  // namespace rfpa
