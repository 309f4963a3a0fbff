#pragma once

#include "svi/vi_core.hpp"

namespace svi {

// Singular values by one-sided Jacobi: rotate column pairs until all are
// mutually orthogonal, then read the values off as column norms. Chosen for
// its unconditional accuracy on the small dense Jacobians this library
// builds (a few hundred rows at most); not intended for large matrices.
inline std::vector<double> singular_values(const Matrix& input) {
  if (input.rows() == 0 || input.cols() == 0)
    throw std::invalid_argument("singular_values: matrix must be nonempty");

  // Work on a tall copy so the pair loop runs over the smaller dimension.
  Matrix w = input.rows() >= input.cols() ? input : Matrix(input.transpose());
  const Eigen::Index cols = w.cols();
  const double eps = std::numeric_limits<double>::epsilon();
  constexpr int kMaxSweeps = 64;

  bool converged = false;
  for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
    converged = true;
    for (Eigen::Index i = 0; i + 1 < cols; ++i) {
      for (Eigen::Index j = i + 1; j < cols; ++j) {
        const double a = w.col(i).squaredNorm();
        const double b = w.col(j).squaredNorm();
        const double c = w.col(i).dot(w.col(j));
        if (std::abs(c) <= eps * std::sqrt(a * b)) continue;
        converged = false;
        // Jacobi rotation angle that zeroes the off-diagonal Gram entry.
        const double zeta = (b - a) / (2.0 * c);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double cs = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = cs * t;
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
          const double wi = w(r, i), wj = w(r, j);
          w(r, i) = cs * wi - sn * wj;
          w(r, j) = sn * wi + cs * wj;
        }
      }
    }
  }
  if (!converged)
    throw std::runtime_error("singular_values: Jacobi sweeps failed to converge");

  std::vector<double> values(static_cast<std::size_t>(cols));
  for (Eigen::Index i = 0; i < cols; ++i)
    values[static_cast<std::size_t>(i)] = w.col(i).norm();
  std::sort(values.begin(), values.end(), std::greater<double>());
  return values;
}

}  // namespace svi
