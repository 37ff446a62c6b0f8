#pragma once

#include "ebinlab/sym_mat.hpp"

#include <random>

namespace test {

/// Symmetric matrix with standard normal entries.
inline ebinlab::SymMat<double> randomSym(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  ebinlab::SymMat<double> m(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) m.set(i, j, normal(rng));
  return m;
}

/// A A^T + 0.1 I with A standard normal.
inline ebinlab::SymMat<double> randomSpd(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = normal(rng);
  Eigen::MatrixXd m = a * a.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
  return ebinlab::SymMat<double>::fromMatrix(m);
}

/// Inverse through the adjugate (explicit cofactors, n <= 3).
inline Eigen::MatrixXd adjugateInverse(const Eigen::MatrixXd& g) {
  const int n = static_cast<int>(g.rows());
  if (n == 1) return Eigen::MatrixXd::Constant(1, 1, 1 / g(0, 0));
  Eigen::MatrixXd adj(n, n);
  if (n == 2) {
    adj << g(1, 1), -g(0, 1), -g(1, 0), g(0, 0);
    return adj / (g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0));
  }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const int r0 = (j + 1) % 3, r1 = (j + 2) % 3, c0 = (i + 1) % 3, c1 = (i + 2) % 3;
      adj(i, j) = g(r0, c0) * g(r1, c1) - g(r0, c1) * g(r1, c0);
    }
  const double det = g(0, 0) * adj(0, 0) + g(0, 1) * adj(1, 0) + g(0, 2) * adj(2, 0);
  return adj / det;
}

}  // namespace test
