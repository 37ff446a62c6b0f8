#pragma once

#include "ebinlab/sym_mat.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <optional>

namespace ebinlab {

/// Ascending eigenvalues of a symmetric matrix. Closed form for n <= 2 (computed so that
/// lambda_min = det / lambda_max keeps full relative accuracy for wildly scaled entries),
/// Eigen's self-adjoint solver for n = 3.
template <typename Scalar>
Vec<Scalar> symEigenvalues(const SymMat<Scalar>& m) {
  using std::abs;
  using std::sqrt;
  const int n = m.dim();
  Vec<Scalar> ev(n);
  if (n == 1) {
    ev(0) = m(0, 0);
  } else if (n == 2) {
    const Scalar a = m(0, 0), b = m(0, 1), c = m(1, 1);
    const Scalar half_diff = (a - c) / 2;
    const Scalar mean = (a + c) / 2;
    const Scalar radius = std::hypot(half_diff, b);
    if (b == Scalar(0)) {
      ev(0) = std::min(a, c);
      ev(1) = std::max(a, c);
    } else if (mean >= 0) {
      ev(1) = mean + radius;
      ev(0) = (a * c - b * b) / ev(1);
    } else {
      ev(0) = mean - radius;
      ev(1) = (a * c - b * b) / ev(0);
    }
  } else {
    Eigen::SelfAdjointEigenSolver<Mat<Scalar>> solver(m.matrix(), Eigen::EigenvaluesOnly);
    ev = solver.eigenvalues();
  }
  return ev;
}

/// det via cofactor expansion; exact algebraic form for n <= 3.
template <typename Scalar>
Scalar symDeterminant(const SymMat<Scalar>& m) {
  switch (m.dim()) {
    case 1:
      return m(0, 0);
    case 2:
      return m(0, 1) == Scalar(0) ? m(0, 0) * m(1, 1) : m(0, 0) * m(1, 1) - m(0, 1) * m(0, 1);
    default:
      return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(1, 2)) - m(0, 1) * (m(0, 1) * m(2, 2) - m(1, 2) * m(0, 2)) +
             m(0, 2) * (m(0, 1) * m(1, 2) - m(1, 1) * m(0, 2));
  }
}

/// Applies a scalar function to the spectrum: V f(L) V^T.
template <typename Scalar, typename F>
Mat<Scalar> symFunction(const Mat<Scalar>& m, F&& f) {
  if (m.isDiagonal(Scalar(0))) {
    Mat<Scalar> out = Mat<Scalar>::Zero(m.rows(), m.cols());
    for (int i = 0; i < m.rows(); ++i) out(i, i) = f(m(i, i));
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> solver(m);
  if (solver.info() != Eigen::Success) throw RangeError("symFunction: eigensolver failed");
  Vec<Scalar> mapped = solver.eigenvalues().unaryExpr(f);
  return solver.eigenvectors() * mapped.asDiagonal() * solver.eigenvectors().transpose();
}

template <typename Scalar>
Mat<Scalar> symSqrt(const Mat<Scalar>& m) {
  return symFunction<Scalar>(m, [](Scalar x) { return std::sqrt(std::max(x, Scalar(0))); });
}

template <typename Scalar>
Mat<Scalar> symInvSqrt(const Mat<Scalar>& m) {
  return symFunction<Scalar>(m, [](Scalar x) { return Scalar(1) / std::sqrt(x); });
}

template <typename Scalar>
Mat<Scalar> symExp(const Mat<Scalar>& m) {
  return symFunction<Scalar>(m, [](Scalar x) { return std::exp(x); });
}

template <typename Scalar>
Mat<Scalar> symLog(const Mat<Scalar>& m) {
  return symFunction<Scalar>(m, [](Scalar x) { return std::log(x); });
}

/// Cholesky factor of a positive definite matrix; empty when the factorization fails
/// or a pivot is not strictly positive.
template <typename Scalar>
std::optional<Eigen::LLT<Mat<Scalar>>> choleskyOf(const Mat<Scalar>& m) {
  Eigen::LLT<Mat<Scalar>> llt(m);
  if (llt.info() != Eigen::Success) return std::nullopt;
  const auto diag = llt.matrixLLT().diagonal();
  for (int i = 0; i < diag.size(); ++i)
    if (!(diag(i) > Scalar(0))) return std::nullopt;
  return llt;
}

/// det from a Cholesky factor (product of squared pivots).
template <typename Scalar>
Scalar choleskyDet(const Eigen::LLT<Mat<Scalar>>& llt) {
  Scalar p(1);
  const auto diag = llt.matrixLLT().diagonal();
  for (int i = 0; i < diag.size(); ++i) p *= diag(i);
  return p * p;
}

}  // namespace ebinlab
