#pragma once

// Pointwise geometry of the cone of positive definite symmetric matrices.

#include "ebinlab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace ebinlab {

/// Positive definite symmetric matrix; constructor-checked (lambda_min > eps_pd).
template <typename Scalar>
class SpdPoint {
 public:
  explicit SpdPoint(SymMat<Scalar> m, const Tolerances& tol = {}) : mat_(std::move(m)) {
    if (!mat_.allFinite()) throw DegeneratePointError("SpdPoint: non-finite entry");
    const Scalar lmin = symEigenvalues(mat_)(0);
    if (!(lmin > Scalar(tol.eps_pd)))
      throw DegeneratePointError("SpdPoint: lambda_min = " + std::to_string(static_cast<double>(lmin)) +
                                 " is not above eps_pd");
  }

  const SymMat<Scalar>& mat() const { return mat_; }
  int dim() const { return mat_.dim(); }

 private:
  SymMat<Scalar> mat_;
};

/// Positive semidefinite symmetric matrix (lambda_min >= -eps_psd); a point of the closed cone.
template <typename Scalar>
class PsdPoint {
 public:
  explicit PsdPoint(SymMat<Scalar> m, const Tolerances& tol = {}) : mat_(std::move(m)) {
    if (!mat_.allFinite()) throw PreconditionError("PsdPoint: non-finite entry");
    const Scalar lmin = symEigenvalues(mat_)(0);
    if (lmin < -Scalar(tol.eps_psd)) throw PreconditionError("PsdPoint: matrix is indefinite");
  }
  PsdPoint(const SpdPoint<Scalar>& p) : mat_(p.mat()) {}  // NOLINT: every SPD point is PSD

  const SymMat<Scalar>& mat() const { return mat_; }
  int dim() const { return mat_.dim(); }

 private:
  SymMat<Scalar> mat_;
};

template <typename Scalar>
struct EigenSummary {
  Scalar lambda_min;
  Scalar lambda_max;
  Scalar det;
  Scalar sqrt_det;
};

template <typename Scalar>
EigenSummary<Scalar> eigenSummary(const SymMat<Scalar>& m) {
  const Vec<Scalar> ev = symEigenvalues(m);
  Scalar det = ev.prod();
  return {ev(0), ev(ev.size() - 1), det, std::sqrt(std::max(det, Scalar(0)))};
}

namespace detail {

template <typename Scalar>
Eigen::LLT<Mat<Scalar>> factorOrThrow(const SymMat<Scalar>& g, const char* where) {
  auto llt = choleskyOf<Scalar>(g.matrix());
  if (!llt) throw DegeneratePointError(std::string(where) + ": base point is not positive definite");
  return *llt;
}

}  // namespace detail

/// <h, k>_g = tr(g^-1 h g^-1 k).
template <typename Scalar>
Scalar inner(const SpdPoint<Scalar>& g, const SymMat<Scalar>& h, const SymMat<Scalar>& k) {
  const auto llt = detail::factorOrThrow(g.mat(), "inner");
  const Mat<Scalar> x = llt.solve(h.matrix());
  const Mat<Scalar> y = llt.solve(k.matrix());
  return (x * y).trace();
}

/// Determinant-weighted scalar product <h, k>_g * det(gref^-1 g).
template <typename Scalar>
Scalar innerWeighted(const SpdPoint<Scalar>& gref, const SpdPoint<Scalar>& g, const SymMat<Scalar>& h,
                     const SymMat<Scalar>& k) {
  const auto ref = detail::factorOrThrow(gref.mat(), "innerWeighted");
  const auto base = detail::factorOrThrow(g.mat(), "innerWeighted");
  return inner(g, h, k) * (choleskyDet(base) / choleskyDet(ref));
}

/// Christoffel symbol of <.,.>: -1/2 (h g^-1 k + k g^-1 h).
template <typename Scalar>
SymMat<Scalar> christoffel(const SpdPoint<Scalar>& g, const SymMat<Scalar>& h, const SymMat<Scalar>& k) {
  const auto llt = detail::factorOrThrow(g.mat(), "christoffel");
  const Mat<Scalar> hm = h.matrix();
  const Mat<Scalar> km = k.matrix();
  const Mat<Scalar> a = hm * llt.solve(km);
  return SymMat<Scalar>::fromMatrix(Scalar(-0.5) * (a + a.transpose()));
}

/// Geodesic g0 exp(t g0^-1 h), evaluated in the symmetric form g0^1/2 exp(t g0^-1/2 h g0^-1/2) g0^1/2.
template <typename Scalar>
SpdPoint<Scalar> spdGeodesic(const SpdPoint<Scalar>& g0, const SymMat<Scalar>& h, Scalar t,
                             const Tolerances& tol = {}) {
  if (t == Scalar(0)) return g0;
  const Mat<Scalar> root = symSqrt<Scalar>(g0.mat().matrix());
  const Mat<Scalar> inv_root = symInvSqrt<Scalar>(g0.mat().matrix());
  const Mat<Scalar> inner_arg = t * (inv_root * h.matrix() * inv_root);
  const Mat<Scalar> e = symExp<Scalar>(SymMat<Scalar>::fromMatrix(inner_arg).matrix());
  const Mat<Scalar> out = root * e * root;
  if (!out.allFinite()) throw RangeError("spdGeodesic: matrix exponential overflow");
  Tolerances relaxed = tol;
  relaxed.eps_pd = 0.0;
  return SpdPoint<Scalar>(SymMat<Scalar>::fromMatrix(out), relaxed);
}

/// Eigenvalues of a^-1 b (ascending), via the congruence L^-1 b L^-T with a = L L^T.
template <typename Scalar>
Vec<Scalar> relativeEigenvalues(const SymMat<Scalar>& a, const SymMat<Scalar>& b) {
  const auto llt = detail::factorOrThrow(a, "relativeEigenvalues");
  const Mat<Scalar> l = llt.matrixL();
  Mat<Scalar> x = l.template triangularView<Eigen::Lower>().solve(b.matrix());
  Mat<Scalar> m = l.template triangularView<Eigen::Lower>().solve(x.transpose());
  return symEigenvalues(SymMat<Scalar>::fromMatrix(m));
}

/// Riemannian distance of <.,.>: || log(a^-1/2 b a^-1/2) ||_F.
/// Arguments are put in a canonical order first, so d(a,b) and d(b,a) agree bitwise.
template <typename Scalar>
Scalar spdDistance(const SpdPoint<Scalar>& a, const SpdPoint<Scalar>& b) {
  if (a.dim() != b.dim()) throw ShapeMismatchError("spdDistance: dimension mismatch");
  const auto& pa = a.mat().packed();
  const auto& pb = b.mat().packed();
  const bool swap = std::lexicographical_compare(pb.data(), pb.data() + pb.size(), pa.data(), pa.data() + pa.size());
  const Vec<Scalar> ev = swap ? relativeEigenvalues(b.mat(), a.mat()) : relativeEigenvalues(a.mat(), b.mat());
  Scalar sum(0);
  for (int i = 0; i < ev.size(); ++i) {
    if (!(ev(i) > Scalar(0))) throw DegeneratePointError("spdDistance: non-positive relative eigenvalue");
    const Scalar l = std::log(ev(i));
    sum += l * l;
  }
  return std::sqrt(sum);
}

// ---------------------------------------------------------------------------
// Dichotomy for theta-Cauchy point sequences: either det -> 0 or convergence in the cone.

enum class PointClass { Collapsed, Converged, Undecided };

inline const char* label(PointClass c) {
  switch (c) {
    case PointClass::Collapsed: return "collapsed";
    case PointClass::Converged: return "converged";
    default: return "undecided";
  }
}

struct DichotomyOptions {
  double delta_num = 1e-6;      // numerical surrogate for "det arbitrarily small"
  double collapse_ratio = 1e-2; // tail det must drop below this fraction of the head det
  double converge_tol = 1e-3;   // max d_x between tail terms and the last term
  int tail_window = 0;          // 0: max(3, ceil(len / 3))
};

inline int tailWindow(int len, int requested) {
  const int w = requested > 0 ? requested : std::max(3, (len + 2) / 3);
  return std::min(w, len);
}

/// Classifies a finite sequence of symmetric matrices (det taken against the Euclidean reference).
template <typename Scalar>
PointClass classifyPointSequence(const std::vector<SymMat<Scalar>>& seq, const DichotomyOptions& opts = {}) {
  const int len = static_cast<int>(seq.size());
  if (len < 3) throw PreconditionError("classifyPointSequence: need at least 3 terms");
  const int window = tailWindow(len, opts.tail_window);
  const int tail_begin = len - window;

  std::vector<Scalar> det(len);
  for (int k = 0; k < len; ++k) det[k] = std::max(symDeterminant(seq[k]), Scalar(0));

  const Scalar head_max = tail_begin > 0 ? *std::max_element(det.begin(), det.begin() + tail_begin) : det.front();
  const Scalar tail_max = *std::max_element(det.begin() + tail_begin, det.end());
  bool tail_nonincreasing = true;
  for (int k = tail_begin + 1; k < len; ++k) tail_nonincreasing = tail_nonincreasing && det[k] <= det[k - 1];

  const Scalar delta(opts.delta_num);
  const bool below_threshold = tail_max < delta && (tail_nonincreasing || det.back() < delta);
  const bool strong_drop = head_max > Scalar(0) && tail_max <= Scalar(opts.collapse_ratio) * head_max;
  if (below_threshold || strong_drop || det.back() == Scalar(0)) return PointClass::Collapsed;

  Scalar tail_min = *std::min_element(det.begin() + tail_begin, det.end());
  if (tail_min < delta) return PointClass::Undecided;

  Tolerances loose;
  loose.eps_pd = 0.0;
  try {
    const SpdPoint<Scalar> last(seq.back(), loose);
    Scalar variation(0);
    for (int k = tail_begin; k < len - 1; ++k) variation = std::max(variation, spdDistance(SpdPoint<Scalar>(seq[k], loose), last));
    if (variation < Scalar(opts.converge_tol)) return PointClass::Converged;
  } catch (const DegeneratePointError&) {
    return PointClass::Undecided;
  }
  return PointClass::Undecided;
}

}  // namespace ebinlab
