#pragma once

// Distance on the pointwise cone under the det-weighted scalar product
// <h,k>^0 = tr(g^-1 h g^-1 k) det(gref^-1 g), whose completion identifies the whole
// boundary (all singular semidefinite matrices) with a single point.

#include "ebinlab/polyline.hpp"
#include "ebinlab/spd.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ebinlab {

struct ThetaOptions {
  int interior_nodes = 16;
  int max_iterations = 200;
  double rel_tol = 1e-7;
  Tolerances tol;
};

enum class ThetaRoute { Identical, Direct, Boundary };

inline const char* label(ThetaRoute r) {
  switch (r) {
    case ThetaRoute::Identical: return "identical";
    case ThetaRoute::Direct: return "direct";
    default: return "boundary";
  }
}

template <typename Scalar>
struct ThetaEstimate {
  Scalar value = 0;     // min(direct, boundary): an upper bound on theta
  Scalar lower = 0;     // certified closed-form lower bound
  Scalar direct = 0;    // optimized interior path (+inf when unavailable)
  Scalar boundary = 0;  // through the collapsed point
  Scalar error = 0;     // quadrature error estimate of the direct route
  ThetaRoute route = ThetaRoute::Identical;
  bool certified = true;
  int iterations = 0;
};

/// det(gref^-1 c), clamped at zero for semidefinite c.
template <typename Scalar>
Scalar relativeDet(const SymMat<Scalar>& gref, const SymMat<Scalar>& c) {
  return std::max(symDeterminant(c), Scalar(0)) / symDeterminant(gref);
}

/// Length of the conformal collapse f(t) c, f: 1 -> 0: (2/sqrt(n)) sqrt(det(gref^-1 c)).
template <typename Scalar>
Scalar collapseLength(const SpdPoint<Scalar>& gref, const PsdPoint<Scalar>& c) {
  const Scalar n(c.dim());
  return Scalar(2) / std::sqrt(n) * std::sqrt(relativeDet(gref.mat(), c.mat()));
}

/// Lower bound from two elementary estimates: the sqrt-det Lipschitz bound
/// (2/sqrt(n)) |sqrt(det A) - sqrt(det B)| and, for positive definite a, b with
/// det A, det B >= delta, min{ sqrt(n)(1 - 1/sqrt 2) sqrt(delta), sqrt(delta/2) d_x(a,b) }.
template <typename Scalar>
Scalar thetaElementaryBound(const SpdPoint<Scalar>& gref, const PsdPoint<Scalar>& a, const PsdPoint<Scalar>& b) {
  if (a.dim() != b.dim() || a.dim() != gref.dim()) throw ShapeMismatchError("theta: dimension mismatch");
  const Scalar n(a.dim());
  const Scalar da = relativeDet(gref.mat(), a.mat());
  const Scalar db = relativeDet(gref.mat(), b.mat());
  Scalar bound = Scalar(2) / std::sqrt(n) * std::abs(std::sqrt(da) - std::sqrt(db));
  const Scalar delta = std::min(da, db);
  if (delta > Scalar(0) && choleskyOf<Scalar>(a.mat().matrix()) && choleskyOf<Scalar>(b.mat().matrix())) {
    Tolerances loose;
    loose.eps_pd = 0.0;
    try {
      const Scalar dx = spdDistance(SpdPoint<Scalar>(a.mat(), loose), SpdPoint<Scalar>(b.mat(), loose));
      const Scalar c = std::sqrt(n) * (Scalar(1) - Scalar(1) / std::numbers::sqrt2_v<Scalar>);
      bound = std::max(bound, std::min(c * std::sqrt(delta), std::sqrt(delta / 2) * dx));
    } catch (const DegeneratePointError&) {
      // rank-deficient input that rounded to a factorable matrix: keep the sqrt-det bound
    }
  }
  return bound;
}

/// Spectral reduction of a pair. Along any path c_t the weighted speed is at least
/// e^{S/2} |u'| where u = log-eigenvalues of a^-1 c_t and S = sum(u) + log det(gref^-1 a);
/// the metric e^S |du|^2 is a flat cone dr^2 + (n/4) r^2 |dv|^2 with r = (2/sqrt n) e^{S/2}
/// and v the trace-free part of u. Its distance is attained by a path that is diagonal in
/// the relative eigenbasis, so this value is theta itself.
template <typename Scalar>
struct ThetaCone {
  Scalar value = 0;
  Scalar r0 = 0, r1 = 0;  // cone radii of the endpoints
  Scalar angle = 0;       // opening angle, capped at pi (the geodesic then runs through the apex)
  Vec<Scalar> log_mu;     // log relative eigenvalues (positive definite pairs only)
};

template <typename Scalar>
ThetaCone<Scalar> thetaCone(const SpdPoint<Scalar>& gref, const PsdPoint<Scalar>& a, const PsdPoint<Scalar>& b) {
  if (a.dim() != b.dim() || a.dim() != gref.dim()) throw ShapeMismatchError("theta: dimension mismatch");
  const int dim = a.dim();
  const Scalar n(dim), pi = std::numbers::pi_v<Scalar>;
  ThetaCone<Scalar> cone;
  cone.r0 = Scalar(2) / std::sqrt(n) * std::sqrt(relativeDet(gref.mat(), a.mat()));
  cone.r1 = Scalar(2) / std::sqrt(n) * std::sqrt(relativeDet(gref.mat(), b.mat()));
  cone.angle = pi;
  if (cone.r0 > Scalar(0) && cone.r1 > Scalar(0) && choleskyOf<Scalar>(a.mat().matrix()) &&
      choleskyOf<Scalar>(b.mat().matrix())) {
    const Vec<Scalar> mu = relativeEigenvalues(a.mat(), b.mat());
    if ((mu.array() > Scalar(0)).all()) {
      cone.log_mu = mu.array().log().matrix();
      const Scalar mean = cone.log_mu.sum() / n;
      const Scalar spread = (cone.log_mu.array() - mean).matrix().norm();
      cone.angle = std::min(std::sqrt(n) / 2 * spread, pi);
    }
  }
  const Scalar half = std::sin(cone.angle / 2);
  cone.value = std::sqrt((cone.r0 - cone.r1) * (cone.r0 - cone.r1) + 4 * cone.r0 * cone.r1 * half * half);
  return cone;
}

/// Certified lower bound on theta: the spectral cone distance (never below the elementary bounds).
template <typename Scalar>
Scalar thetaLowerBound(const SpdPoint<Scalar>& gref, const PsdPoint<Scalar>& a, const PsdPoint<Scalar>& b) {
  return std::max(thetaCone(gref, a, b).value, thetaElementaryBound(gref, a, b));
}

namespace detail {

/// Samples of the cone geodesic a -> b (diagonal in the relative eigenbasis) at t = i/segments.
template <typename Scalar>
std::vector<Vertex<Scalar>> coneGeodesicVertices(const SymMat<Scalar>& a, const SymMat<Scalar>& b,
                                                 const ThetaCone<Scalar>& cone, int segments) {
  const int dim = a.dim();
  const Scalar n(dim);
  const auto llt = factorOrThrow(a, "theta");
  const Mat<Scalar> l = llt.matrixL();
  const Mat<Scalar> linv = l.template triangularView<Eigen::Lower>().solve(Mat<Scalar>::Identity(dim, dim));
  const Mat<Scalar> m = linv * b.matrix() * linv.transpose();
  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> solver(Scalar(0.5) * (m + m.transpose()));
  const Vec<Scalar> log_mu = solver.eigenvalues().array().log().matrix();
  const Scalar mean = log_mu.sum() / n;
  const Vec<Scalar> v1 = (log_mu.array() - mean).matrix();
  const Scalar spread = v1.norm();
  const Scalar scale = std::sqrt(n) / 2;

  // unfold the cone into a plane sector; the geodesic is a straight segment there
  const Scalar r0 = Scalar(2) / std::sqrt(n), r1 = r0 * std::exp(log_mu.sum() / 2);
  const Scalar x1 = r1 * std::cos(cone.angle), y1 = r1 * std::sin(cone.angle);
  std::vector<Vertex<Scalar>> out(segments + 1);
  out.front() = {a.matrix()};
  out.back() = {b.matrix()};
  for (int i = 1; i < segments; ++i) {
    const Scalar t = Scalar(i) / Scalar(segments);
    const Scalar x = (1 - t) * r0 + t * x1, y = t * y1;
    const Scalar r = std::hypot(x, y), psi = std::atan2(y, x);
    const Scalar sum_u = 2 * std::log(r / r0);
    Vec<Scalar> u = Vec<Scalar>::Constant(dim, sum_u / n);
    if (spread > Scalar(0)) u += (psi / scale / spread) * v1;
    const Mat<Scalar> d = u.array().exp().matrix().asDiagonal();
    const Mat<Scalar> c = l * solver.eigenvectors() * d * solver.eigenvectors().transpose() * l.transpose();
    out[i] = {Scalar(0.5) * (c + c.transpose())};
  }
  return out;
}

}  // namespace detail

/// theta distance estimate: min of an optimized piecewise-linear interior path and the
/// boundary route collapse(a) + collapse(b). The interior path starts from samples of the
/// spectral cone geodesic; when either endpoint is singular the boundary route is exact.
template <typename Scalar>
ThetaEstimate<Scalar> thetaEstimate(const SpdPoint<Scalar>& gref, const PsdPoint<Scalar>& a, const PsdPoint<Scalar>& b,
                                    const ThetaOptions& opts = {}) {
  if (a.dim() != b.dim() || a.dim() != gref.dim()) throw ShapeMismatchError("theta_distance: dimension mismatch");
  ThetaEstimate<Scalar> est;
  if (a.mat() == b.mat()) return est;

  const Scalar inf = std::numeric_limits<Scalar>::infinity();
  est.boundary = collapseLength(gref, a) + collapseLength(gref, b);
  const auto cone = thetaCone(gref, a, b);
  est.lower = std::max(cone.value, thetaElementaryBound(gref, a, b));
  est.direct = inf;

  const Scalar eps_pd(opts.tol.eps_pd);
  const Scalar pi = std::numbers::pi_v<Scalar>;
  const bool interior = symEigenvalues(a.mat())(0) > eps_pd && symEigenvalues(b.mat())(0) > eps_pd;
  if (interior && cone.angle < pi) {
    PolylineProblem<Scalar> prob;
    prob.dim = a.dim();
    prob.det_exponent = Scalar(1);
    prob.node_weight = {Scalar(1) / symDeterminant(gref.mat())};
    auto vertices = detail::coneGeodesicVertices(a.mat(), b.mat(), cone, opts.interior_nodes + 1);
    PolylineOptions popts;
    popts.max_iterations = opts.max_iterations;
    popts.rel_tol = opts.rel_tol;
    const auto res = optimizePolyline(prob, vertices, popts);
    est.iterations = res.iterations;
    const Scalar fine = polylineLength(prob, vertices, 16);
    est.error = std::abs(fine - res.length);
    est.direct = std::max(fine, res.length);
    est.certified = res.converged;
  }

  if (est.direct < est.boundary) {
    est.value = est.direct;
    est.route = ThetaRoute::Direct;
  } else {
    est.value = est.boundary;
    est.route = ThetaRoute::Boundary;
    est.certified = true;
  }
  return est;
}

template <typename Scalar>
Scalar thetaDistance(const SpdPoint<Scalar>& gref, const PsdPoint<Scalar>& a, const PsdPoint<Scalar>& b,
                     const ThetaOptions& opts = {}) {
  return thetaEstimate(gref, a, b, opts).value;
}

}  // namespace ebinlab
