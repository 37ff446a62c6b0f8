#pragma once

// Piecewise-linear paths in a product of SPD cones, with the length functional
//
//   L = sum_segments int_0^1 sqrt( sum_x w_x tr((c_x^-1 h_x)^2) det(c_x)^p ) dt,
//   c_x(t) = (1-t) P_x + t Q_x,  h_x = Q_x - P_x,
//
// and an analytic gradient with respect to the interior vertices. With a single node and
// p = 1 this is the det-weighted pointwise metric; with one node per grid cell, p = 1/2 and
// w_x = cell volume it is the quadrature of the L2 metric.

#include "ebinlab/linalg.hpp"
#include "ebinlab/quadrature.hpp"

#include <limits>
#include <vector>

namespace ebinlab {

template <typename Scalar>
using Vertex = std::vector<Mat<Scalar>>;

template <typename Scalar>
struct PolylineProblem {
  int dim = 2;
  Scalar det_exponent = Scalar(1);
  std::vector<Scalar> node_weight;
};

struct PolylineOptions {
  int gauss_points = 8;
  int max_iterations = 100;
  double rel_tol = 1e-4;
};

template <typename Scalar>
struct PolylineResult {
  Scalar length;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

template <typename Scalar>
struct SegmentEval {
  Scalar speed_sq = 0;
  bool admissible = true;
};

/// Speed squared of segment P->Q at parameter t, optionally accumulating per-node partials
/// d(speed^2)/dc and d(speed^2)/dh.
template <typename Scalar>
SegmentEval<Scalar> segmentSpeedSq(const PolylineProblem<Scalar>& prob, const Vertex<Scalar>& p,
                                   const Vertex<Scalar>& q, Scalar t, std::vector<Mat<Scalar>>* dc,
                                   std::vector<Mat<Scalar>>* dh) {
  SegmentEval<Scalar> out;
  const int n = prob.dim;
  const Mat<Scalar> eye = Mat<Scalar>::Identity(n, n);
  for (std::size_t x = 0; x < p.size(); ++x) {
    const Mat<Scalar> h = q[x] - p[x];
    if (dc) (*dc)[x].setZero(n, n), (*dh)[x].setZero(n, n);
    if ((h.array() == Scalar(0)).all()) continue;
    const Mat<Scalar> c = (Scalar(1) - t) * p[x] + t * q[x];
    auto llt = choleskyOf<Scalar>(c);
    if (!llt) {
      out.admissible = false;
      out.speed_sq = std::numeric_limits<Scalar>::infinity();
      return out;
    }
    const Scalar det = choleskyDet(*llt);
    const Scalar weight = prob.det_exponent == Scalar(1) ? det
                          : prob.det_exponent == Scalar(0.5) ? std::sqrt(det)
                                                               : std::pow(det, prob.det_exponent);
    const Mat<Scalar> xm = llt->solve(h);
    const Scalar tr = (xm * xm).trace();
    out.speed_sq += prob.node_weight[x] * tr * weight;
    if (dc) {
      const Mat<Scalar> ci = llt->solve(eye);
      const Mat<Scalar> a = xm * ci;  // c^-1 h c^-1
      const Scalar w = prob.node_weight[x] * weight;
      (*dh)[x] = Scalar(2) * w * a;
      (*dc)[x] = w * (Scalar(-2) * a * h * ci + tr * prob.det_exponent * ci);
    }
  }
  return out;
}

}  // namespace detail

template <typename Scalar>
Scalar polylineLength(const PolylineProblem<Scalar>& prob, const std::vector<Vertex<Scalar>>& vertices,
                      int gauss_points = 8) {
  const auto rule = gaussLegendre01<Scalar>(gauss_points);
  Scalar total(0);
  for (std::size_t s = 0; s + 1 < vertices.size(); ++s) {
    for (int i = 0; i < gauss_points; ++i) {
      const auto ev =
          detail::segmentSpeedSq<Scalar>(prob, vertices[s], vertices[s + 1], rule.first[i], nullptr, nullptr);
      if (!ev.admissible) return std::numeric_limits<Scalar>::infinity();
      total += rule.second[i] * std::sqrt(ev.speed_sq);
    }
  }
  return total;
}

/// Length and its Frobenius gradient with respect to every vertex (endpoint entries included).
template <typename Scalar>
Scalar polylineGradient(const PolylineProblem<Scalar>& prob, const std::vector<Vertex<Scalar>>& vertices,
                        std::vector<Vertex<Scalar>>& grad, int gauss_points = 8) {
  const auto rule = gaussLegendre01<Scalar>(gauss_points);
  const std::size_t nodes = vertices.front().size();
  const int n = prob.dim;
  grad.assign(vertices.size(), Vertex<Scalar>(nodes, Mat<Scalar>::Zero(n, n)));
  std::vector<Mat<Scalar>> dc(nodes), dh(nodes);
  Scalar total(0);
  for (std::size_t s = 0; s + 1 < vertices.size(); ++s) {
    for (int i = 0; i < gauss_points; ++i) {
      const Scalar t = rule.first[i];
      const auto ev = detail::segmentSpeedSq<Scalar>(prob, vertices[s], vertices[s + 1], t, &dc, &dh);
      if (!ev.admissible) return std::numeric_limits<Scalar>::infinity();
      const Scalar speed = std::sqrt(ev.speed_sq);
      total += rule.second[i] * speed;
      if (speed == Scalar(0)) continue;
      const Scalar scale = rule.second[i] / (Scalar(2) * speed);
      for (std::size_t x = 0; x < nodes; ++x) {
        grad[s][x] += scale * ((Scalar(1) - t) * dc[x] - dh[x]);
        grad[s + 1][x] += scale * (t * dc[x] + dh[x]);
      }
    }
  }
  return total;
}

/// Preconditioned gradient descent with Armijo backtracking on the interior vertices.
/// The direction -X G X is the gradient for the affine-invariant geometry of each cone,
/// which keeps steps proportionate for nearly singular vertices.
template <typename Scalar>
PolylineResult<Scalar> optimizePolyline(const PolylineProblem<Scalar>& prob, std::vector<Vertex<Scalar>>& vertices,
                                        const PolylineOptions& opts = {}) {
  PolylineResult<Scalar> result;
  std::vector<Vertex<Scalar>> grad;
  Scalar current = polylineGradient(prob, vertices, grad, opts.gauss_points);
  result.length = current;
  if (vertices.size() <= 2 || !(current < std::numeric_limits<Scalar>::infinity())) {
    result.converged = vertices.size() <= 2;
    return result;
  }
  Scalar step(1);
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    result.iterations = iter + 1;
    std::vector<Vertex<Scalar>> direction(vertices.size());
    Scalar slope(0);
    for (std::size_t v = 1; v + 1 < vertices.size(); ++v) {
      direction[v].resize(vertices[v].size());
      for (std::size_t x = 0; x < vertices[v].size(); ++x) {
        const Mat<Scalar>& xv = vertices[v][x];
        direction[v][x] = -(xv * grad[v][x] * xv);
        slope += (grad[v][x] * xv * grad[v][x] * xv).trace();
      }
    }
    if (!(slope > Scalar(0))) {
      result.converged = true;
      break;
    }
    bool accepted = false;
    std::vector<Vertex<Scalar>> trial = vertices;
    Scalar trial_len(0);
    for (int bt = 0; bt < 40; ++bt) {
      for (std::size_t v = 1; v + 1 < vertices.size(); ++v)
        for (std::size_t x = 0; x < vertices[v].size(); ++x) {
          const Mat<Scalar> next = vertices[v][x] + step * direction[v][x];
          trial[v][x] = Scalar(0.5) * (next + next.transpose());
        }
      trial_len = polylineLength(prob, trial, opts.gauss_points);
      if (trial_len <= current - Scalar(1e-4) * step * slope) {
        accepted = true;
        break;
      }
      step /= 2;
    }
    if (!accepted) {
      result.converged = true;
      break;
    }
    const Scalar improvement = current - trial_len;
    vertices = std::move(trial);
    current = polylineGradient(prob, vertices, grad, opts.gauss_points);
    result.length = current;
    step *= 2;
    if (improvement < Scalar(opts.rel_tol) * current) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace ebinlab
