#pragma once

// One-parameter families of metric fields t in [0, 1] and their L2 length
//   L = int_0^1 ( sum_x tr((g_t^-1 g_t')^2) sqrt(det g_t) cell )^{1/2} dt.

#include "ebinlab/field.hpp"

#include <functional>
#include <limits>
#include <queue>
#include <variant>

namespace ebinlab {

template <typename Scalar>
struct LinearPath {
  TensorField<Scalar> g0, g1;
};

/// (1 + n t rho / 4)^{4/n} g0.
template <typename Scalar>
struct ConformalGeodesicPath {
  TensorField<Scalar> g0;
  ScalarField<Scalar> rho;
};

/// psi((1 - t) sigma + t tau) with psi(s) = (1 + n s / 4)^{4/n} g0.
template <typename Scalar>
struct ConformalExpPath {
  TensorField<Scalar> g0;
  ScalarField<Scalar> sigma_from, sigma_to;
};

/// g0 -> f g0 -> f g1 -> g1 on the thirds of [0, 1], f the cutoff profile of E.
template <typename Scalar>
struct ThreePiecePath {
  TensorField<Scalar> g0, g1;
  RegionMask region;
  Scalar s = 1;
  Scalar w = 0;
  ScalarField<Scalar> f;
};

/// Piecewise-linear interpolation of samples at increasing t (first 0, last 1).
template <typename Scalar>
struct SampledPath {
  std::vector<Scalar> t;
  std::vector<TensorField<Scalar>> fields;
};

template <typename Scalar>
using MetricPath = std::variant<LinearPath<Scalar>, ConformalGeodesicPath<Scalar>, ConformalExpPath<Scalar>,
                                ThreePiecePath<Scalar>, SampledPath<Scalar>>;

template <typename Scalar>
const char* kindName(const MetricPath<Scalar>& p) {
  static const char* names[] = {"linear", "conformal_geodesic", "conformal_exp", "three_piece", "sampled"};
  return names[p.index()];
}

// ---------------------------------------------------------------------------
// Constructors

/// C(n): sqrt(n) for n >= 4, sqrt(n) * int_0^1 (1-t)^{n/4-1} dt = 4/sqrt(n) for n <= 3.
inline double collapseConstant(int n) {
  if (n < 1) throw PreconditionError("collapseConstant: n must be positive");
  return n >= 4 ? std::sqrt(double(n)) : 4.0 / std::sqrt(double(n));
}

namespace detail {

template <typename Scalar>
Scalar conformalFactor(int n, Scalar sigma) {
  const Scalar base = Scalar(1) + Scalar(n) * sigma / Scalar(4);
  return n == 2 ? base * base : n == 4 ? base : std::pow(base, Scalar(4) / Scalar(n));
}

template <typename Scalar>
void checkConformalDomain(int n, const ScalarField<Scalar>& sigma, Scalar t, const char* where) {
  for (std::size_t i = 0; i < sigma.values.size(); ++i)
    if (!(Scalar(1) + Scalar(n) * t * sigma.values[i] / Scalar(4) > Scalar(0)))
      throw PreconditionError(std::string(where) + ": 1 + (n/4) t rho <= 0 at node " + std::to_string(i));
}

}  // namespace detail

/// (1 + n t rho / 4)^{4/n} g0, nodewise.
template <typename Scalar>
MetricField<Scalar> conformalGeodesic(const MetricField<Scalar>& g0, const ScalarField<Scalar>& rho, Scalar t) {
  requireSameGrid(g0.grid(), rho.grid, "conformalGeodesic");
  const int n = g0.dim();
  detail::checkConformalDomain(n, rho, t, "conformalGeodesic");
  if (t == Scalar(0)) return g0;
  return MetricField<Scalar>::sample(
      g0.grid(), [&](std::size_t i) { return detail::conformalFactor(n, t * rho.values[i]) * g0[i]; }, g0.kind(),
      g0.tolerances());
}

/// exp_{g0}(sigma g0) = (1 + n sigma / 4)^{4/n} g0.
template <typename Scalar>
MetricField<Scalar> conformalExp(const MetricField<Scalar>& g0, const ScalarField<Scalar>& sigma) {
  return conformalGeodesic(g0, sigma, Scalar(1));
}

/// Periodic Chebyshev distance (in cells) from every node to the nearest member of `m`;
/// max() when `m` is empty.
inline std::vector<int> chebyshevDistance(const RegionMask& m) {
  const TorusGrid& g = m.grid();
  std::vector<int> dist(g.size(), std::numeric_limits<int>::max());
  std::queue<std::size_t> frontier;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (m[i]) dist[i] = 0, frontier.push(i);
  const int dim = g.dim();
  int neighbours = 1;
  for (int a = 0; a < dim; ++a) neighbours *= 3;
  while (!frontier.empty()) {
    const std::size_t i = frontier.front();
    frontier.pop();
    const auto idx = g.multiIndex(i);
    for (int c = 0; c < neighbours; ++c) {
      std::array<int, 3> j = idx;
      int code = c;
      bool self = true;
      for (int a = 0; a < dim; ++a) {
        const int off = code % 3 - 1;
        code /= 3;
        j[a] += off;
        self = self && off == 0;
      }
      if (self) continue;
      const std::size_t k = g.flatIndex(j);
      if (dist[k] > dist[i] + 1) dist[k] = dist[i] + 1, frontier.push(k);
    }
  }
  return dist;
}

/// Cutoff profile f with s <= f <= 1: f = s on the region eroded by w cells, f = 1 more than
/// w cells outside the region, and a smoothstep ramp in between.
template <typename Scalar>
ScalarField<Scalar> cutoffProfile(const RegionMask& region, Scalar s, Scalar w) {
  if (!(s >= Scalar(0) && s <= Scalar(1))) throw PreconditionError("cutoffProfile: s must lie in [0, 1]");
  if (!(w >= Scalar(0))) throw PreconditionError("cutoffProfile: w must be nonnegative");
  const auto outside = chebyshevDistance(region);
  const auto inside = chebyshevDistance(region.complement());
  const int big = std::numeric_limits<int>::max();
  return ScalarField<Scalar>::sample(region.grid(), [&](std::size_t i) -> Scalar {
    // signed distance: positive outside, <= 0 inside
    Scalar psi;
    if (region[i])
      psi = inside[i] == big ? -std::numeric_limits<Scalar>::infinity() : Scalar(1 - inside[i]);
    else
      psi = outside[i] == big ? std::numeric_limits<Scalar>::infinity() : Scalar(outside[i]);
    if (psi <= -w) return s;
    if (psi > w) return Scalar(1);
    const Scalar z = (psi + w) / (2 * w + 1);
    return s + (Scalar(1) - s) * z * z * (Scalar(3) - Scalar(2) * z);
  });
}

/// Nodes where g1 and g0 differ.
template <typename Scalar>
RegionMask carrier(const TensorField<Scalar>& g0, const TensorField<Scalar>& g1) {
  requireSameGrid(g0.grid(), g1.grid(), "carrier");
  return RegionMask::where(g0.grid(), [&](std::size_t i) { return !(g0[i] == g1[i]); });
}

template <typename Scalar>
MetricPath<Scalar> threePiecePath(const TensorField<Scalar>& g0, const TensorField<Scalar>& g1, const RegionMask& region,
                                  Scalar s, Scalar w) {
  requireSameGrid(g0.grid(), g1.grid(), "threePiecePath");
  requireSameGrid(g0.grid(), region.grid(), "threePiecePath");
  return ThreePiecePath<Scalar>{g0, g1, region, s, w, cutoffProfile(region, s, w)};
}

/// Straight path from g0 + delta I back to the (possibly degenerate) g0.
template <typename Scalar>
MetricPath<Scalar> boundaryShiftPath(const TensorField<Scalar>& g0, Scalar delta) {
  if (!(delta > Scalar(0))) throw PreconditionError("boundaryShiftPath: delta must be positive");
  const SymMat<Scalar> shift = SymMat<Scalar>::scaledIdentity(g0.dim(), delta);
  return LinearPath<Scalar>{TensorField<Scalar>::sample(g0.grid(), [&](std::size_t i) { return g0[i] + shift; }), g0};
}

/// The same curve traversed from t = 1 to t = 0.
template <typename Scalar>
MetricPath<Scalar> reversed(const MetricPath<Scalar>& p) {
  return std::visit(
      [](const auto& q) -> MetricPath<Scalar> {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, LinearPath<Scalar>>) {
          return LinearPath<Scalar>{q.g1, q.g0};
        } else if constexpr (std::is_same_v<T, ConformalGeodesicPath<Scalar>>) {
          return ConformalExpPath<Scalar>{q.g0, q.rho, ScalarField<Scalar>::constant(q.g0.grid(), Scalar(0))};
        } else if constexpr (std::is_same_v<T, ConformalExpPath<Scalar>>) {
          return ConformalExpPath<Scalar>{q.g0, q.sigma_to, q.sigma_from};
        } else if constexpr (std::is_same_v<T, ThreePiecePath<Scalar>>) {
          return ThreePiecePath<Scalar>{q.g1, q.g0, q.region, q.s, q.w, q.f};
        } else {
          SampledPath<Scalar> r;
          for (std::size_t i = q.t.size(); i-- > 0;) {
            r.t.push_back(Scalar(1) - q.t[i]);
            r.fields.push_back(q.fields[i]);
          }
          return r;
        }
      },
      p);
}

// ---------------------------------------------------------------------------
// Evaluation

template <typename Scalar>
struct NodeState {
  SymMat<Scalar> g, dg;
};

/// A smooth piece [t0, t1] of a path with a nodewise state function.
template <typename Scalar>
struct PathPiece {
  Scalar t0, t1;
  std::function<NodeState<Scalar>(std::size_t, Scalar)> state;
};

template <typename Scalar>
const TorusGrid& pathGrid(const MetricPath<Scalar>& p) {
  return std::visit(
      [](const auto& q) -> const TorusGrid& {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, SampledPath<Scalar>>)
          return q.fields.front().grid();
        else
          return q.g0.grid();
      },
      p);
}

template <typename Scalar>
std::vector<PathPiece<Scalar>> pieces(const MetricPath<Scalar>& p) {
  using Piece = PathPiece<Scalar>;
  using State = NodeState<Scalar>;
  return std::visit(
      [](const auto& q) -> std::vector<Piece> {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, LinearPath<Scalar>>) {
          requireSameGrid(q.g0.grid(), q.g1.grid(), "LinearPath");
          return {Piece{0, 1, [&q](std::size_t i, Scalar t) {
                          return State{(Scalar(1) - t) * q.g0[i] + t * q.g1[i], q.g1[i] - q.g0[i]};
                        }}};
        } else if constexpr (std::is_same_v<T, ConformalGeodesicPath<Scalar>>) {
          const int n = q.g0.dim();
          detail::checkConformalDomain(n, q.rho, Scalar(1), "ConformalGeodesicPath");
          return {Piece{0, 1, [&q, n](std::size_t i, Scalar t) {
                          const Scalar rho = q.rho.values[i];
                          const Scalar base = Scalar(1) + Scalar(n) * t * rho / Scalar(4);
                          const Scalar c = detail::conformalFactor(n, t * rho);
                          return State{c * q.g0[i], (rho * c / base) * q.g0[i]};
                        }}};
        } else if constexpr (std::is_same_v<T, ConformalExpPath<Scalar>>) {
          const int n = q.g0.dim();
          detail::checkConformalDomain(n, q.sigma_from, Scalar(1), "ConformalExpPath");
          detail::checkConformalDomain(n, q.sigma_to, Scalar(1), "ConformalExpPath");
          return {Piece{0, 1, [&q, n](std::size_t i, Scalar t) {
                          const Scalar a = q.sigma_from.values[i], b = q.sigma_to.values[i];
                          const Scalar sigma = (Scalar(1) - t) * a + t * b;
                          const Scalar base = Scalar(1) + Scalar(n) * sigma / Scalar(4);
                          const Scalar c = detail::conformalFactor(n, sigma);
                          return State{c * q.g0[i], ((b - a) * c / base) * q.g0[i]};
                        }}};
        } else if constexpr (std::is_same_v<T, ThreePiecePath<Scalar>>) {
          const Scalar third = Scalar(1) / Scalar(3);
          return {
              Piece{0, third,
                    [&q, third](std::size_t i, Scalar t) {
                      const Scalar tau = t / third, f = q.f.values[i];
                      return State{((Scalar(1) - tau) + tau * f) * q.g0[i], ((f - Scalar(1)) / third) * q.g0[i]};
                    }},
              Piece{third, 2 * third,
                    [&q, third](std::size_t i, Scalar t) {
                      const Scalar tau = (t - third) / third, f = q.f.values[i];
                      return State{f * ((Scalar(1) - tau) * q.g0[i] + tau * q.g1[i]),
                                   (f / third) * (q.g1[i] - q.g0[i])};
                    }},
              Piece{2 * third, 1, [&q, third](std::size_t i, Scalar t) {
                      const Scalar tau = (t - 2 * third) / third, f = q.f.values[i];
                      return State{(tau + (Scalar(1) - tau) * f) * q.g1[i], ((Scalar(1) - f) / third) * q.g1[i]};
                    }}};
        } else {
          if (q.t.size() < 2 || q.t.size() != q.fields.size())
            throw PreconditionError("SampledPath: need matching t and field lists of length >= 2");
          if (q.t.front() != Scalar(0) || q.t.back() != Scalar(1))
            throw PreconditionError("SampledPath: samples must start at t = 0 and end at t = 1");
          std::vector<Piece> out;
          for (std::size_t s = 0; s + 1 < q.t.size(); ++s) {
            if (!(q.t[s + 1] > q.t[s])) throw PreconditionError("SampledPath: t must increase strictly");
            requireSameGrid(q.fields[s].grid(), q.fields[s + 1].grid(), "SampledPath");
            out.push_back(Piece{q.t[s], q.t[s + 1], [&q, s](std::size_t i, Scalar t) {
                                  const Scalar len = q.t[s + 1] - q.t[s];
                                  const Scalar tau = (t - q.t[s]) / len;
                                  return State{(Scalar(1) - tau) * q.fields[s][i] + tau * q.fields[s + 1][i],
                                               (q.fields[s + 1][i] - q.fields[s][i]) * (Scalar(1) / len)};
                                }});
          }
          return out;
        }
      },
      p);
}

namespace detail {

template <typename Scalar>
const PathPiece<Scalar>& pieceAt(const std::vector<PathPiece<Scalar>>& ps, Scalar t) {
  if (!(t >= Scalar(0) && t <= Scalar(1))) throw PreconditionError("path: t outside [0, 1]");
  for (const auto& p : ps)
    if (t <= p.t1) return p;
  return ps.back();
}

}  // namespace detail

/// g_t as a tensor field; exact stored endpoints at t = 0 and t = 1.
template <typename Scalar>
TensorField<Scalar> evaluate(const MetricPath<Scalar>& p, Scalar t) {
  const auto ps = pieces(p);
  const auto& piece = t == Scalar(1) ? ps.back() : detail::pieceAt(ps, t);
  return TensorField<Scalar>::sample(pathGrid(p), [&](std::size_t i) { return piece.state(i, t).g; });
}

/// g_t' (one-sided at breakpoints: the piece containing t from the left, except at t = 0).
template <typename Scalar>
TensorField<Scalar> velocity(const MetricPath<Scalar>& p, Scalar t) {
  const auto ps = pieces(p);
  const auto& piece = detail::pieceAt(ps, t);
  return TensorField<Scalar>::sample(pathGrid(p), [&](std::size_t i) { return piece.state(i, t).dg; });
}

// ---------------------------------------------------------------------------
// Length

struct PathLengthOptions {
  int t_nodes = 16;             // initial panels per piece (>= 8)
  int max_levels = 10;          // panel doublings
  double rel_tol = 1e-6;        // stop when successive levels agree to this
  double grade_threshold = 1e-3;  // lambda_min / lambda_max below this flags an endpoint
  double t_begin = 0, t_end = 1;  // integrate over a subinterval
  Tolerances tol;
};

template <typename Scalar>
struct PathLength {
  Scalar length = 0;
  Scalar error_estimate = 0;
  int levels = 0;
  bool graded = false;
  bool converged = true;
};

namespace detail {

/// L2 speed at t (infinite when a node with nonzero velocity is not positive definite).
template <typename Scalar>
Scalar pathSpeed(const PathPiece<Scalar>& piece, std::size_t nodes, Scalar cell, Scalar t) {
  Accumulator acc;
  for (std::size_t i = 0; i < nodes; ++i) {
    const auto st = piece.state(i, t);
    if (st.dg.isZero()) continue;
    const auto llt = choleskyOf<Scalar>(st.g.matrix());
    if (!llt) return std::numeric_limits<Scalar>::infinity();
    const Mat<Scalar> x = llt->solve(st.dg.matrix());
    acc.add(static_cast<long double>((x * x).trace() * std::sqrt(choleskyDet(*llt))));
  }
  return std::sqrt(static_cast<Scalar>(acc.value()) * cell);
}

/// True when the state at t has a node with nonzero velocity that is singular, badly
/// conditioned, or small against the state at the other end of the piece.
template <typename Scalar>
bool degenerateAt(const PathPiece<Scalar>& piece, std::size_t nodes, Scalar t, Scalar t_other,
                  const PathLengthOptions& opts) {
  const Scalar ratio(opts.grade_threshold);
  for (std::size_t i = 0; i < nodes; ++i) {
    const auto st = piece.state(i, t);
    if (st.dg.isZero()) continue;
    const Vec<Scalar> ev = symEigenvalues(st.g);
    if (!(ev(0) > Scalar(opts.tol.eps_pd)) || ev(0) < ratio * ev(ev.size() - 1)) return true;
    const Vec<Scalar> other = symEigenvalues(piece.state(i, t_other).g);
    if (ev(0) < ratio * other(other.size() - 1)) return true;
  }
  return false;
}

}  // namespace detail

/// Length by composite Simpson per smooth piece, refined by doubling; pieces with a degenerate
/// endpoint use t = end -/+ (1 - u)^4 or u^4 grading and Gauss-Legendre panels, which never
/// evaluate the endpoint itself.
template <typename Scalar>
PathLength<Scalar> pathLength(const MetricPath<Scalar>& p, const PathLengthOptions& opts = {}) {
  if (opts.t_nodes < 8) throw PreconditionError("pathLength: t_nodes must be at least 8");
  if (!(opts.t_begin >= 0 && opts.t_end <= 1 && opts.t_begin <= opts.t_end))
    throw PreconditionError("pathLength: bad parameter interval");
  const auto ps = pieces(p);
  const std::size_t nodes = pathGrid(p).size();
  const Scalar cell(pathGrid(p).cellVolume());
  PathLength<Scalar> out;

  for (const auto& piece : ps) {
    const Scalar a = std::max(piece.t0, Scalar(opts.t_begin));
    const Scalar b = std::min(piece.t1, Scalar(opts.t_end));
    if (!(b > a)) continue;
    auto speed = [&](Scalar t) { return detail::pathSpeed(piece, nodes, cell, t); };
    const bool flag_a = detail::degenerateAt(piece, nodes, a, b, opts);
    const bool flag_b = detail::degenerateAt(piece, nodes, b, a, opts);

    std::function<Scalar(int)> rule;
    if (!flag_a && !flag_b) {
      rule = [&](int panels) { return compositeSimpson<Scalar>(speed, a, b, panels); };
    } else {
      out.graded = true;
      // grade toward each flagged end; split at the midpoint when both are flagged
      auto toward_b = [&](Scalar lo, Scalar hi, int panels) {
        return compositeGauss<Scalar>(
            [&](Scalar u) {
              const Scalar v = Scalar(1) - u;
              return speed(hi - (hi - lo) * v * v * v * v) * Scalar(4) * (hi - lo) * v * v * v;
            },
            Scalar(0), Scalar(1), panels);
      };
      auto toward_a = [&](Scalar lo, Scalar hi, int panels) {
        return compositeGauss<Scalar>(
            [&](Scalar u) { return speed(lo + (hi - lo) * u * u * u * u) * Scalar(4) * (hi - lo) * u * u * u; },
            Scalar(0), Scalar(1), panels);
      };
      const Scalar mid = (a + b) / 2;
      if (flag_a && flag_b)
        rule = [=](int panels) { return toward_a(a, mid, panels) + toward_b(mid, b, panels); };
      else if (flag_b)
        rule = [=](int panels) { return toward_b(a, b, panels); };
      else
        rule = [=](int panels) { return toward_a(a, b, panels); };
    }

    int panels = opts.t_nodes;
    Scalar prev = rule(panels);
    Scalar err = std::numeric_limits<Scalar>::infinity();
    bool converged = false;
    int level = 0;
    for (level = 1; level <= opts.max_levels; ++level) {
      panels *= 2;
      const Scalar next = rule(panels);
      err = std::abs(next - prev);
      prev = next;
      if (!std::isfinite(static_cast<double>(next))) break;
      if (err <= Scalar(opts.rel_tol) * std::abs(next)) {
        converged = true;
        break;
      }
    }
    out.length += prev;
    out.error_estimate += err;
    out.levels = std::max(out.levels, std::min(level, opts.max_levels));
    out.converged = out.converged && converged;
  }
  if (out.length == Scalar(0)) out.error_estimate = 0;
  return out;
}

/// Convenience: sampled path through the given fields at uniform t.
template <typename Scalar>
MetricPath<Scalar> sampledPath(std::vector<TensorField<Scalar>> fields) {
  SampledPath<Scalar> p;
  const std::size_t m = fields.size();
  for (std::size_t i = 0; i < m; ++i) p.t.push_back(Scalar(i) / Scalar(m - 1));
  p.fields = std::move(fields);
  return p;
}

}  // namespace ebinlab
