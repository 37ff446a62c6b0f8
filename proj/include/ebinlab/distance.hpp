#pragma once

// Two-sided estimates of the L2 distance d(g0, g1): upper bounds from explicit path families,
// lower bounds from the volume and Theta inequalities
//
//   |sqrt Vol(Y, g1) - sqrt Vol(Y, g0)| <= (sqrt(n) / 4) d,
//   Theta_Y(g0, g1) <= d (sqrt(n) d + 2 sqrt Vol(M, g0)).

#include "ebinlab/path.hpp"
#include "ebinlab/polyline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ebinlab {

struct DistanceOptions {
  PathLengthOptions length;      // final evaluation of the winning path
  double search_rel_tol = 1e-4;  // path lengths inside the three-piece search
  int search_levels = 4;         // refinement cap inside the search
  int tuning_budget = 20;        // length evaluations per cutoff width
  std::vector<double> widths{1, 2, 4};
  double s_min = 1e-4;
  bool three_piece = true;
  int polyline_nodes = 8;  // 0 disables the optimized piecewise-linear candidate
  PolylineOptions polyline;
  std::vector<double> quantiles{0.5, 0.75, 0.9};
  double conformal_tol = 1e-10;  // relative residual accepted by the conformal detector
  bool symmetric_theta = true;   // invert Theta with the volume of either endpoint
  Tolerances tol;
};

/// One evaluated upper-bound family.
template <typename Scalar>
struct UpperCandidate {
  std::string family;
  Scalar length = std::numeric_limits<Scalar>::infinity();
  Scalar error = 0;
  bool converged = false;
  Scalar s = std::numeric_limits<Scalar>::quiet_NaN();
  Scalar w = std::numeric_limits<Scalar>::quiet_NaN();
};

template <typename Scalar>
struct UpperBound {
  Scalar value = 0;
  MetricPath<Scalar> witness;
  UpperCandidate<Scalar> best;
  std::vector<UpperCandidate<Scalar>> candidates;  // fixed order: linear, conformal, three_piece, polyline
};

enum class LowerKind { None, Volume, Theta };

inline const char* label(LowerKind k) {
  switch (k) {
    case LowerKind::Volume: return "volume";
    case LowerKind::Theta: return "theta";
    default: return "none";
  }
}

template <typename Scalar>
struct LowerBound {
  Scalar value = 0;
  LowerKind kind = LowerKind::None;
  std::string mask;
  Scalar theta = 0;   // Theta_Y used (theta bounds)
  Scalar volume = 0;  // Vol(M, .) used (theta bounds)
  bool certified = true;
};

template <typename Scalar>
struct DistanceEstimate {
  Scalar lower = 0;
  Scalar upper = 0;
  UpperBound<Scalar> upper_detail;
  LowerBound<Scalar> lower_witness;
  LowerBound<Scalar> volume_bound;
  LowerBound<Scalar> theta_bound;
  bool certified = true;
};

/// Named masks for the lower bounds: the full grid and superlevel sets of the pointwise theta
/// lower bound at the requested quantiles (empty and repeated sets dropped).
template <typename Scalar>
std::vector<std::pair<std::string, RegionMask>> lowerBoundMasks(const TensorField<Scalar>& g0,
                                                                const TensorField<Scalar>& g1,
                                                                const std::vector<double>& quantiles) {
  requireSameGrid(g0.grid(), g1.grid(), "lowerBoundMasks");
  const auto& grid = g0.grid();
  std::vector<std::pair<std::string, RegionMask>> out{{"full", RegionMask::all(grid)}};
  std::vector<Scalar> theta(g0.size());
  const SpdPoint<Scalar> eye(SymMat<Scalar>::identity(g0.dim()));
  parallelFor(g0.size(), [&](std::size_t i) {
    Tolerances loose;
    loose.eps_psd = std::numeric_limits<double>::infinity();
    theta[i] = thetaLowerBound(eye, PsdPoint<Scalar>(g0[i], loose), PsdPoint<Scalar>(g1[i], loose));
  });
  std::vector<Scalar> sorted = theta;
  std::sort(sorted.begin(), sorted.end());
  for (double q : quantiles) {
    const auto idx = std::min(sorted.size() - 1, static_cast<std::size_t>(q * static_cast<double>(sorted.size())));
    const Scalar level = sorted[idx];
    if (!(level > Scalar(0))) continue;
    auto m = RegionMask::where(grid, [&](std::size_t i) { return theta[i] >= level; });
    bool repeated = m.empty();
    for (const auto& [name, other] : out) repeated = repeated || other == m;
    if (!repeated) out.emplace_back("theta_q" + std::to_string(static_cast<int>(std::lround(q * 100))), m);
  }
  return out;
}

/// max over masks of (4 / sqrt n) |sqrt Vol(Y, g1) - sqrt Vol(Y, g0)|.
template <typename Scalar>
LowerBound<Scalar> lowerBoundVolume(const TensorField<Scalar>& g0, const TensorField<Scalar>& g1,
                                    const std::vector<std::pair<std::string, RegionMask>>& masks) {
  requireSameGrid(g0.grid(), g1.grid(), "lowerBoundVolume");
  const Scalar n(g0.dim());
  LowerBound<Scalar> best;
  best.kind = LowerKind::Volume;
  for (const auto& [name, m] : masks) {
    const Scalar v = Scalar(4) / std::sqrt(n) * std::abs(std::sqrt(volume(g1, m)) - std::sqrt(volume(g0, m)));
    if (v > best.value || best.mask.empty()) best.value = v, best.mask = name;
  }
  return best;
}

/// Smallest d >= 0 with theta <= d (sqrt(n) d + 2 sqrt(v)), i.e. (sqrt(v + sqrt(n) theta) - sqrt(v)) / sqrt(n),
/// written without cancellation.
template <typename Scalar>
Scalar invertThetaBound(Scalar theta, Scalar v, int n) {
  if (!(theta > Scalar(0))) return Scalar(0);
  return theta / (std::sqrt(v + std::sqrt(Scalar(n)) * theta) + std::sqrt(v));
}

/// Inversion of the Theta inequality over the masks, using the certified pointwise lower bound
/// of theta integrated against the Euclidean reference.
template <typename Scalar>
LowerBound<Scalar> lowerBoundTheta(const TensorField<Scalar>& g0, const TensorField<Scalar>& g1,
                                   const std::vector<std::pair<std::string, RegionMask>>& masks,
                                   bool symmetric = true) {
  requireSameGrid(g0.grid(), g1.grid(), "lowerBoundTheta");
  const int n = g0.dim();
  std::vector<Scalar> theta(g0.size());
  const SpdPoint<Scalar> eye(SymMat<Scalar>::identity(n));
  parallelFor(g0.size(), [&](std::size_t i) {
    Tolerances loose;
    loose.eps_psd = std::numeric_limits<double>::infinity();
    theta[i] = thetaLowerBound(eye, PsdPoint<Scalar>(g0[i], loose), PsdPoint<Scalar>(g1[i], loose));
  });
  std::vector<Scalar> volumes{volume(g0)};
  if (symmetric) volumes.push_back(volume(g1));
  LowerBound<Scalar> best;
  best.kind = LowerKind::Theta;
  const Scalar cell(g0.grid().cellVolume());
  for (const auto& [name, m] : masks) {
    detail::Accumulator acc;
    for (std::size_t i = 0; i < theta.size(); ++i)
      if (m[i]) acc.add(static_cast<long double>(theta[i]));
    const Scalar big_theta = static_cast<Scalar>(acc.value()) * cell;
    for (Scalar v : volumes) {
      const Scalar d = invertThetaBound(big_theta, v, n);
      if (d > best.value || best.mask.empty()) best.value = d, best.mask = name, best.theta = big_theta, best.volume = v;
    }
  }
  return best;
}

namespace detail {

/// g1 = phi g0 nodewise with phi > 0: the conformal exponent tau with g1 = conformalExp(g0, tau).
template <typename Scalar>
std::optional<ScalarField<Scalar>> conformalExponent(const TensorField<Scalar>& g0, const TensorField<Scalar>& g1,
                                                     double rel_tol) {
  const int n = g0.dim();
  ScalarField<Scalar> tau = ScalarField<Scalar>::constant(g0.grid(), Scalar(0));
  for (std::size_t i = 0; i < g0.size(); ++i) {
    const auto llt = choleskyOf<Scalar>(g0[i].matrix());
    if (!llt) return std::nullopt;
    const Scalar phi = llt->solve(g1[i].matrix()).trace() / Scalar(n);
    if (!(phi > Scalar(0))) return std::nullopt;
    if ((g1[i] - phi * g0[i]).maxAbs() > Scalar(rel_tol) * g1[i].maxAbs()) return std::nullopt;
    tau.values[i] = Scalar(4) / Scalar(n) * (std::pow(phi, Scalar(n) / Scalar(4)) - Scalar(1));
  }
  return tau;
}

/// Node pairs (g0(x), g1(x)) with multiplicities.
template <typename Scalar>
struct UniquePairs {
  std::vector<std::size_t> representative;
  std::vector<std::size_t> slot;
  std::vector<Scalar> count;
};

template <typename Scalar>
UniquePairs<Scalar> uniquePairs(const TensorField<Scalar>& g0, const TensorField<Scalar>& g1) {
  UniquePairs<Scalar> out;
  std::map<std::vector<Scalar>, std::size_t> index;
  out.slot.resize(g0.size());
  for (std::size_t i = 0; i < g0.size(); ++i) {
    std::vector<Scalar> key;
    for (const auto* m : {&g0[i], &g1[i]})
      for (int j = 0; j < m->packed().size(); ++j) key.push_back(m->packed()(j));
    auto [it, inserted] = index.emplace(std::move(key), out.representative.size());
    if (inserted) out.representative.push_back(i), out.count.push_back(0);
    out.slot[i] = it->second;
    out.count[it->second] += 1;
  }
  return out;
}

/// Piecewise-linear path g0 -> g1 with optimized interior vertices. Nodes with equal endpoint
/// pairs share a vertex, which only restricts the admissible paths.
template <typename Scalar>
MetricPath<Scalar> optimizedPolyline(const TensorField<Scalar>& g0, const TensorField<Scalar>& g1, int interior,
                                     const PolylineOptions& opts) {
  const auto u = uniquePairs(g0, g1);
  const std::size_t m = u.representative.size();
  PolylineProblem<Scalar> prob;
  prob.dim = g0.dim();
  prob.det_exponent = Scalar(0.5);
  for (Scalar c : u.count) prob.node_weight.push_back(c * Scalar(g0.grid().cellVolume()));
  std::vector<Vertex<Scalar>> vertices(interior + 2, Vertex<Scalar>(m));
  for (int v = 0; v <= interior + 1; ++v) {
    const Scalar t = Scalar(v) / Scalar(interior + 1);
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t i = u.representative[k];
      vertices[v][k] = ((Scalar(1) - t) * g0[i] + t * g1[i]).matrix();
    }
  }
  optimizePolyline(prob, vertices, opts);
  std::vector<TensorField<Scalar>> fields;
  fields.push_back(g0);
  for (int v = 1; v <= interior; ++v)
    fields.push_back(TensorField<Scalar>::sample(
        g0.grid(), [&](std::size_t i) { return SymMat<Scalar>::fromMatrix(vertices[v][u.slot[i]]); }));
  fields.push_back(g1);
  return sampledPath(std::move(fields));
}

template <typename Scalar>
UpperCandidate<Scalar> measure(const std::string& family, const MetricPath<Scalar>& p, const PathLengthOptions& opts) {
  const auto len = pathLength(p, opts);
  UpperCandidate<Scalar> c;
  c.family = family;
  c.length = std::isfinite(static_cast<double>(len.length)) ? len.length : std::numeric_limits<Scalar>::infinity();
  c.error = len.error_estimate;
  c.converged = len.converged;
  return c;
}

}  // namespace detail

/// Shortest of the implemented path families. Candidates that fail (singular interior states,
/// optimizer breakdown) are recorded with infinite length and never win.
template <typename Scalar>
UpperBound<Scalar> upperBound(const MetricField<Scalar>& g0, const MetricField<Scalar>& g1,
                              const DistanceOptions& opts = {}) {
  requireSameGrid(g0.grid(), g1.grid(), "upperBound");
  if (g0.dim() != g1.dim()) throw ShapeMismatchError("upperBound: dimension mismatch");
  const TensorField<Scalar>& a = g0;
  const TensorField<Scalar>& b = g1;
  UpperBound<Scalar> out;
  out.witness = LinearPath<Scalar>{a, b};
  if (a == b) {
    out.best = UpperCandidate<Scalar>{"linear", Scalar(0), Scalar(0), true};
    out.candidates = {out.best};
    return out;
  }

  std::vector<std::pair<UpperCandidate<Scalar>, MetricPath<Scalar>>> found;
  auto attempt = [&](const std::string& family, auto make, Scalar s = std::numeric_limits<Scalar>::quiet_NaN(),
                     Scalar w = std::numeric_limits<Scalar>::quiet_NaN()) {
    try {
      MetricPath<Scalar> p = make();
      auto c = detail::measure(family, p, opts.length);
      c.s = s, c.w = w;
      found.emplace_back(c, std::move(p));
    } catch (const Error&) {
      UpperCandidate<Scalar> c;
      c.family = family, c.s = s, c.w = w;
      found.emplace_back(c, LinearPath<Scalar>{a, b});
    }
  };

  attempt("linear", [&] { return MetricPath<Scalar>(LinearPath<Scalar>{a, b}); });

  if (auto tau = detail::conformalExponent(a, b, opts.conformal_tol))
    attempt("conformal", [&] {
      return MetricPath<Scalar>(ConformalExpPath<Scalar>{a, ScalarField<Scalar>::constant(a.grid(), Scalar(0)), *tau});
    });

  // three-piece search over (s, w) with cheap length evaluations, then one precise evaluation
  if (opts.three_piece) {
    const RegionMask region = carrier(a, b);
    PathLengthOptions search = opts.length;
    search.rel_tol = opts.search_rel_tol;
    search.t_nodes = 8;
    search.max_levels = std::min(search.max_levels, opts.search_levels);
    std::vector<double> widths = opts.widths;
    if (region.count() == region.grid().size() || widths.empty()) widths = {widths.empty() ? 1.0 : widths.front()};
    Scalar best_len = std::numeric_limits<Scalar>::infinity(), best_s = 1, best_w = Scalar(widths.front());
    auto length_at = [&](Scalar s, Scalar w) {
      try {
        const auto len = pathLength(threePiecePath(a, b, region, s, w), search).length;
        if (len < best_len) best_len = len, best_s = s, best_w = w;
        return len;
      } catch (const Error&) {
        return std::numeric_limits<Scalar>::infinity();
      }
    };
    const Scalar lo = std::log(Scalar(opts.s_min)), hi = Scalar(0);
    const Scalar r = (std::sqrt(Scalar(5)) - Scalar(1)) / Scalar(2);
    for (double wd : widths) {
      const Scalar w(wd);
      int evals = 0;
      length_at(Scalar(0), w), ++evals;
      length_at(std::exp(lo), w), ++evals;
      length_at(Scalar(1), w), ++evals;
      Scalar x0 = lo, x1 = hi;
      Scalar c = x1 - r * (x1 - x0), d = x0 + r * (x1 - x0);
      Scalar fc = length_at(std::exp(c), w), fd = length_at(std::exp(d), w);
      evals += 2;
      while (evals < opts.tuning_budget) {
        if (fc <= fd) {
          x1 = d, d = c, fd = fc;
          c = x1 - r * (x1 - x0);
          fc = length_at(std::exp(c), w);
        } else {
          x0 = c, c = d, fc = fd;
          d = x0 + r * (x1 - x0);
          fd = length_at(std::exp(d), w);
        }
        ++evals;
      }
    }
    if (std::isfinite(static_cast<double>(best_len)))
      attempt("three_piece", [&] { return threePiecePath(a, b, region, best_s, best_w); }, best_s, best_w);
  }

  if (opts.polyline_nodes > 0)
    attempt("polyline", [&] { return detail::optimizedPolyline(a, b, opts.polyline_nodes, opts.polyline); });

  std::size_t win = 0;
  for (std::size_t k = 1; k < found.size(); ++k)
    if (found[k].first.length < found[win].first.length) win = k;
  for (const auto& f : found) out.candidates.push_back(f.first);
  out.best = found[win].first;
  out.value = out.best.length;
  out.witness = std::move(found[win].second);
  return out;
}

/// Certified interval [lower, upper]. A lower bound above the upper bound by more than the
/// quadrature error of the witness raises SoundnessError; within that margin lower is clipped.
template <typename Scalar>
DistanceEstimate<Scalar> estimate(const MetricField<Scalar>& g0, const MetricField<Scalar>& g1,
                                  const DistanceOptions& opts = {},
                                  const std::vector<std::pair<std::string, RegionMask>>& extra_masks = {}) {
  requireSameGrid(g0.grid(), g1.grid(), "estimate");
  DistanceEstimate<Scalar> out;
  out.upper_detail = upperBound(g0, g1, opts);
  out.upper = out.upper_detail.value;
  auto masks = lowerBoundMasks<Scalar>(g0, g1, opts.quantiles);
  for (const auto& m : extra_masks) {
    requireSameGrid(g0.grid(), m.second.grid(), "estimate");
    masks.push_back(m);
  }
  out.volume_bound = lowerBoundVolume<Scalar>(g0, g1, masks);
  out.theta_bound = lowerBoundTheta<Scalar>(g0, g1, masks, opts.symmetric_theta);
  out.lower_witness = out.theta_bound.value > out.volume_bound.value ? out.theta_bound : out.volume_bound;
  out.lower = out.lower_witness.value;
  out.certified = out.upper_detail.best.converged && out.lower_witness.certified;

  const Scalar slack = out.upper_detail.best.error + Scalar(1e-9) * std::max(Scalar(1), out.upper);
  if (out.lower > out.upper + slack)
    throw SoundnessError("estimate: lower bound " + std::to_string(static_cast<double>(out.lower)) + " (" +
                         label(out.lower_witness.kind) + ", " + out.lower_witness.mask + ") exceeds upper bound " +
                         std::to_string(static_cast<double>(out.upper)) + " (" + out.upper_detail.best.family + ")");
  out.lower = std::min(out.lower, out.upper);
  if (!(out.lower > Scalar(0))) out.lower_witness.kind = LowerKind::None;
  return out;
}

}  // namespace ebinlab
