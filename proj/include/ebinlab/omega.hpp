#pragma once

// Diagnostics for sequences of metric fields: pointwise collapse/convergence classes, the
// canonical omega-limit (zero on the deflated set), Omega partial sums, volume series, and
// an equivalence test for pairs of sequences.

#include "ebinlab/distance.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

namespace ebinlab {

template <typename Scalar>
struct MetricSequence {
  std::vector<MetricField<Scalar>> terms;
  std::string generator;          // empty for sequences read from files
  std::vector<double> k_values;   // parameter of each term (index + 1 when absent)

  void validate() const {
    if (terms.size() < 3) throw PreconditionError("MetricSequence: need at least 3 terms");
    for (std::size_t k = 0; k < terms.size(); ++k) {
      requireSameGrid(terms.front().grid(), terms[k].grid(), "MetricSequence");
      if (terms[k].dim() != terms.front().dim()) throw ShapeMismatchError("MetricSequence: dimension mismatch");
      if (terms[k].kind() != FieldKind::Metric)
        throw PreconditionError("MetricSequence: term " + std::to_string(k) + " is not a metric");
    }
    if (!k_values.empty() && k_values.size() != terms.size())
      throw PreconditionError("MetricSequence: k_values length differs from the number of terms");
  }
  const TorusGrid& grid() const { return terms.front().grid(); }
  std::size_t size() const { return terms.size(); }
  double k(std::size_t i) const { return k_values.empty() ? static_cast<double>(i + 1) : k_values[i]; }
};

struct OmegaOptions {
  DichotomyOptions dichotomy;
  DistanceOptions distance;
  ThetaOptions theta;
  bool pairwise = true;      // distance estimates between consecutive terms
  bool partial_sums = true;  // nodewise Omega_N
};

// ---------------------------------------------------------------------------
// Pointwise classification and the limit

template <typename Scalar>
std::vector<PointClass> classifyPoints(const MetricSequence<Scalar>& seq, const DichotomyOptions& opts = {}) {
  seq.validate();
  std::vector<PointClass> out(seq.grid().size());
  parallelFor(out.size(), [&](std::size_t i) {
    std::vector<SymMat<Scalar>> column;
    column.reserve(seq.size());
    for (const auto& t : seq.terms) column.push_back(t[i]);
    out[i] = classifyPointSequence(column, opts);
  });
  return out;
}

/// Nodes where some term has det below delta_num, together with every Collapsed node.
template <typename Scalar>
RegionMask deflatedMask(const MetricSequence<Scalar>& seq, const std::vector<PointClass>& classes,
                        const DichotomyOptions& opts = {}) {
  std::vector<TensorField<Scalar>> terms(seq.terms.begin(), seq.terms.end());
  RegionMask m = deflatedSet(terms, opts.delta_num);
  for (std::size_t i = 0; i < classes.size(); ++i)
    if (classes[i] == PointClass::Collapsed) m.set(i, true);
  return m;
}

/// Zero on deflated, Collapsed and Undecided nodes; the average of the tail window elsewhere.
template <typename Scalar>
MetricField<Scalar> omegaLimitFrom(const MetricSequence<Scalar>& seq, const std::vector<PointClass>& classes,
                                   const RegionMask& deflated, const DichotomyOptions& opts = {}) {
  const int len = static_cast<int>(seq.size());
  const int window = tailWindow(len, opts.tail_window);
  const int n = seq.terms.front().dim();
  Tolerances tol;
  tol.eps_psd = 0.0;
  return MetricField<Scalar>::sample(
      seq.grid(),
      [&](std::size_t i) {
        if (deflated[i] || classes[i] != PointClass::Converged) return SymMat<Scalar>(n);
        SymMat<Scalar> sum(n);
        for (int k = len - window; k < len; ++k) sum += seq.terms[k][i];
        return sum * (Scalar(1) / Scalar(window));
      },
      FieldKind::Semimetric, tol);
}

template <typename Scalar>
MetricField<Scalar> omegaLimit(const MetricSequence<Scalar>& seq, const DichotomyOptions& opts = {}) {
  const auto classes = classifyPoints(seq, opts);
  return omegaLimitFrom(seq, classes, deflatedMask(seq, classes, opts), opts);
}

// ---------------------------------------------------------------------------
// Tail fits

struct TailFit {
  double ratio = std::numeric_limits<double>::quiet_NaN();     // per-term geometric factor
  double exponent = std::numeric_limits<double>::quiet_NaN();  // u ~ k^-exponent
  bool decreasing = false;                                     // nonincreasing over the window
};

/// Least-squares fit of log u against the term index and against log k over the last `window` values.
inline TailFit fitTail(const std::vector<double>& u, const std::vector<double>& k, int window) {
  TailFit fit;
  const int len = static_cast<int>(u.size());
  window = std::min(window, len);
  if (window < 2) return fit;
  const int begin = len - window;
  fit.decreasing = true;
  for (int i = begin + 1; i < len; ++i) fit.decreasing = fit.decreasing && u[i] <= u[i - 1];
  for (int i = begin; i < len; ++i)
    if (!(u[i] > 0)) {
      fit.ratio = 0;
      fit.exponent = std::numeric_limits<double>::infinity();
      return fit;
    }
  auto slope = [&](auto x) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = begin; i < len; ++i) {
      const double xi = x(i), yi = std::log(u[i]);
      sx += xi, sy += yi, sxx += xi * xi, sxy += xi * yi;
    }
    const double m = window;
    const double den = m * sxx - sx * sx;
    return den == 0 ? std::numeric_limits<double>::quiet_NaN() : (m * sxy - sx * sy) / den;
  };
  fit.ratio = std::exp(slope([](int i) { return static_cast<double>(i); }));
  fit.exponent = -slope([&](int i) { return std::log(k[i]); });
  return fit;
}

// ---------------------------------------------------------------------------
// Report

template <typename Scalar>
struct SequenceDiagnostics {
  RegionMask deflated_mask;
  std::vector<PointClass> point_class;
  MetricField<Scalar> omega_limit;
  std::vector<std::vector<Scalar>> omega_partial_sums;  // [N - 1][node]: Omega_N, N = 1 .. len - 1
  std::vector<Scalar> omega_l1;                         // ||Omega_N||_L1
  std::vector<Scalar> theta_m;                          // Theta_M(g_k, g_k+1)
  std::vector<std::string> mask_names;
  std::vector<std::vector<Scalar>> volume_series;  // [mask][k]
  std::vector<Scalar> limit_volume;                // [mask]
  std::vector<DistanceEstimate<Scalar>> pairwise;  // (k, k+1)
  std::vector<Scalar> upper_partial_sums;
  Scalar summability = 0;
  TailFit upper_tail;
  bool cauchy_surrogate = false;     // condition (1): consecutive upper bounds shrink
  bool summable_surrogate = false;   // condition (4): geometric tail factor below one
  Scalar deflated_mismatch = 0;      // condition (2): reference volume of nodes singular in the limit but off the mask
  Scalar unconverged_fraction = 0;   // condition (3): share of nodes off the mask not classified Converged
  std::size_t counts[3] = {0, 0, 0};  // Collapsed, Converged, Undecided
  bool certified = true;
};

template <typename Scalar>
SequenceDiagnostics<Scalar> omegaReport(const MetricSequence<Scalar>& seq, const OmegaOptions& opts = {}) {
  seq.validate();
  const auto& grid = seq.grid();
  const std::size_t len = seq.size(), nodes = grid.size();
  SequenceDiagnostics<Scalar> r;
  r.point_class = classifyPoints(seq, opts.dichotomy);
  r.deflated_mask = deflatedMask(seq, r.point_class, opts.dichotomy);
  r.omega_limit = omegaLimitFrom(seq, r.point_class, r.deflated_mask, opts.dichotomy);
  for (auto c : r.point_class) ++r.counts[static_cast<int>(c)];

  // conditions (2) and (3)
  std::size_t off = 0, off_unconverged = 0;
  for (std::size_t i = 0; i < nodes; ++i) {
    if (r.deflated_mask[i]) continue;
    ++off;
    if (r.point_class[i] != PointClass::Converged) {
      ++off_unconverged;
      r.deflated_mismatch += Scalar(grid.cellVolume());
    }
  }
  r.unconverged_fraction = off ? Scalar(off_unconverged) / Scalar(off) : Scalar(0);

  if (opts.partial_sums) {
    std::vector<Scalar> running(nodes, Scalar(0));
    for (std::size_t k = 0; k + 1 < len; ++k) {
      const auto theta = thetaNodewise<Scalar>(seq.terms[k], seq.terms[k + 1], opts.theta);
      const auto integral = integrateTheta(theta, grid, RegionMask::all(grid));
      r.theta_m.push_back(integral.value);
      r.certified = r.certified && integral.certified;
      detail::Accumulator l1;
      for (std::size_t i = 0; i < nodes; ++i) {
        running[i] += theta[i].value;
        l1.add(static_cast<long double>(running[i]));
      }
      r.omega_partial_sums.push_back(running);
      r.omega_l1.push_back(static_cast<Scalar>(l1.value()) * Scalar(grid.cellVolume()));
    }
  }

  for (const auto& [name, mask] : standardMasks(grid)) {
    r.mask_names.push_back(name);
    std::vector<Scalar> series;
    for (const auto& t : seq.terms) series.push_back(volume(t, mask));
    r.volume_series.push_back(std::move(series));
    r.limit_volume.push_back(volume(r.omega_limit, mask));
  }

  if (opts.pairwise) {
    std::vector<double> uppers, ks;
    Scalar partial(0);
    for (std::size_t k = 0; k + 1 < len; ++k) {
      r.pairwise.push_back(estimate(seq.terms[k], seq.terms[k + 1], opts.distance));
      partial += r.pairwise.back().upper;
      r.upper_partial_sums.push_back(partial);
      r.certified = r.certified && r.pairwise.back().certified;
      uppers.push_back(static_cast<double>(r.pairwise.back().upper));
      ks.push_back(seq.k(k));
    }
    r.summability = partial;
    const int window = tailWindow(static_cast<int>(uppers.size()), opts.dichotomy.tail_window);
    r.upper_tail = fitTail(uppers, ks, std::max(2, window));
    r.cauchy_surrogate = r.upper_tail.decreasing;
    r.summable_surrogate = r.upper_tail.ratio < 1.0;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Equivalence of two sequences

enum class Verdict { Equivalent, Inequivalent, Undecided };

inline const char* label(Verdict v) {
  switch (v) {
    case Verdict::Equivalent: return "equivalent";
    case Verdict::Inequivalent: return "inequivalent";
    default: return "undecided";
  }
}

struct EquivalenceOptions {
  OmegaOptions omega;
  double tol = 1e-2;          // distance level counted as zero; limit agreement in d_x; mismatch volume
  double margin = 1e-2;       // lower bounds above this keep the sequences apart
  double min_exponent = 0.1;  // bounds fitted as k^-a with a >= this count as decaying to zero
};

template <typename Scalar>
struct EquivalenceResult {
  Verdict verdict = Verdict::Undecided;
  std::vector<DistanceEstimate<Scalar>> termwise;
  TailFit upper_fit, lower_fit;  // tail-supremum envelopes, second half of the sequence
  bool upper_to_zero = false;
  bool lower_separated = false;
  Scalar mismatch_volume = 0;  // max over both limits of Vol(E, limit), E = off-mask nodes where limits differ
  std::size_t union_deflated = 0;
  std::string reason;
};

template <typename Scalar>
EquivalenceResult<Scalar> equivalenceTest(const MetricSequence<Scalar>& a, const MetricSequence<Scalar>& b,
                                          const EquivalenceOptions& opts = {}) {
  a.validate(), b.validate();
  requireSameGrid(a.grid(), b.grid(), "equivalenceTest");
  if (a.size() != b.size()) throw PreconditionError("equivalenceTest: sequences differ in length");
  const std::size_t len = a.size();
  EquivalenceResult<Scalar> r;

  std::vector<double> uppers, lowers, ks;
  for (std::size_t k = 0; k < len; ++k) {
    r.termwise.push_back(estimate(a.terms[k], b.terms[k], opts.omega.distance));
    uppers.push_back(static_cast<double>(r.termwise.back().upper));
    lowers.push_back(static_cast<double>(r.termwise.back().lower));
    ks.push_back(a.k(k));
  }
  // trends of the tail suprema sup_{i >= k}, fitted over the second half of the sequence
  auto envelope = [](std::vector<double> u) {
    for (std::size_t i = u.size() - 1; i-- > 0;) u[i] = std::max(u[i], u[i + 1]);
    return u;
  };
  const int half = std::max(3, static_cast<int>((len + 1) / 2));
  r.upper_fit = fitTail(envelope(uppers), ks, half);
  r.lower_fit = fitTail(envelope(lowers), ks, half);
  r.upper_to_zero = uppers.back() < opts.tol || r.upper_fit.exponent >= opts.min_exponent;
  {
    const int window = tailWindow(static_cast<int>(len), opts.omega.dichotomy.tail_window);
    bool above = true;
    for (std::size_t k = len - static_cast<std::size_t>(window); k < len; ++k) above = above && lowers[k] >= opts.margin;
    r.lower_separated = above && !(r.lower_fit.exponent >= opts.min_exponent);
  }

  const auto ca = classifyPoints(a, opts.omega.dichotomy), cb = classifyPoints(b, opts.omega.dichotomy);
  const auto da = deflatedMask(a, ca, opts.omega.dichotomy), db = deflatedMask(b, cb, opts.omega.dichotomy);
  const auto la = omegaLimitFrom(a, ca, da, opts.omega.dichotomy), lb = omegaLimitFrom(b, cb, db, opts.omega.dichotomy);
  const RegionMask both = da | db;
  r.union_deflated = both.count();
  const RegionMask differ = RegionMask::where(a.grid(), [&](std::size_t i) {
    if (both[i]) return false;
    const bool za = la[i].isZero(), zb = lb[i].isZero();
    if (za || zb) return za != zb;
    Tolerances loose;
    loose.eps_pd = 0.0;
    return spdDistance(SpdPoint<Scalar>(la[i], loose), SpdPoint<Scalar>(lb[i], loose)) > Scalar(opts.tol);
  });
  r.mismatch_volume = std::max(volume(la, differ), volume(lb, differ));

  const bool limits_agree = r.mismatch_volume <= Scalar(opts.tol);
  const bool equivalent = r.upper_to_zero && limits_agree;
  const bool inequivalent = r.lower_separated || !limits_agree;
  if (equivalent && !inequivalent) {
    r.verdict = Verdict::Equivalent;
    r.reason = "upper bounds decay and limits agree off the deflated set";
  } else if (inequivalent && !equivalent) {
    r.verdict = Verdict::Inequivalent;
    r.reason = r.lower_separated ? "lower bounds stay above the margin" : "limits differ on a set of positive volume";
  } else {
    r.verdict = Verdict::Undecided;
    r.reason = equivalent ? "conflicting signals" : "upper bounds do not decay and lower bounds do not separate";
  }
  return r;
}

// ---------------------------------------------------------------------------
// Generators

enum class SequenceKind { G1, G2, G3, G4, HalfCollapse, Conformal };

inline const char* label(SequenceKind k) {
  static const char* names[] = {"g1", "g2", "g3", "g4", "half_collapse", "conformal"};
  return names[static_cast<int>(k)];
}

inline SequenceKind parseSequenceKind(const std::string& s) {
  for (auto k : {SequenceKind::G1, SequenceKind::G2, SequenceKind::G3, SequenceKind::G4, SequenceKind::HalfCollapse,
                 SequenceKind::Conformal})
    if (s == label(k)) return k;
  throw PreconditionError("unknown sequence kind '" + s + "'");
}

/// k = base^j for j = first .. last: the geometric subsequence used by the torus examples.
inline std::vector<double> geometricK(int first, int last, double base = 4) {
  std::vector<double> k;
  for (int j = first; j <= last; ++j) k.push_back(std::pow(base, j));
  return k;
}

/// One term of a generator at parameter k.
///   g1 diag(1, 1/k)   g2 diag(1/k, 1/k)   g3 diag(e^{kt}, e^{-2kt}), t the first coordinate
///   g4 diag(|cos k|, 1/k)
///   half_collapse  (1 + rho e^{-k}) I for x0 < P/2,  e^{-k} B otherwise
///   conformal      (1 + rho / k) I
/// with rho = sin(2 pi x1 / P1) / 2 (constant on one-dimensional grids) and B = diag(1 + cos(2 pi x1 / P1) / 2, 1, ..).
template <typename Scalar>
MetricField<Scalar> exampleTerm(SequenceKind kind, const TorusGrid& grid, double k) {
  const int n = grid.dim();
  const bool plane = kind == SequenceKind::G1 || kind == SequenceKind::G2 || kind == SequenceKind::G3 ||
                     kind == SequenceKind::G4;
  if (plane && n != 2) throw PreconditionError(std::string(label(kind)) + " is defined on two-dimensional tori");
  if (!(k > 0)) throw PreconditionError("generator parameter k must be positive");
  Tolerances tol;
  tol.eps_pd = static_cast<double>(std::numeric_limits<Scalar>::min());
  const Scalar kk(k), one(1);
  const Scalar two_pi = 2 * std::numbers::pi_v<Scalar>;
  auto wave = [&](std::size_t i, bool cosine) {
    if (n < 2) return Scalar(0);
    const Scalar y = Scalar(grid.coordinate(i, 1) / grid.period()[1]);
    return (cosine ? std::cos(two_pi * y) : std::sin(two_pi * y)) / 2;
  };
  return MetricField<Scalar>::sample(
      grid,
      [&](std::size_t i) -> SymMat<Scalar> {
        switch (kind) {
          case SequenceKind::G1: return SymMat<Scalar>::diagonal({one, one / kk});
          case SequenceKind::G2: return SymMat<Scalar>::diagonal({one / kk, one / kk});
          case SequenceKind::G3: {
            const Scalar t(grid.coordinate(i, 0));
            return SymMat<Scalar>::diagonal({std::exp(kk * t), std::exp(-2 * kk * t)});
          }
          case SequenceKind::G4: return SymMat<Scalar>::diagonal({std::abs(std::cos(kk)), one / kk});
          case SequenceKind::HalfCollapse: {
            if (grid.coordinate(i, 0) < grid.period()[0] / 2)
              return SymMat<Scalar>::scaledIdentity(n, one + wave(i, false) * std::exp(-kk));
            SymMat<Scalar> b = SymMat<Scalar>::scaledIdentity(n, std::exp(-kk));
            b.set(0, 0, (one + wave(i, true)) * std::exp(-kk));
            return b;
          }
          default: return SymMat<Scalar>::scaledIdentity(n, one + wave(i, false) / kk);
        }
      },
      FieldKind::Metric, tol);
}

template <typename Scalar>
MetricSequence<Scalar> exampleSequence(SequenceKind kind, const TorusGrid& grid, const std::vector<double>& k_values) {
  MetricSequence<Scalar> seq;
  seq.generator = label(kind);
  seq.k_values = k_values;
  for (double k : k_values) seq.terms.push_back(exampleTerm<Scalar>(kind, grid, k));
  return seq;
}

/// The constant sequence g, g, ..., g.
template <typename Scalar>
MetricSequence<Scalar> constantSequence(const MetricField<Scalar>& g, std::size_t len) {
  MetricSequence<Scalar> seq;
  seq.generator = "constant";
  for (std::size_t k = 0; k < len; ++k) seq.terms.push_back(g), seq.k_values.push_back(static_cast<double>(k + 1));
  return seq;
}

}  // namespace ebinlab
