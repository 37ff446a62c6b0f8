#pragma once

// Grid-sampled symmetric tensor fields on flat tori, with midpoint quadrature.

#include "ebinlab/parallel.hpp"
#include "ebinlab/theta.hpp"

#include <array>
#include <map>
#include <optional>
#include <vector>

namespace ebinlab {

/// Uniform periodic grid on R^n / (period_1 Z x ... x period_n Z). Node i sits at the
/// cell center (i + 1/2) period / shape along each axis; flat indices are row-major.
class TorusGrid {
 public:
  TorusGrid() = default;
  TorusGrid(std::vector<int> shape, std::vector<double> period) : shape_(std::move(shape)), period_(std::move(period)) {
    if (shape_.empty() || shape_.size() > 3) throw PreconditionError("TorusGrid: dimension must be 1, 2 or 3");
    if (period_.size() != shape_.size()) throw ShapeMismatchError("TorusGrid: period and shape differ in length");
    for (int s : shape_)
      if (s < 4) throw PreconditionError("TorusGrid: every axis needs at least 4 nodes");
    for (double p : period_)
      if (!(p > 0) || !std::isfinite(p)) throw PreconditionError("TorusGrid: periods must be positive");
  }

  static TorusGrid unit(int dim, int nodes) { return {std::vector<int>(dim, nodes), std::vector<double>(dim, 1.0)}; }

  int dim() const { return static_cast<int>(shape_.size()); }
  const std::vector<int>& shape() const { return shape_; }
  const std::vector<double>& period() const { return period_; }

  std::size_t size() const {
    std::size_t n = 1;
    for (int s : shape_) n *= s;
    return n;
  }

  double cellVolume() const {
    double v = 1;
    for (int a = 0; a < dim(); ++a) v *= period_[a] / shape_[a];
    return v;
  }

  double totalVolume() const {
    double v = 1;
    for (double p : period_) v *= p;
    return v;
  }

  std::array<int, 3> multiIndex(std::size_t flat) const {
    std::array<int, 3> idx{0, 0, 0};
    for (int a = dim() - 1; a >= 0; --a) {
      idx[a] = static_cast<int>(flat % shape_[a]);
      flat /= shape_[a];
    }
    return idx;
  }

  /// Flat index of a multi-index, wrapping each component periodically.
  std::size_t flatIndex(std::array<int, 3> idx) const {
    std::size_t flat = 0;
    for (int a = 0; a < dim(); ++a) {
      const int s = shape_[a];
      flat = flat * s + static_cast<std::size_t>(((idx[a] % s) + s) % s);
    }
    return flat;
  }

  double coordinate(std::size_t flat, int axis) const {
    return (multiIndex(flat)[axis] + 0.5) * period_[axis] / shape_[axis];
  }

  friend bool operator==(const TorusGrid& a, const TorusGrid& b) {
    return a.shape_ == b.shape_ && a.period_ == b.period_;
  }

 private:
  std::vector<int> shape_;
  std::vector<double> period_;
};

inline void requireSameGrid(const TorusGrid& a, const TorusGrid& b, const char* where) {
  if (!(a == b)) throw ShapeMismatchError(std::string(where) + ": fields live on different grids");
}

/// Boolean membership per node.
class RegionMask {
 public:
  RegionMask() = default;
  RegionMask(TorusGrid grid, std::vector<std::uint8_t> member) : grid_(std::move(grid)), member_(std::move(member)) {
    if (member_.size() != grid_.size()) throw ShapeMismatchError("RegionMask: size does not match grid");
  }

  static RegionMask all(const TorusGrid& g) { return {g, std::vector<std::uint8_t>(g.size(), 1)}; }
  static RegionMask none(const TorusGrid& g) { return {g, std::vector<std::uint8_t>(g.size(), 0)}; }

  template <typename Pred>
  static RegionMask where(const TorusGrid& g, Pred&& pred) {
    std::vector<std::uint8_t> m(g.size());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = pred(i) ? 1 : 0;
    return {g, std::move(m)};
  }

  const TorusGrid& grid() const { return grid_; }
  bool operator[](std::size_t i) const { return member_[i] != 0; }
  void set(std::size_t i, bool v) { member_[i] = v ? 1 : 0; }
  std::size_t size() const { return member_.size(); }

  std::size_t count() const {
    std::size_t c = 0;
    for (auto m : member_) c += m;
    return c;
  }
  bool empty() const { return count() == 0; }

  RegionMask complement() const {
    RegionMask out = *this;
    for (auto& m : out.member_) m = !m;
    return out;
  }

  friend RegionMask operator|(const RegionMask& a, const RegionMask& b) {
    requireSameGrid(a.grid_, b.grid_, "RegionMask");
    RegionMask out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.member_[i] = a.member_[i] | b.member_[i];
    return out;
  }
  friend RegionMask operator&(const RegionMask& a, const RegionMask& b) {
    requireSameGrid(a.grid_, b.grid_, "RegionMask");
    RegionMask out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.member_[i] = a.member_[i] & b.member_[i];
    return out;
  }
  friend bool operator==(const RegionMask& a, const RegionMask& b) {
    return a.grid_ == b.grid_ && a.member_ == b.member_;
  }

 private:
  TorusGrid grid_;
  std::vector<std::uint8_t> member_;
};

template <typename Scalar>
struct ScalarField {
  TorusGrid grid;
  std::vector<Scalar> values;

  static ScalarField constant(const TorusGrid& g, Scalar v) { return {g, std::vector<Scalar>(g.size(), v)}; }

  template <typename F>
  static ScalarField sample(const TorusGrid& g, F&& f) {
    ScalarField out{g, std::vector<Scalar>(g.size())};
    for (std::size_t i = 0; i < g.size(); ++i) out.values[i] = f(i);
    return out;
  }
};

/// One symmetric tensor per node, no sign constraint (tangent vectors h, k).
template <typename Scalar>
class TensorField {
 public:
  TensorField() = default;
  TensorField(TorusGrid grid, std::vector<SymMat<Scalar>> values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_.size()) throw ShapeMismatchError("TensorField: value count does not match grid");
    for (const auto& v : values_) {
      if (v.dim() != grid_.dim()) throw ShapeMismatchError("TensorField: tensor dimension does not match grid");
      if (!v.allFinite()) throw PreconditionError("TensorField: non-finite entry");
    }
  }

  static TensorField constant(const TorusGrid& g, const SymMat<Scalar>& v) {
    return {g, std::vector<SymMat<Scalar>>(g.size(), v)};
  }

  template <typename F>
  static TensorField sample(const TorusGrid& g, F&& f) {
    std::vector<SymMat<Scalar>> v(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) v[i] = f(i);
    return {g, std::move(v)};
  }

  const TorusGrid& grid() const { return grid_; }
  const std::vector<SymMat<Scalar>>& values() const { return values_; }
  const SymMat<Scalar>& operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const { return values_.size(); }
  int dim() const { return grid_.dim(); }

  friend TensorField operator-(const TensorField& a, const TensorField& b) {
    requireSameGrid(a.grid_, b.grid_, "TensorField");
    std::vector<SymMat<Scalar>> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.values_[i] - b.values_[i];
    return {a.grid_, std::move(v)};
  }
  friend TensorField operator+(const TensorField& a, const TensorField& b) {
    requireSameGrid(a.grid_, b.grid_, "TensorField");
    std::vector<SymMat<Scalar>> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.values_[i] + b.values_[i];
    return {a.grid_, std::move(v)};
  }
  friend TensorField operator*(Scalar s, const TensorField& a) {
    std::vector<SymMat<Scalar>> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = s * a.values_[i];
    return {a.grid_, std::move(v)};
  }
  friend bool operator==(const TensorField& a, const TensorField& b) {
    return a.grid_ == b.grid_ && a.values_ == b.values_;
  }

  template <typename Other>
  TensorField<Other> cast() const {
    std::vector<SymMat<Other>> v(size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = values_[i].template cast<Other>();
    return {grid_, std::move(v)};
  }

 protected:
  TorusGrid grid_;
  std::vector<SymMat<Scalar>> values_;
};

template <typename Scalar>
using TangentField = TensorField<Scalar>;

enum class FieldKind { Metric, Semimetric };

inline const char* label(FieldKind k) { return k == FieldKind::Metric ? "metric" : "semimetric"; }

/// A (semi)metric field; the kind is checked node by node on construction.
template <typename Scalar>
class MetricField : public TensorField<Scalar> {
 public:
  MetricField() = default;
  MetricField(TorusGrid grid, std::vector<SymMat<Scalar>> values, FieldKind kind, const Tolerances& tol = {})
      : TensorField<Scalar>(std::move(grid), std::move(values)), kind_(kind), tol_(tol) {
    validate();
  }
  MetricField(const TensorField<Scalar>& t, FieldKind kind, const Tolerances& tol = {})
      : TensorField<Scalar>(t), kind_(kind), tol_(tol) {
    validate();
  }

  static MetricField constant(const TorusGrid& g, const SymMat<Scalar>& v, FieldKind kind = FieldKind::Metric,
                              const Tolerances& tol = {}) {
    return {g, std::vector<SymMat<Scalar>>(g.size(), v), kind, tol};
  }

  template <typename F>
  static MetricField sample(const TorusGrid& g, F&& f, FieldKind kind = FieldKind::Metric, const Tolerances& tol = {}) {
    return {TensorField<Scalar>::sample(g, std::forward<F>(f)), kind, tol};
  }

  FieldKind kind() const { return kind_; }
  const Tolerances& tolerances() const { return tol_; }

  template <typename Other>
  MetricField<Other> cast() const {
    return {TensorField<Scalar>::template cast<Other>(), kind_, tol_};
  }

 private:
  void validate() const {
    for (std::size_t i = 0; i < this->size(); ++i) {
      const Scalar lmin = symEigenvalues(this->values_[i])(0);
      const bool ok = kind_ == FieldKind::Metric ? lmin > Scalar(tol_.eps_pd) : lmin >= -Scalar(tol_.eps_psd);
      if (!ok)
        throw PreconditionError(std::string("MetricField: node ") + std::to_string(i) + " is not " +
                                (kind_ == FieldKind::Metric ? "positive definite" : "positive semidefinite"));
    }
  }

  FieldKind kind_ = FieldKind::Metric;
  Tolerances tol_;
};

namespace detail {

/// Sum with Neumaier compensation, accumulated in long double.
struct Accumulator {
  long double sum = 0, comp = 0;
  void add(long double x) {
    const long double t = sum + x;
    comp += std::fabs(sum) >= std::fabs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  long double value() const { return sum + comp; }
};

}  // namespace detail

/// (h, k)_g = sum_x tr(g^-1 h g^-1 k) sqrt(det g) * cell volume.
template <typename Scalar>
Scalar l2Inner(const MetricField<Scalar>& g, const TensorField<Scalar>& h, const TensorField<Scalar>& k) {
  if (g.kind() != FieldKind::Metric) throw PreconditionError("l2Inner: base field must be a metric");
  requireSameGrid(g.grid(), h.grid(), "l2Inner");
  requireSameGrid(g.grid(), k.grid(), "l2Inner");
  detail::Accumulator acc;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (h[i].isZero() || k[i].isZero()) continue;
    const auto llt = choleskyOf<Scalar>(g[i].matrix());
    if (!llt) throw DegeneratePointError("l2Inner: node " + std::to_string(i) + " is singular");
    const Mat<Scalar> x = llt->solve(h[i].matrix()), y = llt->solve(k[i].matrix());
    acc.add(static_cast<long double>((x * y).trace() * std::sqrt(choleskyDet(*llt))));
  }
  return static_cast<Scalar>(acc.value()) * Scalar(g.grid().cellVolume());
}

template <typename Scalar>
Scalar l2Norm(const MetricField<Scalar>& g, const TensorField<Scalar>& h) {
  return std::sqrt(std::max(l2Inner(g, h, h), Scalar(0)));
}

/// L2 norm of a scalar function with respect to mu_g: sqrt(sum f^2 sqrt(det g) cell).
template <typename Scalar>
Scalar l2NormScalar(const MetricField<Scalar>& g, const ScalarField<Scalar>& f) {
  requireSameGrid(g.grid(), f.grid, "l2NormScalar");
  detail::Accumulator acc;
  for (std::size_t i = 0; i < g.size(); ++i)
    acc.add(static_cast<long double>(f.values[i] * f.values[i] * std::sqrt(std::max(symDeterminant(g[i]), Scalar(0)))));
  return std::sqrt(static_cast<Scalar>(acc.value()) * Scalar(g.grid().cellVolume()));
}

/// Vol(Y, g) = sum_{x in Y} sqrt(det g(x)) * cell volume.
template <typename Scalar>
Scalar volume(const TensorField<Scalar>& g, const RegionMask& y) {
  requireSameGrid(g.grid(), y.grid(), "volume");
  detail::Accumulator acc;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (y[i]) acc.add(static_cast<long double>(std::sqrt(std::max(symDeterminant(g[i]), Scalar(0)))));
  return static_cast<Scalar>(acc.value()) * Scalar(g.grid().cellVolume());
}

template <typename Scalar>
Scalar volume(const TensorField<Scalar>& g) {
  return volume(g, RegionMask::all(g.grid()));
}

// ---------------------------------------------------------------------------
// Theta pseudometric

template <typename Scalar>
struct ThetaIntegral {
  Scalar value = 0;  // integral of the pointwise estimates (upper side)
  Scalar lower = 0;  // integral of the certified pointwise lower bounds
  bool certified = true;
  std::size_t direct_nodes = 0;
  std::size_t boundary_nodes = 0;
};

/// Pointwise theta estimates at every node against the reference field (Euclidean when absent).
/// Identical (reference, a, b) triples are evaluated once.
template <typename Scalar>
std::vector<ThetaEstimate<Scalar>> thetaNodewise(const TensorField<Scalar>& g0, const TensorField<Scalar>& g1,
                                                 const ThetaOptions& opts = {},
                                                 const MetricField<Scalar>* reference = nullptr) {
  requireSameGrid(g0.grid(), g1.grid(), "theta");
  if (reference) requireSameGrid(g0.grid(), reference->grid(), "theta");
  const int n = g0.dim();
  const SymMat<Scalar> eye = SymMat<Scalar>::identity(n);

  using Key = std::vector<Scalar>;
  std::map<Key, std::size_t> unique_index;
  std::vector<std::size_t> slot(g0.size());
  std::vector<std::size_t> representative;
  for (std::size_t i = 0; i < g0.size(); ++i) {
    Key key;
    const SymMat<Scalar>& r = reference ? (*reference)[i] : eye;
    for (const auto* m : {&r, &g0[i], &g1[i]})
      for (int j = 0; j < m->packed().size(); ++j) key.push_back(m->packed()(j));
    auto [it, inserted] = unique_index.emplace(std::move(key), representative.size());
    if (inserted) representative.push_back(i);
    slot[i] = it->second;
  }

  Tolerances loose = opts.tol;
  loose.eps_pd = 0.0;
  std::vector<ThetaEstimate<Scalar>> unique(representative.size());
  parallelFor(representative.size(), [&](std::size_t u) {
    const std::size_t i = representative[u];
    const SpdPoint<Scalar> ref(reference ? (*reference)[i] : eye, loose);
    unique[u] = thetaEstimate(ref, PsdPoint<Scalar>(g0[i], opts.tol), PsdPoint<Scalar>(g1[i], opts.tol), opts);
  });

  std::vector<ThetaEstimate<Scalar>> out(g0.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = unique[slot[i]];
  return out;
}

/// Integrates nodewise theta estimates over Y with the reference measure.
template <typename Scalar>
ThetaIntegral<Scalar> integrateTheta(const std::vector<ThetaEstimate<Scalar>>& nodes, const TorusGrid& grid,
                                     const RegionMask& y, const MetricField<Scalar>* reference = nullptr) {
  requireSameGrid(grid, y.grid(), "theta");
  ThetaIntegral<Scalar> out;
  detail::Accumulator value, lower;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!y[i]) continue;
    const Scalar w = reference ? std::sqrt(symDeterminant((*reference)[i])) : Scalar(1);
    value.add(static_cast<long double>(nodes[i].value * w));
    lower.add(static_cast<long double>(nodes[i].lower * w));
    out.certified = out.certified && nodes[i].certified;
    if (nodes[i].route == ThetaRoute::Direct) ++out.direct_nodes;
    if (nodes[i].route == ThetaRoute::Boundary) ++out.boundary_nodes;
  }
  const Scalar cell(grid.cellVolume());
  out.value = static_cast<Scalar>(value.value()) * cell;
  out.lower = static_cast<Scalar>(lower.value()) * cell;
  return out;
}

/// Theta_Y(g0, g1) = int_Y theta_x(g0(x), g1(x)) dmu_ref(x).
template <typename Scalar>
ThetaIntegral<Scalar> thetaPseudometric(const TensorField<Scalar>& g0, const TensorField<Scalar>& g1,
                                        const RegionMask& y, const ThetaOptions& opts = {},
                                        const MetricField<Scalar>* reference = nullptr) {
  return integrateTheta(thetaNodewise(g0, g1, opts, reference), g0.grid(), y, reference);
}

// ---------------------------------------------------------------------------
// Amenability

template <typename Scalar>
struct AmenabilityReport {
  Scalar lambda_min_inf = 0;
  Scalar lambda_max_sup = 0;
  Scalar coeff_sup = 0;
  Scalar det_inf = 0;
  Scalar det_sup = 0;
  int dim = 0;
  std::optional<std::pair<Scalar, Scalar>> amenable;  // (delta, C)
  std::optional<Scalar> quasi_amenable;                // C
};

/// Infima and suprema over every node of every field.
template <typename Scalar>
AmenabilityReport<Scalar> amenabilityAudit(const std::vector<TensorField<Scalar>>& fields) {
  if (fields.empty()) throw PreconditionError("amenabilityAudit: empty family");
  AmenabilityReport<Scalar> r;
  const Scalar inf = std::numeric_limits<Scalar>::infinity();
  r.lambda_min_inf = inf;
  r.det_inf = inf;
  r.lambda_max_sup = -inf;
  r.det_sup = -inf;
  r.dim = fields.front().dim();
  for (const auto& f : fields) {
    requireSameGrid(fields.front().grid(), f.grid(), "amenabilityAudit");
    for (const auto& v : f.values()) {
      const auto s = eigenSummary(v);
      r.lambda_min_inf = std::min(r.lambda_min_inf, s.lambda_min);
      r.lambda_max_sup = std::max(r.lambda_max_sup, s.lambda_max);
      r.det_inf = std::min(r.det_inf, symDeterminant(v));
      r.det_sup = std::max(r.det_sup, symDeterminant(v));
      r.coeff_sup = std::max(r.coeff_sup, v.maxAbs());
    }
  }
  r.quasi_amenable = r.coeff_sup;
  if (r.lambda_min_inf > Scalar(0)) r.amenable = std::make_pair(r.lambda_min_inf, r.coeff_sup);
  return r;
}

/// K with ||h||_{g0} <= K ||h||_{g1} for all g0, g1 in the convex hull of the audited family
/// (and against the Euclidean reference). Pointwise tr(g^-1 h g^-1 h) lies between lambda_max^-2
/// and lambda_min^-2 times tr(h^2), and det g between lambda_min^n and lambda_max^n; the eigenvalue
/// bounds survive convex combination, the sampled determinant range does not.
template <typename Scalar>
Scalar normEquivalenceConstant(const AmenabilityReport<Scalar>& r) {
  if (!r.amenable || !(r.lambda_min_inf > Scalar(0)))
    throw PreconditionError("normEquivalenceConstant: report does not certify amenability");
  const Scalar q = Scalar(r.dim) / Scalar(4);
  const Scalar a = std::pow(r.lambda_max_sup, q) / r.lambda_min_inf;
  const Scalar b = r.lambda_max_sup / std::pow(r.lambda_min_inf, q);
  return std::max(a, Scalar(1)) * std::max(b, Scalar(1));
}

/// Nodes where min_k det g_k(x) < delta_num: the finite-data surrogate of the deflated set.
template <typename Scalar>
RegionMask deflatedSet(const std::vector<TensorField<Scalar>>& seq, double delta_num) {
  if (seq.empty()) throw PreconditionError("deflatedSet: empty sequence");
  if (!(delta_num > 0)) throw PreconditionError("deflatedSet: delta_num must be positive");
  const TorusGrid& grid = seq.front().grid();
  for (const auto& f : seq) requireSameGrid(grid, f.grid(), "deflatedSet");
  return RegionMask::where(grid, [&](std::size_t i) {
    for (const auto& f : seq)
      if (symDeterminant(f[i]) < Scalar(delta_num)) return true;
    return false;
  });
}

/// Axis-aligned masks used by the diagnostics: full, first-axis half x < P/2, its complement,
/// and the centered box [P/4, 3P/4)^n.
inline std::vector<std::pair<std::string, RegionMask>> standardMasks(const TorusGrid& g) {
  auto half = RegionMask::where(g, [&](std::size_t i) { return g.coordinate(i, 0) < g.period()[0] / 2; });
  auto box = RegionMask::where(g, [&](std::size_t i) {
    for (int a = 0; a < g.dim(); ++a) {
      const double x = g.coordinate(i, a) / g.period()[a];
      if (x < 0.25 || x >= 0.75) return false;
    }
    return true;
  });
  return {{"full", RegionMask::all(g)}, {"half", half}, {"half_complement", half.complement()}, {"box", box}};
}

}  // namespace ebinlab
