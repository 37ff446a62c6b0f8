#include "ebinlab/suites.hpp"

#include "ebinlab/corpus.hpp"
#include "ebinlab/distance.hpp"
#include "ebinlab/omega.hpp"
#include "ebinlab/theta.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

namespace ebinlab {

namespace {

using Field = MetricField<double>;

CriterionResult named(const char* id, const char* title) {
  CriterionResult r;
  r.id = id, r.title = title;
  return r;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

SymMat<double> randomSymmetric(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  SymMat<double> m(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) m.set(i, j, normal(rng));
  return m;
}

SymMat<double> randomSpd(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Mat<double> a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = normal(rng);
  Mat<double> m = a * a.transpose();
  m += 0.1 * Mat<double>::Identity(n, n);
  return SymMat<double>::fromMatrix(m);
}

// rank 2, rank 1 or zero, cycling with the trial index
SymMat<double> randomPsd2(int trial, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  switch (trial % 8) {
    case 7: return SymMat<double>(2);
    case 3:
    case 5: {
      Vec<double> v(2);
      v << normal(rng), normal(rng);
      return SymMat<double>::fromMatrix(v * v.transpose());
    }
    default: return randomSpd(2, rng);
  }
}

// RK4 for g'' = g' g^-1 g' with state (g, g').
Mat<double> rk4Geodesic(const Mat<double>& g0, const Mat<double>& v0, int steps) {
  auto accel = [](const Mat<double>& g, const Mat<double>& v) -> Mat<double> {
    return v * g.inverse() * v;
  };
  Mat<double> g = g0, v = v0;
  const double dt = 1.0 / steps;
  for (int s = 0; s < steps; ++s) {
    const Mat<double> k1g = v, k1v = accel(g, v);
    const Mat<double> k2g = v + 0.5 * dt * k1v, k2v = accel(g + 0.5 * dt * k1g, v + 0.5 * dt * k1v);
    const Mat<double> k3g = v + 0.5 * dt * k2v, k3v = accel(g + 0.5 * dt * k2g, v + 0.5 * dt * k2v);
    const Mat<double> k4g = v + dt * k3v, k4v = accel(g + dt * k3g, v + dt * k3v);
    g += dt / 6 * (k1g + 2 * k2g + 2 * k3g + k4g);
    v += dt / 6 * (k1v + 2 * k2v + 2 * k3v + k4v);
  }
  return g;
}

CriterionResult c1(std::uint64_t seed) {
  auto r = named("C1", "SPD geodesic closed form: ODE residual and RK4 agreement");
  std::mt19937_64 rng(1001 + seed);
  double residual = 0, rk4 = 0;
  for (int n = 2; n <= 3; ++n)
    for (int trial = 0; trial < 100; ++trial) {
      const auto g0 = randomSpd(n, rng);
      const Mat<double> root = symSqrt<double>(g0.matrix());
      Mat<double> s = randomSymmetric(n, rng).matrix();
      s *= 1.5 / std::max(1.0, s.operatorNorm());
      const auto h = SymMat<double>::fromMatrix(root * s * root);
      const SpdPoint<double> p0(g0);
      auto at = [&](double t) { return spdGeodesic(p0, h, t).mat(); };
      for (int i = 1; i <= 10; ++i) {
        const double t = i / 11.0, dt = 1e-2;
        const auto g2m = at(t - 2 * dt), gm = at(t - dt), gc = at(t), gp = at(t + dt), g2p = at(t + 2 * dt);
        const SymMat<double> vel = (g2m - g2p + (gp - gm) * 8.0) * (1 / (12 * dt));
        const SymMat<double> acc = ((gp + gm) * 16.0 - g2p - g2m - gc * 30.0) * (1 / (12 * dt * dt));
        const SymMat<double> res = acc + christoffel(SpdPoint<double>(gc), vel, vel);
        residual = std::max(residual, res.maxAbs() / std::max(1.0, acc.maxAbs()));
      }
      const Mat<double> ode = rk4Geodesic(g0.matrix(), h.matrix(), 400);
      rk4 = std::max(rk4, (ode - at(1.0).matrix()).cwiseAbs().maxCoeff());
    }
  r.pass = residual < 1e-6 && rk4 < 1e-6;
  r.measured = "residual " + fmt(residual) + ", rk4 " + fmt(rk4);
  r.expected = "both < 1e-6";
  return r;
}

CriterionResult c2(std::uint64_t) {
  auto r = named("C2", "theta on conformal rays within 2% of (2/sqrt n)(1 - eps^(n/2))");
  double worst = 0;
  for (int n = 2; n <= 3; ++n) {
    const SpdPoint<double> ref(SymMat<double>::identity(n));
    const PsdPoint<double> id(SymMat<double>::identity(n));
    for (double eps : {0.5, 0.1, 0.01}) {
      const double exact = 2 / std::sqrt(double(n)) * (1 - std::pow(eps, n / 2.0));
      const auto est = thetaEstimate(ref, id, PsdPoint<double>(SymMat<double>::scaledIdentity(n, eps)));
      worst = std::max({worst, std::abs(est.value / exact - 1), std::abs(est.lower / exact - 1)});
    }
  }
  r.pass = worst <= 0.02;
  r.measured = "max relative deviation " + fmt(worst);
  r.expected = "<= 0.02";
  return r;
}

CriterionResult c3(std::uint64_t seed) {
  auto r = named("C3", "|sqrt det A - sqrt det B| <= (sqrt n / 2) theta on 1000 PSD pairs");
  std::mt19937_64 rng(1003 + seed);
  const SpdPoint<double> ref(SymMat<double>::identity(2));
  int violations = 0;
  double worst = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto a = randomPsd2(trial, rng), b = randomPsd2(trial + trial / 8, rng);
    const double theta = thetaEstimate(ref, PsdPoint<double>(a), PsdPoint<double>(b)).value;
    const double gap = std::abs(std::sqrt(std::max(0.0, symDeterminant(a))) - std::sqrt(std::max(0.0, symDeterminant(b))));
    const double bound = std::sqrt(2.0) / 2 * theta;
    if (gap > bound * (1 + 1e-12)) ++violations;
    if (bound > 0) worst = std::max(worst, gap / bound);
  }
  r.pass = violations == 0;
  r.measured = std::to_string(violations) + " violations, max ratio " + fmt(worst);
  r.expected = "0 violations";
  return r;
}

CriterionResult c4(std::uint64_t) {
  auto r = named("C4", "collapse constant: three-piece bound and diameter surrogate on the torus");
  const auto grid = TorusGrid::unit(2, 8);
  const double c = collapseConstant(2);
  double worst_tp = 0, worst_diam = 0;
  bool ok = true;
  for (double k : {16.0, 256.0}) {
    const auto eye = Field::constant(grid, SymMat<double>::identity(2));
    const auto g1 = Field::constant(grid, SymMat<double>::diagonal({1.0, 1 / k}));
    const auto g2 = Field::constant(grid, SymMat<double>::diagonal({1 / k, 1 / k}));
    const auto up = upperBound(eye, g1);
    double tp = std::numeric_limits<double>::infinity();
    for (const auto& cand : up.candidates)
      if (cand.family == "three_piece") tp = cand.length;
    const double tp_ratio = tp / (c * (1 + std::pow(k, -0.25)));
    const double diam_ratio = upperBound(g1, g2).value / (2 * c * std::pow(k, -0.25));
    worst_tp = std::max(worst_tp, tp_ratio);
    worst_diam = std::max(worst_diam, diam_ratio);
    ok = ok && tp_ratio <= 1.05 && diam_ratio <= 1.05;
  }
  r.pass = ok;
  r.measured = "three-piece / C(2)(1+k^-1/4) " + fmt(worst_tp) + ", upper(g1,g2) / 2C(2)k^-1/4 " + fmt(worst_diam);
  r.expected = "both <= 1.05 at k = 16, 256";
  return r;
}

CriterionResult c5(std::uint64_t seed) {
  auto r = named("C5", "lower bounds never exceed the upper bound on the random corpus");
  const auto corpus = randomPairCorpus(504, 1005 + seed);
  const DistanceOptions opts;
  int violations = 0;
  double worst = 0;
  for (const auto& p : corpus) {
    const auto up = upperBound(p.g0, p.g1, opts);
    const auto masks = lowerBoundMasks(p.g0, p.g1, opts.quantiles);
    const double lower = std::max(lowerBoundVolume(p.g0, p.g1, masks).value,
                                  lowerBoundTheta(p.g0, p.g1, masks, opts.symmetric_theta).value);
    // equality holds exactly for constant conformal factors; allow rounding only
    if (lower > up.value * (1 + 1e-12)) ++violations;
    if (up.value > 0) worst = std::max(worst, lower / up.value);
  }
  r.pass = violations == 0;
  r.measured = std::to_string(violations) + " violations in " + std::to_string(corpus.size()) +
               " pairs, max lower/upper " + fmt(worst);
  r.expected = "0 violations, >= 500 pairs";
  return r;
}

CriterionResult c6(std::uint64_t seed) {
  auto r = named("C6", "Theta inversion reproduces Theta through the quadratic");
  std::mt19937_64 rng(1006 + seed);
  std::uniform_real_distribution<double> logu(-10, 10);
  double worst = 0;
  auto check = [&](double theta, double v, int n) {
    const double d = invertThetaBound(theta, v, n);
    const double back = d * (std::sqrt(double(n)) * d + 2 * std::sqrt(v));
    if (theta > 0) worst = std::max(worst, std::abs(back - theta) / theta);
  };
  for (int trial = 0; trial < 3000; ++trial) check(std::exp(logu(rng)), std::exp(logu(rng)), 1 + trial % 3);
  for (const auto& p : randomPairCorpus(24, 1106 + seed)) {
    const auto masks = lowerBoundMasks(p.g0, p.g1, {0.5, 0.75, 0.9});
    const auto lb = lowerBoundTheta(p.g0, p.g1, masks);
    if (lb.kind == LowerKind::Theta) check(lb.theta, lb.volume, p.g0.dim());
  }
  r.pass = worst < 1e-10;
  r.measured = "max relative residual " + fmt(worst);
  r.expected = "< 1e-10";
  return r;
}

CriterionResult c7(std::uint64_t seed) {
  auto r = named("C7", "conformal route <= sqrt(n) ||tau - sigma||_g0 on a 32x32 grid");
  std::mt19937_64 rng(1007 + seed);
  const auto grid = TorusGrid::unit(2, 32);
  DistanceOptions opts;
  opts.three_piece = false;
  opts.polyline_nodes = 0;
  double worst = 0;
  int missing = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto g0 = randomSmoothMetric(grid, rng, 0.5);
    const auto sigma = randomSmoothScalar(grid, rng, -1.0, 1.0);
    const auto tau = randomSmoothScalar(grid, rng, -1.0, 2.0);
    ScalarField<double> diff = tau;
    for (std::size_t i = 0; i < diff.values.size(); ++i) diff.values[i] -= sigma.values[i];
    const double bound = std::sqrt(2.0) * l2NormScalar(g0, diff);
    const auto up = upperBound(conformalExp(g0, sigma), conformalExp(g0, tau), opts);
    double route = std::numeric_limits<double>::infinity();
    for (const auto& c : up.candidates)
      if (c.family == "conformal") route = c.length;
    if (!std::isfinite(route)) ++missing;
    worst = std::max(worst, route / bound);
  }
  r.pass = missing == 0 && worst <= 1.02;
  r.measured = "max route / bound " + fmt(worst) + ", undetected " + std::to_string(missing);
  r.expected = "<= 1.02, 0 undetected";
  return r;
}

CriterionResult c8(std::uint64_t) {
  auto r = named("C8", "pointwise classification and limit on the half-torus collapse");
  const auto grid = TorusGrid::unit(2, 32);
  std::vector<double> k;
  for (int j = 1; j <= 30; ++j) k.push_back(j);
  const auto seq = exampleSequence<double>(SequenceKind::HalfCollapse, grid, k);
  const auto cls = classifyPoints(seq);
  const auto lim = omegaLimit(seq);
  std::size_t counted = 0, correct = 0;
  double limit_err = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid.coordinate(i, 0);  // region boundaries at x = 0 and x = 1/2
    const double h = grid.period()[0] / grid.shape()[0];
    const double to_edge = std::min({x, std::abs(x - 0.5), 1 - x});
    if (to_edge < 2 * h) continue;
    ++counted;
    const bool left = x < 0.5;
    if (cls[i] == (left ? PointClass::Converged : PointClass::Collapsed)) ++correct;
    const auto expect = left ? SymMat<double>::identity(2) : SymMat<double>(2);
    limit_err = std::max(limit_err, (lim[i] - expect).maxAbs());
  }
  const double acc = double(correct) / double(counted);
  r.pass = acc >= 0.99 && limit_err <= 1e-6;
  r.measured = "accuracy " + fmt(acc) + " over " + std::to_string(counted) + " nodes, limit error " + fmt(limit_err);
  r.expected = "accuracy >= 0.99, limit error <= 1e-6";
  return r;
}

template <typename Scalar>
std::pair<double, double> volumeGaps(const MetricSequence<Scalar>& seq) {
  const DichotomyOptions opts;
  const auto cls = classifyPoints(seq, opts);
  const auto mask = deflatedMask(seq, cls, opts);
  const auto lim = omegaLimitFrom(seq, cls, mask, opts);
  double gap = 0;
  for (const auto& [name, y] : standardMasks(seq.grid()))
    gap = std::max(gap, static_cast<double>(std::abs(volume(seq.terms.back(), y) - volume(lim, y))));
  return {gap, static_cast<double>(volume(seq.terms.back(), mask))};
}

CriterionResult c9(std::uint64_t) {
  auto r = named("C9", "volume convergence to the omega-limit on every generator");
  const auto grid = TorusGrid::unit(2, 8);
  std::vector<std::pair<std::string, std::pair<double, double>>> rows;
  for (auto kind : {SequenceKind::G1, SequenceKind::G2, SequenceKind::G4, SequenceKind::Conformal})
    rows.emplace_back(label(kind), volumeGaps(exampleSequence<double>(kind, grid, geometricK(1, 11))));
  rows.emplace_back("g3", volumeGaps(exampleSequence<long double>(SequenceKind::G3, grid, geometricK(1, 6))));
  std::vector<double> lin;
  for (int j = 1; j <= 30; ++j) lin.push_back(j);
  rows.emplace_back("half_collapse",
                    volumeGaps(exampleSequence<double>(SequenceKind::HalfCollapse, TorusGrid::unit(2, 16), lin)));
  double gap = 0, deflated = 0;
  std::string worst_gap, worst_def;
  for (const auto& [name, v] : rows) {
    if (v.first >= gap) gap = v.first, worst_gap = name;
    if (v.second >= deflated) deflated = v.second, worst_def = name;
  }
  r.pass = gap < 1e-3 && deflated < 1e-2;
  r.measured = "max |Vol(Y,g_k) - Vol(Y,limit)| " + fmt(gap) + " (" + worst_gap + "), max Vol(deflated, g_k) " +
               fmt(deflated) + " (" + worst_def + ")";
  r.expected = "< 1e-3 and < 1e-2";
  return r;
}

CriterionResult c10(std::uint64_t) {
  auto r = named("C10", "torus families pairwise equivalent, each inequivalent to the constant I");
  using S = long double;
  const auto grid = TorusGrid::unit(2, 8);
  const auto k = geometricK(1, 6);
  EquivalenceOptions opts;
  opts.omega.distance.polyline_nodes = 0;
  opts.omega.distance.tuning_budget = 8;
  opts.omega.theta.interior_nodes = 8;
  const SequenceKind kinds[] = {SequenceKind::G1, SequenceKind::G2, SequenceKind::G3, SequenceKind::G4};
  std::vector<MetricSequence<S>> seqs;
  for (auto kind : kinds) seqs.push_back(exampleSequence<S>(kind, grid, k));
  const auto eye = constantSequence(MetricField<S>::constant(grid, SymMat<S>::identity(2)), k.size());
  int right = 0, total = 0;
  std::string wrong;
  auto tally = [&](const std::string& name, Verdict got, Verdict want) {
    ++total;
    if (got == want)
      ++right;
    else
      wrong += " " + name + "=" + label(got);
  };
  for (std::size_t a = 0; a < seqs.size(); ++a) {
    for (std::size_t b = a + 1; b < seqs.size(); ++b)
      tally(std::string(label(kinds[a])) + "/" + label(kinds[b]), equivalenceTest(seqs[a], seqs[b], opts).verdict,
            Verdict::Equivalent);
    tally(std::string(label(kinds[a])) + "/I", equivalenceTest(seqs[a], eye, opts).verdict, Verdict::Inequivalent);
  }
  r.pass = right == total;
  r.measured = std::to_string(right) + "/" + std::to_string(total) + " verdicts as expected" + wrong;
  r.expected = "6 equivalent + 4 inequivalent";
  return r;
}

CriterionResult c11(std::uint64_t seed) {
  auto r = named("C11", "upper <= K ||g1 - g0|| and norm ratios <= K in an amenable family");
  std::mt19937_64 rng(1011 + seed);
  const auto grid = TorusGrid::unit(2, 8);
  std::vector<TensorField<double>> family;
  for (int i = 0; i < 6; ++i) family.push_back(randomSmoothMetric(grid, rng, 0.8));
  const double kk = normEquivalenceConstant(amenabilityAudit(family));
  const auto eye = Field::constant(grid, SymMat<double>::identity(2));
  std::uniform_real_distribution<double> unif(0, 1);
  auto inside = [&] {
    std::vector<double> w(family.size());
    double total = 0;
    for (auto& v : w) total += (v = unif(rng));
    TensorField<double> f = (w[0] / total) * family[0];
    for (std::size_t i = 1; i < family.size(); ++i) f = f + (w[i] / total) * family[i];
    return Field(f, FieldKind::Metric);
  };
  double worst_upper = 0, worst_norm = 0;
  for (int pair = 0; pair < 50; ++pair) {
    const auto g0 = inside(), g1 = inside();
    worst_upper = std::max(worst_upper, upperBound(g0, g1).value / (kk * l2Norm(eye, g1 - g0)));
    for (int s = 0; s < 4; ++s) {
      const TensorField<double> h = randomSmoothMetric(grid, rng) - randomSmoothMetric(grid, rng);
      worst_norm = std::max(worst_norm, l2Norm(g0, h) / (kk * l2Norm(g1, h)));
    }
  }
  r.pass = worst_upper <= 1 && worst_norm <= 1;
  r.measured = "K " + fmt(kk) + ", max upper / K||g1-g0|| " + fmt(worst_upper) + ", max ||h||_g0 / K||h||_g1 " +
               fmt(worst_norm);
  r.expected = "both <= 1";
  return r;
}

CriterionResult c12(std::uint64_t) {
  auto r = named("C12", "boundary shift paths from diag(1, 0): finite, monotone, converged");
  const auto grid = TorusGrid::unit(2, 8);
  const auto g0 = Field::constant(grid, SymMat<double>::diagonal({1.0, 0.0}), FieldKind::Semimetric);
  double last = std::numeric_limits<double>::infinity(), change = 0;
  bool finite = true, monotone = true;
  std::string lengths;
  for (double delta : {0.1, 0.01, 0.001}) {
    const auto path = boundaryShiftPath<double>(g0, delta);
    const auto len = pathLength(path);
    finite = finite && std::isfinite(len.length) && len.graded;
    monotone = monotone && len.length < last;
    PathLengthOptions coarse;
    coarse.max_levels = std::max(0, len.levels - 1);
    const double prev = pathLength(path, coarse).length;
    change = std::max(change, std::abs(len.length - prev) / len.length);
    last = len.length;
    lengths += (lengths.empty() ? "" : ", ") + fmt(len.length);
  }
  r.pass = finite && monotone && change < 1e-3;
  r.measured = "lengths " + lengths + ", last refinement change " + fmt(change);
  r.expected = "finite, decreasing, change < 1e-3";
  return r;
}

using Runner = CriterionResult (*)(std::uint64_t);

const std::map<std::string, Runner>& runners() {
  static const std::map<std::string, Runner> m{{"C1", c1}, {"C2", c2},   {"C3", c3},   {"C4", c4},
                                               {"C5", c5}, {"C6", c6},   {"C7", c7},   {"C8", c8},
                                               {"C9", c9}, {"C10", c10}, {"C11", c11}, {"C12", c12}};
  return m;
}

}  // namespace

std::vector<std::string> suiteNames() { return {"spd", "bounds", "torus"}; }

std::vector<std::string> suiteCriteria(const std::string& suite) {
  if (suite == "spd") return {"C1", "C2", "C3"};
  if (suite == "bounds") return {"C5", "C6", "C7", "C11", "C12"};
  if (suite == "torus") return {"C4", "C8", "C9", "C10"};
  throw PreconditionError("unknown suite \"" + suite + "\" (spd, bounds, torus)");
}

CriterionResult runCriterion(const std::string& id, std::uint64_t seed) {
  const auto it = runners().find(id);
  if (it == runners().end()) throw PreconditionError("unknown criterion \"" + id + "\"");
  try {
    return it->second(seed);
  } catch (const Error& e) {
    auto r = named(id.c_str(), "");
    r.measured = std::string("error: ") + e.what();
    r.expected = "no error";
    return r;
  }
}

std::vector<CriterionResult> runSuite(const std::string& suite, std::uint64_t seed) {
  std::vector<CriterionResult> out;
  for (const auto& id : suiteCriteria(suite)) out.push_back(runCriterion(id, seed));
  return out;
}

std::string formatTable(const std::vector<CriterionResult>& rows) {
  std::ostringstream s;
  for (const auto& r : rows) {
    char id[8];
    std::snprintf(id, sizeof id, "%-4s", r.id.c_str());
    s << (r.pass ? "PASS " : "FAIL ") << id << r.title << " | measured: " << r.measured
      << " | expected: " << r.expected << "\n";
  }
  return s.str();
}

}  // namespace ebinlab
