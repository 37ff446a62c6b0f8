#include "doctest.h"

#include "ebinlab/omega.hpp"

#include <cmath>
#include <numbers>

using namespace ebinlab;

namespace {

using Field = MetricField<double>;

OmegaOptions quick() {
  OmegaOptions o;
  o.distance.polyline_nodes = 0;
  o.distance.tuning_budget = 8;
  o.theta.interior_nodes = 8;
  return o;
}

std::vector<double> linearK(int first, int last) {
  std::vector<double> k;
  for (int j = first; j <= last; ++j) k.push_back(j);
  return k;
}

}  // namespace

TEST_CASE("generators sample the displayed matrices") {
  const auto grid = TorusGrid::unit(2, 8);
  const auto g1 = exampleTerm<double>(SequenceKind::G1, grid, 4);
  CHECK(g1 == Field::constant(grid, SymMat<double>::diagonal({1.0, 0.25})));
  const auto g2 = exampleTerm<double>(SequenceKind::G2, grid, 9);
  CHECK(volume(g2) == doctest::Approx(1.0 / 9).epsilon(1e-14));
  const auto g3 = exampleTerm<double>(SequenceKind::G3, grid, 1);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid.coordinate(i, 0);
    CHECK(g3[i](0, 0) == doctest::Approx(std::exp(t)).epsilon(1e-15));
    CHECK(g3[i](1, 1) == doctest::Approx(std::exp(-2 * t)).epsilon(1e-15));
    CHECK(g3[i](0, 1) == 0.0);
  }
  const auto g4 = exampleTerm<double>(SequenceKind::G4, grid, 3);
  CHECK(g4[5](0, 0) == doctest::Approx(std::abs(std::cos(3.0))));
  CHECK_THROWS_AS(parseSequenceKind("g5"), PreconditionError);
  CHECK(parseSequenceKind("half_collapse") == SequenceKind::HalfCollapse);
  CHECK_THROWS_AS(exampleTerm<double>(SequenceKind::G1, TorusGrid::unit(3, 4), 2), PreconditionError);
  CHECK(geometricK(1, 3) == std::vector<double>{4, 16, 64});
}

TEST_CASE("g3 at large k needs extended precision") {
  const auto grid = TorusGrid::unit(2, 8);
  CHECK_THROWS(exampleTerm<double>(SequenceKind::G3, grid, std::pow(4.0, 6)));
  const auto g = exampleTerm<long double>(SequenceKind::G3, grid, std::pow(4.0L, 6));
  const long double t = grid.coordinate(grid.size() - 1, 0);
  CHECK(std::isfinite(g[grid.size() - 1](0, 0)));
  CHECK(symDeterminant(g[grid.size() - 1]) == doctest::Approx(static_cast<double>(std::exp(-4096.0L * t))));
}

TEST_CASE("constant sequence") {
  const auto grid = TorusGrid::unit(2, 8);
  const auto g = Field::sample(grid, [&](std::size_t i) {
    return SymMat<double>::diagonal({1.5 + std::sin(2 * std::numbers::pi * grid.coordinate(i, 0)) / 2, 1.0});
  });
  const auto seq = constantSequence(g, 5);
  for (auto c : classifyPoints(seq)) CHECK(c == PointClass::Converged);
  const auto lim = omegaLimit(seq);
  CHECK(lim.kind() == FieldKind::Semimetric);
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK((lim[i] - g[i]).maxAbs() <= 1e-15);
  const auto r = omegaReport(seq, quick());
  CHECK(r.deflated_mask.empty());
  for (const auto& row : r.omega_partial_sums)
    for (double v : row) CHECK(v == 0.0);
  CHECK(r.summability == 0.0);
  CHECK(r.unconverged_fraction == 0.0);
  CHECK(r.counts[1] == grid.size());
}

TEST_CASE("torus families collapse everywhere") {
  const auto grid = TorusGrid::unit(2, 8);
  for (auto kind : {SequenceKind::G1, SequenceKind::G2, SequenceKind::G4}) {
    CAPTURE(label(kind));
    const auto seq = exampleSequence<double>(kind, grid, geometricK(1, 9));
    const auto cls = classifyPoints(seq);
    for (auto c : cls) CHECK(c == PointClass::Collapsed);
    const auto lim = omegaLimit(seq);
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(lim[i].isZero());
  }
}

TEST_CASE("slow collapse is left undecided") {
  const auto seq = exampleSequence<double>(SequenceKind::G1, TorusGrid::unit(2, 4), geometricK(1, 6));
  for (auto c : classifyPoints(seq)) CHECK(c == PointClass::Undecided);
  for (const auto& m : omegaLimit(seq).values()) CHECK(m.isZero());
}

TEST_CASE("half collapse: classes, limit, and volumes") {
  const auto grid = TorusGrid::unit(2, 16);
  const auto seq = exampleSequence<double>(SequenceKind::HalfCollapse, grid, linearK(1, 30));
  const auto r = omegaReport(seq, quick());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const bool left = grid.coordinate(i, 0) < 0.5;
    CHECK(r.point_class[i] == (left ? PointClass::Converged : PointClass::Collapsed));
    CHECK(r.deflated_mask[i] == !left);
    if (left)
      CHECK((r.omega_limit[i] - SymMat<double>::identity(2)).maxAbs() < 1e-6);
    else
      CHECK(r.omega_limit[i].isZero());
  }
  // limit volumes: half of the torus under I
  for (std::size_t m = 0; m < r.mask_names.size(); ++m) {
    CAPTURE(r.mask_names[m]);
    CHECK(std::abs(r.volume_series[m].back() - r.limit_volume[m]) < 1e-3);
  }
  CHECK(r.limit_volume[0] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(volume(seq.terms.back(), r.deflated_mask) < 1e-2);
  // Omega_N monotone and its L1 norm equal to the sum of Theta_M
  double running = 0;
  for (std::size_t n = 0; n < r.omega_l1.size(); ++n) {
    running += r.theta_m[n];
    CHECK(r.omega_l1[n] == doctest::Approx(running).epsilon(1e-12));
    if (n > 0)
      for (std::size_t i = 0; i < grid.size(); ++i) CHECK(r.omega_partial_sums[n][i] >= r.omega_partial_sums[n - 1][i]);
  }
  CHECK(r.summable_surrogate);
}

TEST_CASE("conformal generator converges to the identity") {
  const auto grid = TorusGrid::unit(2, 8);
  const auto seq = exampleSequence<double>(SequenceKind::Conformal, grid, geometricK(1, 8));
  const auto lim = omegaLimit(seq);
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK((lim[i] - SymMat<double>::identity(2)).maxAbs() < 1e-3);
  const auto r = omegaReport(seq, quick());
  CHECK(r.cauchy_surrogate);
  CHECK(r.summable_surrogate);
  CHECK(r.upper_tail.exponent == doctest::Approx(1.0).epsilon(0.05));
  for (std::size_t m = 0; m < r.mask_names.size(); ++m) CHECK(std::abs(r.volume_series[m].back() - r.limit_volume[m]) < 1e-3);
}

TEST_CASE("tail fits") {
  std::vector<double> u, k;
  for (int j = 1; j <= 6; ++j) k.push_back(std::pow(4.0, j)), u.push_back(3 * std::pow(4.0, -0.25 * j));
  const auto f = fitTail(u, k, 4);
  CHECK(f.decreasing);
  CHECK(f.ratio == doctest::Approx(std::pow(4.0, -0.25)));
  CHECK(f.exponent == doctest::Approx(0.25));
  u.back() = 0;
  CHECK(fitTail(u, k, 3).ratio == 0.0);
}

TEST_CASE("equivalence verdicts") {
  const auto grid = TorusGrid::unit(2, 8);
  EquivalenceOptions o;
  o.omega = quick();
  const auto k = geometricK(1, 6);
  const auto g1 = exampleSequence<double>(SequenceKind::G1, grid, k);
  const auto g2 = exampleSequence<double>(SequenceKind::G2, grid, k);
  const auto g4 = exampleSequence<double>(SequenceKind::G4, grid, k);
  const auto eye = constantSequence(Field::constant(grid, SymMat<double>::identity(2)), k.size());
  const auto two = constantSequence(Field::constant(grid, SymMat<double>::scaledIdentity(2, 2.0)), k.size());

  CHECK(equivalenceTest(g1, g1, o).verdict == Verdict::Equivalent);
  CHECK(equivalenceTest(g1, g2, o).verdict == Verdict::Equivalent);
  CHECK(equivalenceTest(g2, g4, o).verdict == Verdict::Equivalent);
  const auto sep = equivalenceTest(eye, two, o);
  CHECK(sep.verdict == Verdict::Inequivalent);
  CHECK(sep.termwise.back().lower == doctest::Approx(4 / std::sqrt(2.0) * (std::sqrt(2.0) - 1)).epsilon(1e-12));
  CHECK(equivalenceTest(g1, eye, o).verdict == Verdict::Inequivalent);
  CHECK_THROWS_AS(equivalenceTest(g1, exampleSequence<double>(SequenceKind::G1, grid, geometricK(1, 5)), o),
                  PreconditionError);
}

TEST_CASE("sequence validation") {
  const auto grid = TorusGrid::unit(2, 4);
  MetricSequence<double> s;
  s.terms = {Field::constant(grid, SymMat<double>::identity(2)), Field::constant(grid, SymMat<double>::identity(2))};
  CHECK_THROWS_AS(s.validate(), PreconditionError);
  s.terms.push_back(Field::constant(TorusGrid::unit(2, 8), SymMat<double>::identity(2)));
  CHECK_THROWS_AS(s.validate(), ShapeMismatchError);
}
