#include "doctest.h"

#include "ebinlab/field.hpp"
#include "test_util.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace ebinlab;

namespace {

using Field = MetricField<double>;
using Tensor = TensorField<double>;

Field constantField(const TorusGrid& g, SymMat<double> v, FieldKind kind = FieldKind::Metric) {
  return Field::constant(g, v, kind);
}

// Smooth positive definite field with bounded coefficients.
Field smoothField(const TorusGrid& g, double phase, double amp) {
  const double tau = 2 * std::numbers::pi;
  return Field::sample(g, [&](std::size_t i) {
    const double x = g.coordinate(i, 0), y = g.coordinate(i, 1);
    SymMat<double> m(2);
    m.set(0, 0, 1.5 + amp * std::sin(tau * x + phase));
    m.set(1, 1, 1.2 + amp * std::cos(tau * y - phase));
    m.set(0, 1, 0.3 * amp * std::sin(tau * (x + y)));
    return m;
  });
}

}  // namespace

TEST_CASE("torus grid indexing wraps periodically") {
  const TorusGrid g({4, 6}, {1.0, 2.0});
  CHECK(g.size() == 24);
  CHECK(g.cellVolume() == doctest::Approx(1.0 / 4 * 2.0 / 6));
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto idx = g.multiIndex(i);
    CHECK(g.flatIndex(idx) == i);
    idx[0] += 4;
    idx[1] -= 12;
    CHECK(g.flatIndex(idx) == i);
  }
  CHECK(g.multiIndex(7)[0] == 1);
  CHECK(g.multiIndex(7)[1] == 1);
  CHECK(g.coordinate(0, 1) == doctest::Approx(1.0 / 6));
  CHECK_THROWS_AS(TorusGrid({3, 8}, {1.0, 1.0}), PreconditionError);
  CHECK_THROWS_AS(TorusGrid({8, 8}, {1.0}), ShapeMismatchError);
}

TEST_CASE("metric field kind is validated per node") {
  const auto g = TorusGrid::unit(2, 4);
  CHECK_THROWS_AS(constantField(g, SymMat<double>::diagonal({1.0, 0.0})), PreconditionError);
  CHECK_NOTHROW(constantField(g, SymMat<double>::diagonal({1.0, 0.0}), FieldKind::Semimetric));
  CHECK_THROWS_AS(constantField(g, SymMat<double>::diagonal({1.0, -1e-3}), FieldKind::Semimetric), PreconditionError);
  CHECK_THROWS_AS(Tensor(g, std::vector<SymMat<double>>(3, SymMat<double>::identity(2))), ShapeMismatchError);
}

TEST_CASE("l2_inner: constant integrands") {
  const auto grid = TorusGrid::unit(2, 8);
  const auto id = constantField(grid, SymMat<double>::identity(2));
  const Tensor h = Tensor::constant(grid, SymMat<double>::identity(2));
  CHECK(l2Inner(id, h, h) == doctest::Approx(2.0));
  const Tensor e11 = Tensor::constant(grid, SymMat<double>::diagonal({1.0, 0.0}));
  CHECK(l2Inner(id, e11, e11) == doctest::Approx(1.0));
  const auto other = TorusGrid::unit(2, 4);
  CHECK_THROWS_AS(l2Inner(id, Tensor::constant(other, SymMat<double>::identity(2)), h), ShapeMismatchError);
}

TEST_CASE("l2_inner: smooth periodic integrand matches Richardson-extrapolated refinement") {
  // Oracle: trapezoid sums on nested grids with two Richardson steps (h^2, h^4).
  const double tau = 2 * std::numbers::pi;
  auto integrand = [&](double x, double y) {
    const double g11 = 1.5 + 0.4 * std::sin(tau * x), g22 = 1.2 + 0.4 * std::cos(tau * y), g12 = 0.1 * std::sin(tau * (x + y));
    Eigen::Matrix2d g, h;
    g << g11, g12, g12, g22;
    h << std::sin(tau * x), std::cos(tau * y), std::cos(tau * y), 1 + std::sin(tau * (x - y));
    const Eigen::Matrix2d gi = test::adjugateInverse(g);
    return (gi * h * gi * h).trace() * std::sqrt(g.determinant());
  };
  auto endpointSum = [&](int n) {
    double s = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) s += integrand(double(i) / n, double(j) / n);
    return s / (n * n);
  };
  const double t1 = endpointSum(16), t2 = endpointSum(32), t3 = endpointSum(64);
  const double r1 = (4 * t2 - t1) / 3, r2 = (4 * t3 - t2) / 3;
  const double oracle = (16 * r2 - r1) / 15;

  const auto grid = TorusGrid::unit(2, 48);
  const auto g = Field::sample(grid, [&](std::size_t i) {
    const double x = grid.coordinate(i, 0), y = grid.coordinate(i, 1);
    SymMat<double> m(2);
    m.set(0, 0, 1.5 + 0.4 * std::sin(tau * x));
    m.set(1, 1, 1.2 + 0.4 * std::cos(tau * y));
    m.set(0, 1, 0.1 * std::sin(tau * (x + y)));
    return m;
  });
  const auto h = Tensor::sample(grid, [&](std::size_t i) {
    const double x = grid.coordinate(i, 0), y = grid.coordinate(i, 1);
    SymMat<double> m(2);
    m.set(0, 0, std::sin(tau * x));
    m.set(0, 1, std::cos(tau * y));
    m.set(1, 1, 1 + std::sin(tau * (x - y)));
    return m;
  });
  CHECK(std::abs(l2Inner(g, h, h) - oracle) < 1e-8);
}

TEST_CASE("l2_inner: symmetric, bilinear, positive") {
  std::mt19937_64 rng(17);
  const auto grid = TorusGrid::unit(2, 8);
  const auto g = smoothField(grid, 0.3, 0.5);
  auto randomTensor = [&] {
    return Tensor::sample(grid, [&](std::size_t) { return test::randomSym(2, rng); });
  };
  for (int trial = 0; trial < 10; ++trial) {
    const auto h = randomTensor(), k = randomTensor(), l = randomTensor();
    CHECK(l2Inner(g, h, k) == doctest::Approx(l2Inner(g, k, h)).epsilon(1e-13));
    CHECK(l2Inner(g, h + 2.0 * k, l) == doctest::Approx(l2Inner(g, h, l) + 2 * l2Inner(g, k, l)).epsilon(1e-10));
    CHECK(l2Inner(g, h, h) > 0);
  }
}

TEST_CASE("volume: values, additivity, monotonicity") {
  const auto grid = TorusGrid::unit(2, 8);
  CHECK(volume(constantField(grid, SymMat<double>::identity(2))) == doctest::Approx(1.0));
  for (double k : {4.0, 16.0, 256.0})
    CHECK(volume(constantField(grid, SymMat<double>::diagonal({1.0, 1 / k}))) == doctest::Approx(1 / std::sqrt(k)));

  // g = diag(e^{kt}, e^{-2kt}): sqrt(det) = e^{-kt/2}, integral 2(1 - e^{-k/2})/k.
  for (double k : {1.0, 4.0}) {
    const auto fine = TorusGrid::unit(2, 64);
    const auto g = Field::sample(fine, [&](std::size_t i) {
      const double t = fine.coordinate(i, 0);
      return SymMat<double>::diagonal({std::exp(k * t), std::exp(-2 * k * t)});
    });
    const double exact = 2 * (1 - std::exp(-k / 2)) / k;
    CHECK(volume(g) == doctest::Approx(exact).epsilon(1e-4));
  }

  const auto g = smoothField(grid, 0.1, 0.4);
  const auto masks = standardMasks(grid);
  const auto& half = masks[1].second;
  const auto& rest = masks[2].second;
  CHECK(std::abs(volume(g, half) + volume(g, rest) - volume(g)) <= 1e-15 * volume(g));
  CHECK(volume(g, masks[3].second) <= volume(g));
  CHECK(volume(g, RegionMask::none(grid)) == 0.0);
}

TEST_CASE("theta pseudometric: values and pseudometric properties") {
  const auto grid = TorusGrid::unit(2, 6);
  const auto id = constantField(grid, SymMat<double>::identity(2));
  const auto all = RegionMask::all(grid);
  CHECK(thetaPseudometric<double>(id, id, all).value == 0.0);
  for (double eps : {0.5, 0.1}) {
    const auto b = constantField(grid, SymMat<double>::scaledIdentity(2, eps));
    const auto th = thetaPseudometric<double>(id, b, all);
    CHECK(th.value == doctest::Approx(std::sqrt(2.0) * (1 - eps)).epsilon(1e-6));
    CHECK(th.lower == doctest::Approx(std::sqrt(2.0) * (1 - eps)).epsilon(1e-12));
    CHECK(thetaPseudometric<double>(id, b, RegionMask::none(grid)).value == 0.0);
  }

  const auto a = smoothField(grid, 0.0, 0.5), b = smoothField(grid, 1.0, 0.6), c = smoothField(grid, 2.0, 0.3);
  const auto masks = standardMasks(grid);
  const double full = thetaPseudometric<double>(a, b, all).value;
  CHECK(thetaPseudometric<double>(a, b, masks[1].second).value <= full);
  CHECK(thetaPseudometric<double>(a, b, masks[3].second).value <= full);
  CHECK(thetaPseudometric<double>(b, a, all).value == doctest::Approx(full).epsilon(1e-3));
  // triangle inequality on the certified lower side (the exact pointwise distance)
  const double ab = thetaPseudometric<double>(a, b, all).lower;
  const double bc = thetaPseudometric<double>(b, c, all).lower;
  const double ac = thetaPseudometric<double>(a, c, all).lower;
  CHECK(ac <= ab + bc + 1e-12);
}

TEST_CASE("theta pseudometric does not depend on the reference field") {
  std::mt19937_64 rng(31);
  const auto grid = TorusGrid::unit(2, 4);
  const auto twice = constantField(grid, SymMat<double>::scaledIdentity(2, 2.0));
  const auto all = RegionMask::all(grid);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = Field::sample(grid, [&](std::size_t) { return test::randomSpd(2, rng); });
    const auto b = Field::sample(grid, [&](std::size_t) { return test::randomSpd(2, rng); });
    const auto plain = thetaPseudometric<double>(a, b, all);
    const auto ref = thetaPseudometric<double>(a, b, all, {}, &twice);
    CHECK(ref.value == doctest::Approx(plain.value).epsilon(1e-4));
    CHECK(ref.lower == doctest::Approx(plain.lower).epsilon(1e-12));
  }
}

TEST_CASE("amenability audit and norm equivalence") {
  const auto grid = TorusGrid::unit(2, 4);
  const Tensor id = Tensor::constant(grid, SymMat<double>::identity(2));
  auto r1 = amenabilityAudit<double>({id});
  REQUIRE(r1.amenable.has_value());
  CHECK(r1.amenable->first == 1.0);
  CHECK(r1.amenable->second == 1.0);
  CHECK(normEquivalenceConstant(r1) == 1.0);

  std::vector<Tensor> family;
  for (int k = 1; k <= 10; ++k) family.push_back(Tensor::constant(grid, SymMat<double>::diagonal({1.0, 1.0 / k})));
  const auto r2 = amenabilityAudit(family);
  CHECK(r2.amenable->first == doctest::Approx(0.1));
  CHECK(r2.amenable->second == 1.0);
  CHECK(r2.det_inf >= std::pow(r2.lambda_min_inf, 2) - 1e-12);

  // convex combinations stay inside the audited bounds
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unif(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    const double t = unif(rng);
    const auto& a = family[rng() % family.size()];
    const auto& b = family[rng() % family.size()];
    const auto r = amenabilityAudit<double>({(1 - t) * a + t * b});
    CHECK(r.lambda_min_inf >= r2.lambda_min_inf - 1e-15);
    CHECK(r.coeff_sup <= r2.coeff_sup + 1e-15);
  }

  // Monte-Carlo ratio oracle for {I, 2I}
  const Field fi = constantField(grid, SymMat<double>::identity(2));
  const Field f2 = constantField(grid, SymMat<double>::scaledIdentity(2, 2.0));
  const auto r3 = amenabilityAudit<double>({fi, f2});
  const double k = normEquivalenceConstant(r3);
  for (int trial = 0; trial < 200; ++trial) {
    const auto h = Tensor::sample(grid, [&](std::size_t) { return test::randomSym(2, rng); });
    const double ratio = l2Norm(f2, h) / l2Norm(fi, h);
    CHECK(ratio >= 1 / k);
    CHECK(ratio <= k);
  }

  // K grows as the eigenvalue floor shrinks
  double last = 0;
  for (double delta : {1.0, 0.1, 0.01}) {
    auto r = r3;
    r.lambda_min_inf = delta;
    r.amenable->first = delta;
    const double kd = normEquivalenceConstant(r);
    CHECK(kd >= last);
    last = kd;
  }
  auto bad = r3;
  bad.amenable.reset();
  CHECK_THROWS_AS(normEquivalenceConstant(bad), PreconditionError);
}

TEST_CASE("deflated set") {
  const auto grid = TorusGrid::unit(2, 4);
  std::vector<Tensor> constant(5, Tensor::constant(grid, SymMat<double>::identity(2)));
  CHECK(deflatedSet(constant, 1e-6).empty());
  std::vector<Tensor> collapsing;
  for (int j = 1; j <= 12; ++j)
    collapsing.push_back(Tensor::constant(grid, SymMat<double>::diagonal({1.0, std::pow(4.0, -j)})));
  CHECK(deflatedSet(collapsing, 1e-6).count() == grid.size());
  collapsing.resize(9);  // 4^-9 > 1e-6
  CHECK(deflatedSet(collapsing, 1e-6).empty());
  CHECK_THROWS_AS(deflatedSet(std::vector<Tensor>{}, 1e-6), PreconditionError);
}
