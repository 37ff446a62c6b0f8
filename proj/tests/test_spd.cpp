#include "doctest.h"

#include "ebinlab/spd.hpp"
#include "ebinlab/theta.hpp"
#include "test_util.hpp"

#include <array>
#include <cmath>
#include <random>

using namespace ebinlab;
using test::randomSpd;
using test::randomSym;

namespace {

// Index-sum oracle for tr(g^-1 h g^-1 k), with g^-1 from the adjugate.
double innerOracle(const Eigen::MatrixXd& g, const Eigen::MatrixXd& h, const Eigen::MatrixXd& k) {
  const Eigen::MatrixXd gi = test::adjugateInverse(g);
  const int n = static_cast<int>(g.rows());
  double s = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int l = 0; l < n; ++l)
        for (int m = 0; m < n; ++m) s += gi(i, j) * h(j, l) * gi(l, m) * k(m, i);
  return s;
}

// Leibniz determinant, independent of the cofactor code in the library.
double leibnizDet(const Eigen::MatrixXd& m) {
  const int n = static_cast<int>(m.rows());
  std::array<int, 3> p{0, 1, 2};
  double det = 0;
  do {
    int inversions = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) inversions += p[i] > p[j];
    double term = inversions % 2 ? -1.0 : 1.0;
    for (int i = 0; i < n; ++i) term *= m(i, p[i]);
    det += term;
  } while (std::next_permutation(p.begin(), p.begin() + n));
  return det;
}

// RK4 on g'' = g' g^-1 g', state (g, v).
Eigen::MatrixXd rk4Geodesic(const Eigen::MatrixXd& g0, const Eigen::MatrixXd& v0, int steps) {
  auto accel = [](const Eigen::MatrixXd& g, const Eigen::MatrixXd& v) -> Eigen::MatrixXd {
    return v * g.inverse() * v;
  };
  Eigen::MatrixXd g = g0, v = v0;
  const double dt = 1.0 / steps;
  for (int s = 0; s < steps; ++s) {
    const Eigen::MatrixXd k1g = v, k1v = accel(g, v);
    const Eigen::MatrixXd k2g = v + 0.5 * dt * k1v, k2v = accel(g + 0.5 * dt * k1g, v + 0.5 * dt * k1v);
    const Eigen::MatrixXd k3g = v + 0.5 * dt * k2v, k3v = accel(g + 0.5 * dt * k2g, v + 0.5 * dt * k2v);
    const Eigen::MatrixXd k4g = v + dt * k3v, k4v = accel(g + dt * k3g, v + dt * k3v);
    g += dt / 6 * (k1g + 2 * k2g + 2 * k3g + k4g);
    v += dt / 6 * (k1v + 2 * k2v + 2 * k3v + k4v);
  }
  return g;
}

}  // namespace

TEST_CASE("inner: trivial values") {
  const auto i2 = SymMat<double>::identity(2);
  CHECK(inner(SpdPoint<double>(i2), i2, i2) == doctest::Approx(2.0));
  CHECK(inner(SpdPoint<double>(SymMat<double>::scaledIdentity(2, 2.0)), i2, i2) == doctest::Approx(0.5));
}

TEST_CASE("inner and inner_weighted agree with index summation") {
  std::mt19937_64 rng(11);
  for (int n = 1; n <= 3; ++n)
    for (int trial = 0; trial < 50; ++trial) {
      const auto g = randomSpd(n, rng), gref = randomSpd(n, rng);
      const auto h = randomSym(n, rng), k = randomSym(n, rng);
      const double expected = innerOracle(g.matrix(), h.matrix(), k.matrix());
      CHECK(inner(SpdPoint<double>(g), h, k) == doctest::Approx(expected).epsilon(1e-11));
      const double weight = leibnizDet(g.matrix()) / leibnizDet(gref.matrix());
      CHECK(innerWeighted(SpdPoint<double>(gref), SpdPoint<double>(g), h, k) ==
            doctest::Approx(expected * weight).epsilon(1e-11));
      CHECK(inner(SpdPoint<double>(g), h, k) == doctest::Approx(inner(SpdPoint<double>(g), k, h)).epsilon(1e-12));
      if (!h.isZero()) CHECK(inner(SpdPoint<double>(g), h, h) > 0);
    }
}

TEST_CASE("inner_weighted: det weight cancels conformal blow-up in dimension 2") {
  const auto i2 = SymMat<double>::identity(2);
  for (double eps : {1.0, 0.1, 1e-3}) {
    const SpdPoint<double> g(SymMat<double>::scaledIdentity(2, eps));
    CHECK(innerWeighted(SpdPoint<double>(i2), g, i2, i2) == doctest::Approx(2.0));
  }
}

TEST_CASE("singular base point is rejected") {
  CHECK_THROWS_AS(SpdPoint<double>(SymMat<double>::diagonal({1.0, 0.0})), DegeneratePointError);
  CHECK_THROWS_AS(SpdPoint<double>(SymMat<double>::diagonal({1.0, 1e-12})), DegeneratePointError);
  CHECK_THROWS_AS(PsdPoint<double>(SymMat<double>::diagonal({1.0, -1.0})), PreconditionError);
}

TEST_CASE("christoffel: trivial values and Koszul oracle") {
  const auto i2 = SymMat<double>::identity(2);
  const SpdPoint<double> id(i2);
  CHECK(christoffel(id, i2, i2).matrix().isApprox(-Eigen::Matrix2d::Identity()));
  std::mt19937_64 rng(5);
  const auto g = randomSpd(2, rng), k = randomSym(2, rng);
  CHECK(christoffel(SpdPoint<double>(g), SymMat<double>(2), k).isZero());

  // For constant vector fields on the open cone, Koszul gives
  // <Gamma(h,k), l>_g = 1/2 (D_h <k,l> + D_k <h,l> - D_l <h,k>), with D the derivative in g.
  for (int n = 2; n <= 3; ++n)
    for (int trial = 0; trial < 20; ++trial) {
      const auto gg = randomSpd(n, rng);
      const auto h = randomSym(n, rng), kk = randomSym(n, rng), l = randomSym(n, rng);
      const double step = 1e-5;
      auto deriv = [&](const SymMat<double>& dir, const SymMat<double>& a, const SymMat<double>& b) {
        const double plus = innerOracle((gg + step * dir).matrix(), a.matrix(), b.matrix());
        const double minus = innerOracle((gg - step * dir).matrix(), a.matrix(), b.matrix());
        return (plus - minus) / (2 * step);
      };
      const double koszul = 0.5 * (deriv(h, kk, l) + deriv(kk, h, l) - deriv(l, h, kk));
      const SymMat<double> gamma = christoffel(SpdPoint<double>(gg), h, kk);
      CHECK(innerOracle(gg.matrix(), gamma.matrix(), l.matrix()) == doctest::Approx(koszul).epsilon(1e-6));
    }
}

TEST_CASE("spd_geodesic: closed form, ODE residual and RK4 agreement") {
  const auto i2 = SymMat<double>::identity(2);
  const SpdPoint<double> id(i2);
  CHECK(spdGeodesic(id, i2, 0.0).mat() == i2);
  CHECK(spdGeodesic(id, i2, 1.0).mat().matrix().isApprox(std::exp(1.0) * Eigen::Matrix2d::Identity(), 1e-14));

  std::mt19937_64 rng(2024);
  for (int n = 2; n <= 3; ++n)
    for (int trial = 0; trial < 100; ++trial) {
      // velocities with |g0^-1/2 h g0^-1/2| <= 1.5 keep exp(t g0^-1 h) well scaled on [0, 1]
      const auto g0 = randomSpd(n, rng);
      const Eigen::MatrixXd root = symSqrt<double>(g0.matrix());
      Eigen::MatrixXd s = randomSym(n, rng).matrix();
      s *= 1.5 / std::max(1.0, s.operatorNorm());
      const auto h = SymMat<double>::fromMatrix(root * s * root);
      const SpdPoint<double> p0(g0);
      auto at = [&](double t) { return spdGeodesic(p0, h, t).mat(); };
      double residual = 0;
      for (int i = 1; i <= 10; ++i) {
        // fourth-order central stencils
        const double t = i / 11.0, dt = 1e-2;
        const SymMat<double> g2m = at(t - 2 * dt), gm = at(t - dt), gc = at(t), gp = at(t + dt), g2p = at(t + 2 * dt);
        const SymMat<double> vel = (g2m - g2p + (gp - gm) * 8.0) * (1 / (12 * dt));
        const SymMat<double> acc = ((gp + gm) * 16.0 - g2p - g2m - gc * 30.0) * (1 / (12 * dt * dt));
        const SymMat<double> r = acc + christoffel(SpdPoint<double>(gc), vel, vel);
        residual = std::max(residual, r.maxAbs() / std::max(1.0, acc.maxAbs()));
      }
      CHECK(residual < 1e-6);
      const Eigen::MatrixXd ode = rk4Geodesic(g0.matrix(), h.matrix(), 400);
      CHECK((ode - at(1.0).matrix()).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("spd_distance: values, symmetry, triangle inequality") {
  const auto i2 = SymMat<double>::identity(2);
  CHECK(spdDistance(SpdPoint<double>(i2), SpdPoint<double>(i2)) == 0.0);
  // Oracle: length of the straight segment I -> 4I, which is a reparameterized geodesic,
  // by a fine midpoint sum of sqrt(tr((c^-1 c')^2)).
  double oracle = 0;
  const int steps = 20000;
  for (int i = 0; i < steps; ++i) {
    const double t = (i + 0.5) / steps;
    const double c = 1 + 3 * t;
    oracle += std::sqrt(2.0 * (3 / c) * (3 / c)) / steps;
  }
  const double d = spdDistance(SpdPoint<double>(i2), SpdPoint<double>(SymMat<double>::scaledIdentity(2, 4.0)));
  CHECK(d == doctest::Approx(1.9605).epsilon(1e-4));
  CHECK(std::abs(d - oracle) < 0.01 * oracle);

  std::mt19937_64 rng(7);
  double worst = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const SpdPoint<double> a(randomSpd(2, rng)), b(randomSpd(2, rng)), c(randomSpd(2, rng));
    const double ab = spdDistance(a, b), bc = spdDistance(b, c), ac = spdDistance(a, c);
    worst = std::max(worst, ac - ab - bc);
    CHECK(spdDistance(b, a) == ab);
  }
  CHECK(worst <= 1e-9);
  CHECK_THROWS_AS(spdDistance(SpdPoint<double>(i2), SpdPoint<double>(SymMat<double>::identity(3))), ShapeMismatchError);
}

TEST_CASE("spd_distance never exceeds a straight-segment length") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = randomSpd(3, rng), b = randomSpd(3, rng);
    double seg = 0;
    const int steps = 2000;
    const Eigen::MatrixXd h = (b - a).matrix();
    for (int i = 0; i < steps; ++i) {
      const double t = (i + 0.5) / steps;
      const Eigen::MatrixXd c = (1 - t) * a.matrix() + t * b.matrix();
      seg += std::sqrt(innerOracle(c, h, h)) / steps;
    }
    CHECK(spdDistance(SpdPoint<double>(a), SpdPoint<double>(b)) <= seg * (1 + 1e-6));
  }
}

TEST_CASE("eigen_summary") {
  const auto s = eigenSummary(SymMat<double>::identity(2));
  CHECK(s.lambda_min == 1.0);
  CHECK(s.lambda_max == 1.0);
  CHECK(s.det == 1.0);
  CHECK(s.sqrt_det == 1.0);
  const auto d = eigenSummary(SymMat<double>::diagonal({1.0, 1.0 / 16}));
  CHECK(d.lambda_min == 1.0 / 16);
  CHECK(d.det == 1.0 / 16);
  std::mt19937_64 rng(3);
  for (int n = 1; n <= 3; ++n)
    for (int trial = 0; trial < 200; ++trial) {
      const auto m = randomSym(n, rng);
      const auto e = eigenSummary(m);
      CHECK(e.lambda_min <= e.lambda_max);
      CHECK(std::abs(e.det - leibnizDet(m.matrix())) < 1e-12 * std::max(1.0, m.maxAbs() * m.maxAbs() * m.maxAbs()));
      CHECK(std::abs(symDeterminant(m) - leibnizDet(m.matrix())) < 1e-12);
    }
}

TEST_CASE("eigenvalues keep relative accuracy for wildly scaled diagonals") {
  const auto m = SymMat<long double>::diagonal({std::exp(4096.0L), std::exp(-8192.0L)});
  const auto ev = symEigenvalues(m);
  CHECK(ev(0) == std::exp(-8192.0L));
  CHECK(symDeterminant(m) == std::exp(4096.0L) * std::exp(-8192.0L));
}

TEST_CASE("collapse length matches quadrature of the conformal ray") {
  for (int n = 1; n <= 3; ++n) {
    std::mt19937_64 rng(40 + n);
    const auto c = randomSpd(n, rng), gref = randomSpd(n, rng);
    // speed of (1-t) c under the weighted product, summed on a graded grid t = 1 - (1-u)^4
    double oracle = 0;
    const int steps = 200000;
    for (int i = 0; i < steps; ++i) {
      const double u = (i + 0.5) / steps;
      const double f = std::pow(1 - u, 4), df = 4 * std::pow(1 - u, 3);
      const Eigen::MatrixXd cm = f * c.matrix();
      const double w = leibnizDet(cm) / leibnizDet(gref.matrix());
      oracle += std::sqrt(innerOracle(cm, c.matrix(), c.matrix()) * w) * df / steps;
    }
    const double got = collapseLength(SpdPoint<double>(gref), PsdPoint<double>(c));
    CHECK(got == doctest::Approx(oracle).epsilon(1e-6));
    CHECK(got == doctest::Approx(2 / std::sqrt(double(n)) * std::sqrt(leibnizDet(c.matrix()) / leibnizDet(gref.matrix()))));
  }
}

TEST_CASE("theta: identical points, conformal rays, boundary identification") {
  const SpdPoint<double> ref(SymMat<double>::identity(2));
  const PsdPoint<double> id(SymMat<double>::identity(2));
  CHECK(thetaDistance(ref, id, id) == 0.0);
  for (double eps : {0.5, 0.1, 0.01}) {
    const PsdPoint<double> b(SymMat<double>::scaledIdentity(2, eps));
    const auto est = thetaEstimate(ref, id, b);
    const double exact = std::sqrt(2.0) * (1 - eps);
    CHECK(est.value == doctest::Approx(exact).epsilon(1e-6));
    CHECK(est.lower == doctest::Approx(exact).epsilon(1e-12));
    CHECK(est.route == ThetaRoute::Direct);
  }
  const PsdPoint<double> zero(SymMat<double>::diagonal({0.0, 0.0}));
  CHECK(thetaDistance(ref, id, zero) == doctest::Approx(std::sqrt(2.0)));
  const PsdPoint<double> s1(SymMat<double>::diagonal({1.0, 0.0})), s2(SymMat<double>::diagonal({0.0, 3.0}));
  CHECK(thetaDistance(ref, s1, s2) == 0.0);
  CHECK(thetaEstimate(ref, s1, s2).route == ThetaRoute::Boundary);
}

TEST_CASE("theta: sqrt-det Lipschitz bound and collapse bound on random pairs") {
  std::mt19937_64 rng(99);
  ThetaOptions opts;
  for (int n = 2; n <= 3; ++n) {
    const SpdPoint<double> ref(SymMat<double>::identity(n));
    for (int trial = 0; trial < 100; ++trial) {
      const auto a = randomSpd(n, rng), b = randomSpd(n, rng);
      const auto est = thetaEstimate(ref, PsdPoint<double>(a), PsdPoint<double>(b), opts);
      const double sa = std::sqrt(leibnizDet(a.matrix())), sb = std::sqrt(leibnizDet(b.matrix()));
      CHECK(std::abs(sa - sb) <= std::sqrt(double(n)) / 2 * est.value * (1 + 1e-9));
      CHECK(est.value <= 2 / std::sqrt(double(n)) * (sa + sb) * (1 + 1e-12));
      CHECK(est.lower <= est.value * (1 + 1e-9));
      const auto rev = thetaEstimate(ref, PsdPoint<double>(b), PsdPoint<double>(a), opts);
      CHECK(rev.value == doctest::Approx(est.value).epsilon(1e-3));
    }
  }
}

TEST_CASE("theta does not depend on which cone point plays the reference up to a constant factor") {
  // det(gref^-1 g) scales by det(gref)^-1, so theta scales by det(gref)^-1/2.
  std::mt19937_64 rng(123);
  const SpdPoint<double> ref1(SymMat<double>::identity(2)), ref2(SymMat<double>::scaledIdentity(2, 2.0));
  for (int trial = 0; trial < 10; ++trial) {
    const PsdPoint<double> a(randomSpd(2, rng)), b(randomSpd(2, rng));
    CHECK(thetaDistance(ref2, a, b) == doctest::Approx(thetaDistance(ref1, a, b) / 2).epsilon(1e-4));
  }
}

TEST_CASE("classifyPointSequence on known constructions") {
  std::vector<SymMat<double>> constant(9, SymMat<double>::identity(2));
  CHECK(classifyPointSequence(constant) == PointClass::Converged);
  std::vector<SymMat<double>> collapse, oscillating, converging, blowup;
  for (int j = 1; j <= 9; ++j) {
    const double k = std::pow(4.0, j);
    collapse.push_back(SymMat<double>::diagonal({1.0, 1 / k}));
    oscillating.push_back(SymMat<double>::diagonal({std::abs(std::cos(k)), 1 / k}));
    converging.push_back(SymMat<double>::scaledIdentity(2, 1 + 0.5 / k));
    blowup.push_back(SymMat<double>::diagonal({k, 1 / (k * k)}));
  }
  CHECK(classifyPointSequence(collapse) == PointClass::Collapsed);
  CHECK(classifyPointSequence(oscillating) == PointClass::Collapsed);
  CHECK(classifyPointSequence(converging) == PointClass::Converged);
  CHECK(classifyPointSequence(blowup) == PointClass::Collapsed);
  std::vector<SymMat<double>> wandering;
  for (int j = 0; j < 9; ++j) wandering.push_back(SymMat<double>::scaledIdentity(2, j % 2 ? 1.0 : 2.0));
  CHECK(classifyPointSequence(wandering) == PointClass::Undecided);
}

TEST_CASE("theta cone bound dominates elementary bounds and is never beaten by a path") {
  std::mt19937_64 rng(321);
  for (int n = 1; n <= 3; ++n) {
    const SpdPoint<double> ref(randomSpd(n, rng));
    PolylineProblem<double> prob;
    prob.dim = n;
    prob.node_weight = {1 / leibnizDet(ref.mat().matrix())};
    for (int trial = 0; trial < 40; ++trial) {
      const auto a = randomSpd(n, rng), b = randomSpd(n, rng);
      const PsdPoint<double> pa(a), pb(b);
      const double cone = thetaLowerBound(ref, pa, pb);
      CHECK(cone >= thetaElementaryBound(ref, pa, pb) * (1 - 1e-12));
      // random admissible polylines from a to b
      for (int rep = 0; rep < 5; ++rep) {
        std::vector<Vertex<double>> vs{{a.matrix()}};
        for (int i = 0; i < 3; ++i) vs.push_back({randomSpd(n, rng).matrix()});
        vs.push_back({b.matrix()});
        CHECK(polylineLength(prob, vs, 16) >= cone * (1 - 1e-9));
      }
      const auto est = thetaEstimate(ref, pa, pb);
      CHECK(est.value >= cone * (1 - 1e-9));
      CHECK(est.value <= cone * 1.01);  // piecewise-linear chord error
    }
  }
}

TEST_CASE("theta: rank-one input with a rounded positive eigenvalue") {
  // v v^T in floating point: lambda_min ~ 6e-17 > 0, so a Cholesky factor exists
  SymMat<double> a(2), b(2);
  a.set(0, 0, 3.3094768134409502), a.set(0, 1, 1.0265073717665272), a.set(1, 1, 0.31839394674454474);
  b.set(0, 0, 0.86851712156304028), b.set(0, 1, -1.2919136747578996), b.set(1, 1, 2.6931332599744437);
  const SpdPoint<double> ref(SymMat<double>::identity(2));
  const auto est = thetaEstimate(ref, PsdPoint<double>(a), PsdPoint<double>(b));
  CHECK(est.route == ThetaRoute::Boundary);
  CHECK(est.value == doctest::Approx(std::sqrt(2.0) * std::sqrt(symDeterminant(b))).epsilon(1e-6));
  CHECK(est.lower <= est.value);
}
