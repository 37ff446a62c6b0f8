#pragma once

// Seeded random metric fields and pairs on small tori.

#include "ebinlab/path.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace ebinlab {

/// exp(S(x)) with S a random trigonometric polynomial of low degree; entries of S are
/// bounded by `amplitude`.
inline MetricField<double> randomSmoothMetric(const TorusGrid& grid, std::mt19937_64& rng, double amplitude = 1.0) {
  const int n = grid.dim();
  const double two_pi = 2 * std::numbers::pi;
  std::uniform_real_distribution<double> unif(-1, 1);
  struct Mode {
    std::vector<int> k;
    std::vector<double> coeff;  // packed symmetric coefficient
    double phase;
  };
  std::vector<Mode> modes(3);
  const int packed = n * (n + 1) / 2;
  for (auto& m : modes) {
    for (int a = 0; a < n; ++a) m.k.push_back(static_cast<int>(rng() % 3));
    for (int j = 0; j < packed; ++j) m.coeff.push_back(amplitude * unif(rng) / 3);
    m.phase = two_pi * unif(rng);
  }
  return MetricField<double>::sample(grid, [&](std::size_t i) {
    Mat<double> s = Mat<double>::Zero(n, n);
    for (const auto& m : modes) {
      double arg = m.phase;
      for (int a = 0; a < n; ++a) arg += two_pi * m.k[a] * grid.coordinate(i, a) / grid.period()[a];
      const double c = std::cos(arg);
      int j = 0;
      for (int r = 0; r < n; ++r)
        for (int q = r; q < n; ++q, ++j) {
          s(r, q) += m.coeff[j] * c;
          if (q != r) s(q, r) += m.coeff[j] * c;
        }
    }
    return SymMat<double>::fromMatrix(symExp<double>(s));
  });
}

/// Smooth scalar with values in [lo, hi].
inline ScalarField<double> randomSmoothScalar(const TorusGrid& grid, std::mt19937_64& rng, double lo, double hi) {
  const double two_pi = 2 * std::numbers::pi;
  std::uniform_real_distribution<double> unif(0, 1);
  std::vector<double> k(grid.dim());
  for (auto& v : k) v = static_cast<double>(1 + rng() % 2);
  const double phase = two_pi * unif(rng), weight = unif(rng);
  return ScalarField<double>::sample(grid, [&](std::size_t i) {
    double arg = phase, arg2 = 0;
    for (int a = 0; a < grid.dim(); ++a) {
      const double x = grid.coordinate(i, a) / grid.period()[a];
      arg += two_pi * k[a] * x;
      arg2 += two_pi * x;
    }
    const double u = 0.5 + 0.5 * (weight * std::sin(arg) + (1 - weight) * std::cos(arg2));
    return lo + (hi - lo) * u;
  });
}

struct CorpusPair {
  std::string style;
  MetricField<double> g0, g1;
};

/// Deterministic mix of pair styles on 8x8 and 4x4x4 tori:
///   smooth      independent smooth fields
///   near        small smooth perturbation of a smooth field
///   local_scale g1 = c g0 on a random box, c in [1e-3, 1e2]
///   conformal   g1 = conformalExp(g0, tau) with smooth tau
///   collapse    constant diag(1, 1/k) or diag(1/k, 1/k) against a smooth field
///   spatial3    n = 3 smooth fields
inline std::vector<CorpusPair> randomPairCorpus(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0, 1);
  const TorusGrid g2 = TorusGrid::unit(2, 8);
  const TorusGrid g3 = TorusGrid::unit(3, 4);
  std::vector<CorpusPair> out;
  out.reserve(count);
  for (std::size_t c = 0; c < count; ++c) {
    switch (c % 6) {
      case 0:
        out.push_back({"smooth", randomSmoothMetric(g2, rng), randomSmoothMetric(g2, rng)});
        break;
      case 1: {
        auto a = randomSmoothMetric(g2, rng);
        auto p = randomSmoothMetric(g2, rng, 0.1);
        out.push_back({"near", a, MetricField<double>::sample(g2, [&](std::size_t i) {
                         const Mat<double> l = choleskyOf<double>(a[i].matrix())->matrixL();
                         return SymMat<double>::fromMatrix(l * p[i].matrix() * l.transpose());
                       })});
        break;
      }
      case 2: {
        auto a = randomSmoothMetric(g2, rng);
        const double factor = std::pow(10.0, -3 + 5 * unif(rng));
        const int x0 = static_cast<int>(rng() % 8), y0 = static_cast<int>(rng() % 8);
        const int w = 2 + static_cast<int>(rng() % 4), h = 2 + static_cast<int>(rng() % 4);
        out.push_back({"local_scale", a, MetricField<double>::sample(g2, [&](std::size_t i) {
                         const auto idx = g2.multiIndex(i);
                         const bool inside = (idx[0] - x0 + 8) % 8 < w && (idx[1] - y0 + 8) % 8 < h;
                         return inside ? factor * a[i] : a[i];
                       })});
        break;
      }
      case 3: {
        auto a = randomSmoothMetric(g2, rng);
        const auto tau = randomSmoothScalar(g2, rng, -1.5, 3.0);
        out.push_back({"conformal", a, conformalExp<double>(a, tau)});
        break;
      }
      case 4: {
        const double k = std::pow(4.0, 1 + static_cast<int>(rng() % 5));
        const auto target = rng() % 2 ? SymMat<double>::diagonal({1.0, 1.0 / k})
                                      : SymMat<double>::scaledIdentity(2, 1.0 / k);
        out.push_back({"collapse", randomSmoothMetric(g2, rng), MetricField<double>::constant(g2, target)});
        break;
      }
      default:
        out.push_back({"spatial3", randomSmoothMetric(g3, rng), randomSmoothMetric(g3, rng)});
    }
  }
  return out;
}

}  // namespace ebinlab
