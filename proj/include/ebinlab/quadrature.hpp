#pragma once

#include <cmath>
#include <map>
#include <numbers>
#include <utility>
#include <vector>

namespace ebinlab {

/// Gauss-Legendre rule mapped to [0, 1]: (nodes, weights).
template <typename Scalar>
std::pair<std::vector<Scalar>, std::vector<Scalar>> gaussLegendre01(int points) {
  std::vector<Scalar> nodes(points), weights(points);
  const long double pi = std::numbers::pi_v<long double>;
  for (int i = 0; i < points; ++i) {
    long double x = std::cos(pi * (i + 0.75L) / (points + 0.5L));
    long double dp = 0;
    for (int it = 0; it < 100; ++it) {
      long double p0 = 1, p1 = x;
      for (int k = 2; k <= points; ++k) {
        const long double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = points * (x * p1 - p0) / (x * x - 1);
      const long double dx = p1 / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-19L) break;
    }
    nodes[points - 1 - i] = static_cast<Scalar>((1 + x) / 2);
    weights[points - 1 - i] = static_cast<Scalar>(1 / ((1 - x * x) * dp * dp));
  }
  return {nodes, weights};
}

/// Composite Simpson on [a, b] with `panels` (even) subintervals.
template <typename Scalar, typename F>
Scalar compositeSimpson(F&& f, Scalar a, Scalar b, int panels) {
  if (panels % 2 != 0) ++panels;
  const Scalar h = (b - a) / panels;
  Scalar sum = f(a) + f(b);
  for (int i = 1; i < panels; ++i) sum += (i % 2 == 1 ? Scalar(4) : Scalar(2)) * f(a + h * i);
  return sum * h / 3;
}

/// Composite Gauss-Legendre on [a, b]; never evaluates the endpoints.
template <typename Scalar, typename F>
Scalar compositeGauss(F&& f, Scalar a, Scalar b, int panels, int points = 4) {
  static thread_local std::map<int, std::pair<std::vector<Scalar>, std::vector<Scalar>>> cache;
  auto it = cache.find(points);
  if (it == cache.end()) it = cache.emplace(points, gaussLegendre01<Scalar>(points)).first;
  const auto* rule = &it->second;
  const Scalar h = (b - a) / panels;
  Scalar sum(0);
  for (int p = 0; p < panels; ++p)
    for (int q = 0; q < points; ++q) sum += rule->second[q] * f(a + h * (p + rule->first[q]));
  return sum * h;
}

}  // namespace ebinlab
