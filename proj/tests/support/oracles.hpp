#pragma once

// Independent reference computations used by the tests. None of these share
// code with the library beyond the circle distance.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

#include "sct/circle.hpp"

namespace oracle {

/// Minimum-cost transport between two discrete distributions with cost
/// circle_dist, by successive shortest paths (Bellman-Ford on the residual
/// network). Exact up to rounding for small instances.
inline double transport_cost(const std::vector<double>& xa, const std::vector<double>& wa,
                             const std::vector<double>& xb, const std::vector<double>& wb) {
  const int na = static_cast<int>(xa.size());
  const int nb = static_cast<int>(xb.size());
  const int src = na + nb;
  const int dst = src + 1;
  const int V = dst + 1;
  struct Edge {
    int to;
    double cap;
    double cost;
    int rev;
  };
  std::vector<std::vector<Edge>> g(V);
  auto add = [&](int u, int v, double cap, double cost) {
    g[u].push_back({v, cap, cost, static_cast<int>(g[v].size())});
    g[v].push_back({u, 0.0, -cost, static_cast<int>(g[u].size()) - 1});
  };
  for (int i = 0; i < na; ++i) add(src, i, wa[i], 0.0);
  for (int j = 0; j < nb; ++j) add(na + j, dst, wb[j], 0.0);
  for (int i = 0; i < na; ++i) {
    for (int j = 0; j < nb; ++j) add(i, na + j, std::numeric_limits<double>::infinity(), sct::circle_dist(xa[i], xb[j]));
  }
  const double eps = 1e-15;
  double total = 0.0;
  for (int iter = 0; iter < 10000; ++iter) {
    std::vector<double> dist(V, std::numeric_limits<double>::infinity());
    std::vector<int> pv(V, -1), pe(V, -1);
    dist[src] = 0.0;
    for (int round = 0; round < V; ++round) {
      bool changed = false;
      for (int u = 0; u < V; ++u) {
        if (dist[u] == std::numeric_limits<double>::infinity()) continue;
        for (int e = 0; e < static_cast<int>(g[u].size()); ++e) {
          const Edge& ed = g[u][e];
          if (ed.cap > eps && dist[u] + ed.cost < dist[ed.to] - 1e-15) {
            dist[ed.to] = dist[u] + ed.cost;
            pv[ed.to] = u;
            pe[ed.to] = e;
            changed = true;
          }
        }
      }
      if (!changed) break;
    }
    if (pv[dst] < 0) break;
    double f = std::numeric_limits<double>::infinity();
    for (int v = dst; v != src; v = pv[v]) f = std::min(f, g[pv[v]][pe[v]].cap);
    for (int v = dst; v != src; v = pv[v]) {
      Edge& ed = g[pv[v]][pe[v]];
      ed.cap -= f;
      g[v][ed.rev].cap += f;
    }
    total += f * dist[dst];
  }
  return total;
}

/// Centered difference of a circle-valued function, lifted across the seam.
inline double circle_derivative(const std::function<double(double)>& f, double x, double h = 1e-6) {
  double d = f(x + h) - f(x - h);
  d -= std::nearbyint(d);
  return d / (2.0 * h);
}

/// Composite Simpson rule on [a, b] with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int k = 1; k < n; ++k) s += (k % 2 ? 4.0 : 2.0) * f(a + k * h);
  return s * h / 3.0;
}

/// CDF of the arcsine law on [0, 1/2] by quadrature of its density, after
/// the substitution x = s^2 / 2 that removes the singularity at 0; the
/// endpoint singularity at 1/2 is handled by symmetry.
inline double arcsine_cdf_by_quadrature(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 0.5) return 1.0;
  if (x > 0.25) return 1.0 - arcsine_cdf_by_quadrature(0.5 - x);
  // density 2/(pi sqrt(2x(1-2x))), x = s^2/2, dx = s ds -> 2/(pi sqrt(1 - s^2)) ds
  const double top = std::sqrt(2.0 * x);
  return simpson([](double s) { return 2.0 / (std::numbers::pi * std::sqrt(1.0 - s * s)); }, 0.0, top, 2000);
}

}  // namespace oracle
