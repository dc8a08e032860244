#pragma once

// Ready-made networks for the bundled scenarios. Cluster masses double as the
// population split ell of the two-cluster chimera examples: the kernel from
// cluster j carries strength m_j * alpha, so the mean-field shift is
// sum_j m_j alpha int h d(mu_j) and the finite-n update is its empirical
// counterpart.

#include <cmath>
#include <numbers>
#include <vector>

#include "sct/dynamics.hpp"
#include "sct/mean_field.hpp"
#include "sct/measures.hpp"

namespace sct::networks {

/// Doubling on both clusters, h(x,y) = -(1/10 pi) sin(6 pi x) cos(6 pi y).
inline NetworkSpec chimera1(double ell = 0.5, double alpha = 1.0) {
  NetworkSpec s;
  s.maps = {maps::doubling(), maps::doubling()};
  s.masses = {ell, 1.0 - ell};
  s.kernels = {{kernels::chimera1(ell * alpha), kernels::chimera1((1.0 - ell) * alpha)},
               {kernels::chimera1(ell * alpha), kernels::chimera1((1.0 - ell) * alpha)}};
  return s;
}

/// The fixed chimera state: half the mass on the 2-cycle {1/3, 2/3}, all of
/// the second cluster at 0.
inline State chimera1_state(double ell = 0.5) {
  return State({Measure::atomic({{CirclePoint(1.0 / 3.0), 0.5}, {CirclePoint(2.0 / 3.0), 0.5}}),
                Measure::dirac(0.0)},
               {ell, 1.0 - ell});
}

/// K = int u d(psi) for the arcsine law psi on [0, 1/2].
inline double chimera2_coupling_integral() {
  return measures::arcsine_i1_expectation([](double x) { return kernels::chimera2_u(x); });
}

/// alpha with alpha * ell * K = 1, which makes the fixed point 9/16
/// superattracting for the second cluster.
inline double chimera2_balanced_alpha(double ell = 0.5) {
  return 1.0 / (ell * chimera2_coupling_integral());
}

inline NetworkSpec chimera2(double alpha, double ell = 0.5, double width = kernels::chimera2_default_width) {
  NetworkSpec s;
  s.maps = {maps::chimera2_map(), maps::chimera2_map()};
  s.masses = {ell, 1.0 - ell};
  const double x = maps::chimera2_fixed_point;
  s.kernels = {{kernels::chimera2(ell * alpha, x, width), kernels::chimera2((1.0 - ell) * alpha, x, width)},
               {kernels::chimera2(ell * alpha, x, width), kernels::chimera2((1.0 - ell) * alpha, x, width)}};
  return s;
}

/// Doubling on two clusters; cluster 1 drives cluster 2 through
/// h21 = alpha sin(2 pi x)/(2 pi) (2 + cos(2 pi y)). With epsilon != 0 the
/// driving cluster also feels small kernels of the same shape.
inline NetworkSpec driven(double alpha, double epsilon = 0.0) {
  NetworkSpec s = NetworkSpec::uncoupled({maps::doubling(), maps::doubling()});
  s.kernels[1][0] = kernels::sine_product(alpha);
  if (epsilon != 0.0) {
    s.kernels[0][0] = kernels::sine_product(epsilon);
    s.kernels[0][1] = kernels::sine_product(epsilon);
  }
  return s;
}

/// n identical clusters of `map` with all-to-all diffusive sine coupling of
/// strength alpha / n each, so sum_j phi_ij'(0) = alpha.
inline NetworkSpec diffusive(std::size_t n, double alpha, const MapSpec& map = maps::doubling()) {
  NetworkSpec s = NetworkSpec::uncoupled(std::vector<MapSpec>(n, map));
  for (auto& row : s.kernels) {
    for (auto& k : row) k = kernels::diffusive_sine(alpha / static_cast<double>(n));
  }
  return s;
}

/// Sine circle maps with attracting fixed points (K = 1.5, rotations
/// `omegas`), coupled off-diagonally by phase-shifted sine kernels.
inline NetworkSpec weak_coupling(double strength, const std::vector<double>& omegas = {0.0, 0.05, -0.05},
                                 double k = 1.5, double beta = 0.3) {
  std::vector<MapSpec> m;
  for (double w : omegas) m.push_back(maps::sine_circle(w, k));
  NetworkSpec s = NetworkSpec::uncoupled(std::move(m));
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (i != j) s.kernels[i][j] = kernels::phase_shift(strength, beta);
    }
  }
  return s;
}

/// Fixed point of x + omega - K/(2 pi) sin(2 pi x) near 0, i.e.
/// sin(2 pi x) = 2 pi omega / K.
inline double sine_circle_fixed_point(double omega, double k) {
  return wrap_unit(std::asin(two_pi * omega / k) / two_pi);
}

}  // namespace sct::networks
