#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "sct/dynamics.hpp"
#include "support/oracles.hpp"

using namespace sct;

namespace {

std::vector<MapSpec> builtin_maps() {
  return {maps::doubling(), maps::rotation(0.137), maps::sine_circle(0.0, 1.5), maps::sine_circle(0.05, 0.8),
          maps::chimera2_map()};
}

std::vector<CouplingKernel> builtin_kernels() {
  return {kernels::chimera1(1.0),     kernels::chimera1(0.5),          kernels::chimera2(0.7),
          kernels::sine_product(-0.5), kernels::sine_product(0.3, 2.0, 1.5, 3.0),
          kernels::diffusive_sine(0.4), kernels::von_mises_diffusive(0.6, 1.3), kernels::phase_shift(0.2, 0.3)};
}

bool near_seam(const MapSpec& m, double x, double h) {
  for (double s : m.seams()) {
    if (circle_dist(x, s) < 4.0 * h) return true;
  }
  return false;
}

}  // namespace

TEST(Maps, Examples) {
  EXPECT_DOUBLE_EQ(maps::doubling().eval(1.0 / 3.0), 2.0 / 3.0);
  EXPECT_EQ(maps::doubling().eval(0.0), 0.0);
  EXPECT_EQ(maps::doubling().eval(CirclePoint(0.75)).value(), 0.5);
  const MapSpec f2 = maps::chimera2_map();
  EXPECT_EQ(f2.eval(9.0 / 16.0), 9.0 / 16.0);
  EXPECT_EQ(maps::chimera2_fixed_point, 0.5625);
  EXPECT_DOUBLE_EQ(f2.deriv(9.0 / 16.0), -6.0);
}

TEST(Maps, Chimera2FixedPointFromRootFinding) {
  // Bisection on (4x-3)^2 - x over (1/2, 1), where the only sign change is x*.
  double lo = 0.51, hi = 0.99;
  auto g = [](double x) { return (4.0 * x - 3.0) * (4.0 * x - 3.0) - x; };
  for (int k = 0; k < 200; ++k) {
    double mid = 0.5 * (lo + hi);
    (g(lo) * g(mid) <= 0.0 ? hi : lo) = mid;
  }
  EXPECT_NEAR(lo, maps::chimera2_fixed_point, 1e-14);
}

TEST(Maps, DerivativesMatchFiniteDifferences) {
  const double h = 1e-6;
  for (const auto& m : builtin_maps()) {
    for (int k = 0; k < 1000; ++k) {
      const double x = (k + 0.5) / 1000.0;
      if (near_seam(m, x, h)) continue;
      const double fd = oracle::circle_derivative([&](double t) { return m.eval(t); }, x, h);
      EXPECT_NEAR(m.deriv(x), fd, 1e-5) << m.name() << " at " << x;
      if (m.has_deriv2()) {
        const double fd2 = (m.deriv(x + h) - m.deriv(x - h)) / (2.0 * h);
        EXPECT_NEAR(m.deriv2(x), fd2, 1e-4) << m.name() << " second derivative at " << x;
      }
    }
  }
}

TEST(Maps, Chimera2MapKeepsLeftHalfInvariant) {
  const MapSpec f = maps::chimera2_map();
  for (int k = 0; k <= 10000; ++k) {
    const double x = 0.5 * k / 10000.0;
    const double y = f.eval(x);
    EXPECT_TRUE(y <= 0.5) << x << " -> " << y;
  }
  // Continuous across the seams on the circle.
  EXPECT_NEAR(circle_dist(f.eval(0.5 - 1e-12), f.eval(0.5 + 1e-12)), 0.0, 1e-10);
  EXPECT_NEAR(circle_dist(f.eval(1.0 - 1e-12), f.eval(0.0)), 0.0, 1e-10);
}

TEST(Maps, MissingSecondDerivativeThrows) {
  MapSpec m("plain", {}, [](double x) { return x; }, [](double) { return 1.0; });
  EXPECT_FALSE(m.has_deriv2());
  EXPECT_THROW(m.deriv2(0.1), std::logic_error);
}

TEST(Kernels, ChimeraKernelVanishesOnTheChimeraSupport) {
  const auto h = kernels::chimera1(1.0);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    const double y = u(rng);
    EXPECT_NEAR(h.eval(0.0, y), 0.0, 1e-16);
    EXPECT_NEAR(h.eval(1.0 / 3.0, y), 0.0, 1e-15);
    EXPECT_NEAR(h.eval(2.0 / 3.0, y), 0.0, 1e-15);
  }
}

TEST(Kernels, ChimeraKernelSlopeAtOrigin) {
  const auto h = kernels::chimera1(1.0);
  EXPECT_NEAR(h.dx(0.0, 0.0), -0.6, 1e-15);
  const double fd = (h.eval(1e-6, 0.0) - h.eval(-1e-6, 0.0)) / 2e-6;
  EXPECT_NEAR(fd, -0.6, 1e-9);
  // phi'(x) = 0 where cos(6 pi x) = 0.
  EXPECT_NEAR(h.dx(1.0 / 12.0, 0.37), 0.0, 1e-15);
}

TEST(Kernels, DerivativesMatchFiniteDifferences) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double h = 1e-6;
  for (const auto& k : builtin_kernels()) {
    for (int t = 0; t < 500; ++t) {
      const double x = u(rng), y = u(rng);
      const double fd = (k.eval(x + h, y) - k.eval(x - h, y)) / (2.0 * h);
      EXPECT_NEAR(k.dx(x, y), fd, 1e-5) << k.name() << " at (" << x << ", " << y << ")";
    }
  }
}

TEST(Kernels, SeparableTermsReproduceTheKernel) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& k : builtin_kernels()) {
    if (!k.has_terms()) continue;
    for (int t = 0; t < 200; ++t) {
      const double x = u(rng), y = u(rng);
      double s = 0.0, ds = 0.0;
      for (const auto& term : k.terms()) {
        s += term.phi(x) * term.psi(y);
        ds += term.dphi(x) * term.psi(y);
      }
      EXPECT_NEAR(k.eval(x, y), k.strength() * s, 1e-12) << k.name();
      EXPECT_NEAR(k.dx(x, y), k.strength() * ds, 1e-12) << k.name();
    }
  }
}

TEST(Kernels, DiffusiveKernelsDependOnTheDifference) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& k : builtin_kernels()) {
    if (k.structure() != KernelStructure::diffusive) continue;
    EXPECT_EQ(k.diffusive_profile(0.0), 0.0) << k.name();
    EXPECT_GT(k.diffusive_slope(), 0.0) << k.name();
    const double fd = (k.diffusive_profile(1e-6) - k.diffusive_profile(-1e-6)) / 2e-6;
    EXPECT_NEAR(k.diffusive_slope(), fd, 1e-6) << k.name();
    for (int t = 0; t < 200; ++t) {
      const double x = u(rng), y = u(rng);
      EXPECT_NEAR(k.eval(x, y), k.diffusive_profile(y - x), 1e-12) << k.name();
      EXPECT_NEAR(k.eval(x, x), 0.0, 1e-15) << k.name();
    }
  }
  EXPECT_THROW(kernels::chimera1(1.0).diffusive_slope(), std::logic_error);
}

TEST(Kernels, Chimera2AuxiliaryFunctions) {
  const double xs = maps::chimera2_fixed_point;
  const double w = kernels::chimera2_default_width;
  EXPECT_EQ(kernels::chimera2_v(xs, xs, w), 0.0);
  EXPECT_DOUBLE_EQ(kernels::chimera2_dv(xs, xs, w), -1.0);
  for (int k = 0; k <= 1000; ++k) {
    const double x = 0.5 * k / 1000.0;
    EXPECT_EQ(kernels::chimera2_v(x, xs, w), 0.0) << x;
    if (k > 0) {
      EXPECT_EQ(kernels::chimera2_u(0.5 + x), 0.0) << x;
    }
    if (k > 0 && k < 1000) {
      EXPECT_GT(kernels::chimera2_u(x), 0.0) << x;
    }
  }
  EXPECT_LT(kernels::chimera2_u(0.5), 1e-30);
  // u is C1 across 1/2: both one-sided slopes vanish.
  EXPECT_NEAR((kernels::chimera2_u(0.5) - kernels::chimera2_u(0.5 - 1e-7)) / 1e-7, 0.0, 1e-5);
}

TEST(Kernels, SineProductDrive) {
  const auto h = kernels::sine_product(1.0);
  EXPECT_EQ(h.eval(0.0, 0.3), 0.0);
  EXPECT_NEAR(h.dx(0.0, 0.25), 2.0, 1e-15);  // phi'(0) psi(1/4) = 1 * 2
  const double mean_psi = oracle::simpson([&](double y) { return h.terms()[0].psi(y); }, 0.0, 1.0);
  EXPECT_NEAR(mean_psi, 2.0, 1e-12);
}

TEST(Kernels, ZeroAndScaling) {
  EXPECT_TRUE(kernels::zero().is_zero());
  EXPECT_TRUE(kernels::chimera1(0.0).is_zero());
  const auto k = kernels::chimera1(0.5).scaled(4.0);
  EXPECT_EQ(k.strength(), 2.0);
  EXPECT_DOUBLE_EQ(k.eval(0.1, 0.2), 2.0 * kernels::chimera1(1.0).eval(0.1, 0.2));
}

TEST(Resolvers, ByName) {
  EXPECT_EQ(make_map("doubling", {}).name(), "doubling");
  EXPECT_DOUBLE_EQ(make_map("sine_circle", {{"omega", 0.1}, {"K", 1.2}}).deriv(0.0), 1.0 - 1.2);
  EXPECT_THROW(make_map("tent", {}), std::invalid_argument);
  EXPECT_THROW(make_map("sine_circle", {{"omega", 0.1}}), std::invalid_argument);
  EXPECT_EQ(make_kernel("chimera1", {{"strength", 0.5}}).strength(), 0.5);
  EXPECT_EQ(make_kernel("von_mises_diffusive", {{"kappa", 2.0}}).strength(), 1.0);
  EXPECT_THROW(make_kernel("phase_shift", {}), std::invalid_argument);
  EXPECT_THROW(make_kernel("nope", {}), std::invalid_argument);
}
