#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "sct/mean_field.hpp"
#include "sct/networks.hpp"
#include "support/oracles.hpp"

using namespace sct;

namespace {

double spread(const TorusPoint& x) { return smallest_covering_arc(std::span<const double>(x)).length(); }

std::string error_message(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

void expect_report_consistent(const StabilityReport& r) {
  EXPECT_EQ(r.holds, r.lambda_est < 1.0) << r.criterion;
  bool all = true;
  for (const auto& [name, slack] : r.margins) all = all && slack > 0.0;
  EXPECT_EQ(r.holds, all) << r.criterion;
}

}  // namespace

TEST(NetworkSpec, Validation) {
  NetworkSpec s = NetworkSpec::uncoupled({maps::doubling(), maps::doubling()});
  EXPECT_NO_THROW(s.validate());
  s.masses = {0.5, 0.6};
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s.masses = {0.5, 0.5};
  s.kernels.pop_back();
  EXPECT_THROW(s.validate(), std::invalid_argument);
  EXPECT_THROW(State({}), std::invalid_argument);
  EXPECT_THROW(State({Measure::dirac(0.0)}, {0.5}), std::invalid_argument);
  EXPECT_NEAR(State({Measure::dirac(0.0), Measure::dirac(0.1), Measure::dirac(0.2)}).masses[2], 1.0 / 3.0, 1e-16);
}

TEST(CoupledMap, ChimeraStateValues) {
  const NetworkSpec spec = networks::chimera1();
  const State st = networks::chimera1_state();
  for (std::size_t i = 0; i < 2; ++i) {
    CoupledMap F = coupled_map(spec, st, i);
    EXPECT_NEAR(F.eval(0.0), 0.0, 1e-15);
    EXPECT_NEAR(F.eval(1.0 / 3.0), 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(F.eval(2.0 / 3.0), 1.0 / 3.0, 1e-15);
  }
}

TEST(CoupledMap, ZeroKernelsGiveTheBareMap) {
  NetworkSpec spec = NetworkSpec::uncoupled({maps::sine_circle(0.1, 0.7), maps::doubling()});
  State st({measures::lebesgue(64), Measure::dirac(0.3)});
  CoupledMap F = coupled_map(spec, st, 0);
  for (double x : {0.0, 0.17, 0.5, 0.93}) {
    EXPECT_EQ(F.eval(x), spec.maps[0].eval(x));
    EXPECT_EQ(F.deriv(x), spec.maps[0].deriv(x));
  }
}

TEST(CoupledMap, DrivenClusterSlopeAtZero) {
  // Mean of psi = 2 + cos(2 pi y) under Lebesgue, by Simpson's rule.
  const double mean_psi = oracle::simpson([](double y) { return 2.0 + std::cos(two_pi * y); }, 0.0, 1.0);
  for (double alpha : {-0.5, -0.3, 0.0, 0.25}) {
    NetworkSpec spec = networks::driven(alpha);
    State st({measures::lebesgue(), Measure::dirac(0.0)});
    CoupledMap F = coupled_map(spec, st, 1);
    EXPECT_NEAR(F.deriv(0.0), 2.0 * (1.0 + alpha * mean_psi * 1.0), 1e-9) << alpha;
    EXPECT_NEAR(F.deriv(0.0), 2.0 * (1.0 + 2.0 * alpha), 1e-9) << alpha;
  }
}

TEST(CoupledMap, DerivativeMatchesFiniteDifferences) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  NetworkSpec spec = networks::weak_coupling(0.2);
  spec.kernels[0][0] = kernels::chimera1(0.4);
  spec.kernels[2][1] = kernels::von_mises_diffusive(0.3, 1.0);
  State st({measures::lebesgue(128), Measure::atomic({{CirclePoint(0.2), 1.0}, {CirclePoint(0.7), 2.0}}),
            Measure::dirac(0.4)});
  for (std::size_t i = 0; i < 3; ++i) {
    CoupledMap F(spec, st, i);
    for (int t = 0; t < 100; ++t) {
      const double x = u(rng);
      EXPECT_NEAR(F.deriv(x), oracle::circle_derivative([&](double y) { return F.eval(y); }, x), 1e-5);
    }
  }
}

TEST(Step, ChimeraStateIsFixed) {
  const State st = networks::chimera1_state();
  const State next = step(networks::chimera1(), st);
  EXPECT_LT(wasserstein_circle(next.clusters[0], st.clusters[0]), 1e-12);
  EXPECT_NEAR(next.clusters[0].atoms()[0].position.value(), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(next.clusters[0].atoms()[1].position.value(), 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(circle_dist(next.clusters[1].atoms()[0].position.value(), 0.0), 0.0, 1e-12);
}

TEST(Step, UncoupledDoublingFixesLebesgue) {
  NetworkSpec spec = NetworkSpec::uncoupled({maps::doubling()});
  State st({measures::lebesgue()});
  State next = step(spec, st);
  for (std::size_t c = 0; c < 1024; ++c) EXPECT_EQ(next.clusters[0].masses()[c], 1.0 / 1024.0);
}

TEST(Step, ChimeraNeighbourhoodContracts) {
  // Supports in B_r(1/3) u B_r(2/3) and B_r(0), r = 0.01. Each piece of the
  // support shrinks by at least 9/10 per step.
  const double r = 0.01;
  std::vector<Atom> c1;
  for (double center : {1.0 / 3.0, 2.0 / 3.0}) {
    const Measure piece = measures::uniform_atoms(center, r, 11);
    for (const auto& a : piece.atoms()) c1.push_back(a);
  }
  State st({Measure::atomic(c1), measures::uniform_atoms(0.0, r, 11)}, {0.5, 0.5});
  auto piece_diameters = [](const Measure& m) {
    std::vector<double> near13, near23;
    for (const auto& a : m.atoms()) {
      const double x = a.position.value();
      (circle_dist(x, 1.0 / 3.0) < circle_dist(x, 2.0 / 3.0) ? near13 : near23).push_back(x);
    }
    return std::max(smallest_covering_arc(near13).length(), smallest_covering_arc(near23).length());
  };
  const NetworkSpec spec = networks::chimera1();
  for (int t = 0; t < 5; ++t) {
    State next = step(spec, st);
    EXPECT_LE(piece_diameters(next.clusters[0]), 0.9 * piece_diameters(st.clusters[0]));
    EXPECT_LE(support_diameter(next.clusters[1]), 0.9 * support_diameter(st.clusters[1]));
    st = std::move(next);
  }
}

TEST(G, UncoupledIsTheProductMap) {
  NetworkSpec spec = NetworkSpec::uncoupled({maps::doubling(), maps::sine_circle(0.2, 0.9)});
  TorusPoint x{0.3, 0.8};
  TorusPoint y = eval_G(spec, x);
  EXPECT_EQ(y[0], maps::doubling().eval(0.3));
  EXPECT_EQ(y[1], maps::sine_circle(0.2, 0.9).eval(0.8));
  EXPECT_EQ(eval_g(spec, x, 0), 2.0);
  EXPECT_EQ(eval_g(spec, x, 1), maps::sine_circle(0.2, 0.9).deriv(0.8));
}

TEST(G, DiffusiveNetworksKeepTheDiagonal) {
  const NetworkSpec spec = networks::diffusive(4, 0.8, maps::sine_circle(0.1, 0.6));
  for (int k = 0; k < 512; ++k) {
    TorusPoint x(4, k / 512.0);
    TorusPoint y = eval_G(spec, x);
    EXPECT_LT(spread(y), 1e-12);
    EXPECT_NEAR(y[0], spec.maps[0].eval(x[0]), 1e-15);
    // g_i on the diagonal: f'(x) (1 - sum_j phi_ij'(0)).
    EXPECT_NEAR(eval_g(spec, x, 2), spec.maps[0].deriv(x[0]) * (1.0 - 0.8), 1e-12);
  }
}

TEST(G, StepOnDiracStatesMatchesG) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<NetworkSpec> specs{networks::chimera1(), networks::weak_coupling(0.1), networks::diffusive(3, 0.7),
                                 networks::driven(-0.5, 1e-3)};
  for (const auto& spec : specs) {
    for (int t = 0; t < 50; ++t) {
      TorusPoint x(spec.size());
      for (auto& v : x) v = u(rng);
      State next = step(spec, dirac_state(x, spec.masses));
      TorusPoint y = eval_G(spec, x);
      for (std::size_t i = 0; i < x.size(); ++i) {
        EXPECT_LT(circle_dist(next.clusters[i].atoms()[0].position.value(), y[i]), 1e-12);
      }
    }
  }
}

TEST(G, SlopeMatchesFrozenMapDerivative) {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const NetworkSpec spec = networks::weak_coupling(0.3);
  for (int t = 0; t < 100; ++t) {
    TorusPoint x{u(rng), u(rng), u(rng)};
    State st = dirac_state(x);
    for (std::size_t i = 0; i < 3; ++i) {
      CoupledMap F(spec, st, i);
      const double fd = oracle::circle_derivative([&](double y) { return F.eval(y); }, x[i]);
      EXPECT_NEAR(eval_g(spec, x, i), fd, 1e-5);
    }
  }
}

TEST(PeriodicOrbit, UncoupledSineCircleFixedPoint) {
  const double omega = 0.05, k = 1.5;
  NetworkSpec spec = NetworkSpec::uncoupled({maps::sine_circle(omega, k)});
  PeriodicOrbit o = find_periodic_orbit(spec, 1, {0.1});
  const double x0 = networks::sine_circle_fixed_point(omega, k);
  EXPECT_NEAR(o.points[0][0], x0, 1e-10);
  EXPECT_LT(o.residual, 1e-12);
  EXPECT_NEAR(o.spectral_radius, std::fabs(1.0 - k * std::cos(two_pi * x0)), 1e-6);
}

TEST(PeriodicOrbit, DoublingTwoCycleThroughOneThird) {
  NetworkSpec spec = NetworkSpec::uncoupled({maps::doubling()});
  PeriodicOrbit o = find_periodic_orbit(spec, 2, {0.34});
  ASSERT_EQ(o.points.size(), 2u);
  EXPECT_NEAR(o.points[0][0], 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(o.points[1][0], 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(o.spectral_radius, 4.0, 1e-6);
}

TEST(PeriodicOrbit, RestartFromSolutionIsImmediate) {
  const NetworkSpec spec = networks::weak_coupling(0.01);
  PeriodicOrbit o = find_periodic_orbit(spec, 1, {0.01, 0.03, -0.03});
  PeriodicOrbit again = find_periodic_orbit(spec, 1, o.points[0]);
  EXPECT_LE(again.newton_steps, 2);
  EXPECT_LT(torus_dist(again.points[0], o.points[0]), 1e-12);
}

TEST(PeriodicOrbit, ContinuationStaysCloseForSmallCoupling) {
  const NetworkSpec base = networks::weak_coupling(0.0);
  TorusPoint x0{networks::sine_circle_fixed_point(0.0, 1.5), networks::sine_circle_fixed_point(0.05, 1.5),
                networks::sine_circle_fixed_point(-0.05, 1.5)};
  PeriodicOrbit o0 = find_periodic_orbit(base, 1, x0);
  EXPECT_LT(torus_dist(o0.points[0], x0), 1e-12);
  for (double alpha : {1e-4, 1e-3, 1e-2}) {
    auto path = continue_orbit(networks::weak_coupling(1.0), 1, x0, {0.0, alpha / 2, alpha});
    EXPECT_LE(torus_dist(path.back().points[0], o0.points[0]), 10.0 * alpha) << alpha;
  }
}

TEST(PeriodicOrbit, Failures) {
  NetworkSpec rotation = NetworkSpec::uncoupled({maps::rotation(0.1)});
  EXPECT_EQ(error_message([&] { find_periodic_orbit(rotation, 1, {0.2}); }), "singular continuation");
  NetworkSpec circle = NetworkSpec::uncoupled({maps::sine_circle(0.3, 1.2)});
  NewtonOptions one;
  one.max_steps = 1;
  EXPECT_EQ(error_message([&] { find_periodic_orbit(circle, 3, {0.5}, one); }), "orbit not found");
  EXPECT_THROW(find_periodic_orbit(circle, 0, {0.5}), std::invalid_argument);
}

TEST(SyncStability, AttractingFixedPoint) {
  NetworkSpec spec = NetworkSpec::uncoupled({maps::sine_circle(0.0, 1.5)});
  auto rep = check_sync_stability(spec, InvariantSet::from_points({{0.0}}), 0.05, 1);
  EXPECT_TRUE(rep.holds);
  EXPECT_NEAR(rep.values.at("lambda2"), 0.5, 1e-12);
  EXPECT_LT(rep.values.at("lambda1"), 0.5);
  expect_report_consistent(rep);
}

TEST(SyncStability, DiffusiveDiagonal) {
  for (double alpha : {0.8, 1.0, 1.2}) {
    auto rep = check_sync_stability(networks::diffusive(3, alpha), InvariantSet::diagonal(3), 0.02, 1);
    EXPECT_TRUE(rep.holds) << alpha;
    EXPECT_NEAR(rep.values.at("lambda2"), 2.0 * std::fabs(1.0 - alpha), 1e-9) << alpha;
    expect_report_consistent(rep);
  }
}

TEST(SyncStability, ExpandingMapFails) {
  NetworkSpec spec = NetworkSpec::uncoupled({maps::doubling(), maps::doubling()});
  auto rep = check_sync_stability(spec, InvariantSet::diagonal(2, 64), 0.02, 1);
  EXPECT_FALSE(rep.holds);
  EXPECT_EQ(rep.values.at("lambda2"), 2.0);
  expect_report_consistent(rep);
}

TEST(SyncStability, RejectsInvalidSets) {
  NetworkSpec spec = NetworkSpec::uncoupled({maps::sine_circle(0.0, 1.5)});
  EXPECT_EQ(error_message([&] { check_sync_stability(spec, InvariantSet::from_points({}), 0.05, 1); }),
            "invalid invariant set");
  EXPECT_EQ(error_message([&] { check_sync_stability(spec, InvariantSet::from_points({{0.2}}), 0.05, 1); }),
            "invalid invariant set");
}

TEST(SyncStability, PredictsTheObservedContraction) {
  const NetworkSpec spec = networks::weak_coupling(0.01);
  PeriodicOrbit o = find_periodic_orbit(spec, 1, {0.0, 0.03, -0.03});
  auto rep = check_sync_stability(spec, InvariantSet::from_orbit(o), 0.05, 1);
  ASSERT_TRUE(rep.holds);
  TorusPoint x = o.points[0];
  for (auto& v : x) v = wrap_unit(v + 1e-3);
  std::vector<double> ts, logs;
  for (int t = 0; t < 60; ++t) {
    const double d = torus_dist(x, o.points[0]);
    if (d < 1e-13) break;
    ts.push_back(t);
    logs.push_back(std::log(d));
    x = eval_G(spec, x);
  }
  ASSERT_GT(ts.size(), 5u);
  double mt = 0, ml = 0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    mt += ts[k];
    ml += logs[k];
  }
  mt /= ts.size();
  ml /= ts.size();
  double num = 0, den = 0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    num += (ts[k] - mt) * (logs[k] - ml);
    den += (ts[k] - mt) * (ts[k] - mt);
  }
  EXPECT_LE(num / den, std::log(rep.lambda_est) + 0.05);
}

TEST(Diffusive, CriterionValues) {
  for (double alpha : {0.0, 0.3, 0.5, 0.75, 1.0, 1.4, 1.5, 2.0}) {
    auto rep = diffusive_criterion(networks::diffusive(4, alpha));
    EXPECT_NEAR(rep.lambda_est, 2.0 * std::fabs(1.0 - alpha), 1e-12) << alpha;
    EXPECT_EQ(rep.holds, alpha > 0.5 && alpha < 1.5) << alpha;
    expect_report_consistent(rep);
  }
  EXPECT_EQ(diffusive_criterion(networks::diffusive(4, 1.0)).lambda_est, 0.0);
  EXPECT_FALSE(diffusive_criterion(networks::diffusive(4, 0.0)).holds);
  EXPECT_EQ(error_message([] { diffusive_criterion(networks::chimera1()); }),
            "criterion requires diffusive structure");
}

TEST(AlphaInterval, Branches) {
  Interval a = alpha_sync_interval(2.0, 2.0, 1.0);
  EXPECT_DOUBLE_EQ(a.lo, -0.75);
  EXPECT_DOUBLE_EQ(a.hi, -0.25);
  Interval b = alpha_sync_interval(2.0, 2.0, -1.0);
  EXPECT_DOUBLE_EQ(b.lo, 0.25);
  EXPECT_DOUBLE_EQ(b.hi, 0.75);
  EXPECT_EQ(error_message([] { alpha_sync_interval(2.0, 0.0, 1.0); }), "no net interaction");
  EXPECT_TRUE(a.contains(-0.5));
  EXPECT_FALSE(a.contains(-0.25));
}

TEST(AlphaInterval, MidpointMakesTheDrivenFixedPointAttracting) {
  const Interval iv = alpha_sync_interval(2.0, 2.0, 1.0);
  State st({measures::lebesgue(), Measure::dirac(0.0)});
  for (double alpha : {iv.midpoint(), iv.lo + 1e-3, iv.hi - 1e-3}) {
    CoupledMap F(networks::driven(alpha), st, 1);
    EXPECT_LT(std::fabs(F.deriv(0.0)), 1.0) << alpha;
  }
  for (double alpha : {iv.lo - 1e-2, iv.hi + 1e-2}) {
    CoupledMap F(networks::driven(alpha), st, 1);
    EXPECT_GT(std::fabs(F.deriv(0.0)), 1.0) << alpha;
  }
}

namespace {

PartialSyncSetup driven_setup() {
  PartialSyncSetup p;
  p.group1_size = 1;
  p.reference = {measures::lebesgue()};
  p.band_inner = 0.05;
  p.band_outer = 0.1;
  p.u_center = {0.0};
  p.u_radius = 0.02;
  p.nu0 = {measures::uniform_atoms(0.0, 0.01, 21)};
  p.steps = 100;
  p.mesh_points = 101;
  return p;
}

}  // namespace

TEST(PartialSync, DrivenClusterSynchronizes) {
  auto rep = check_partial_sync(networks::driven(-0.5), driven_setup());
  EXPECT_TRUE(rep.holds);
  EXPECT_LT(rep.lambda_est, 1.0);
  expect_report_consistent(rep);
  ASSERT_EQ(rep.diameters.size(), 101u);
  EXPECT_LT(rep.diameters.back(), 1e-8);
  for (std::size_t t = 1; t < rep.diameters.size(); ++t) EXPECT_LE(rep.diameters[t], rep.diameters[t - 1]);
  bool noted = false;
  for (const auto& n : rep.notes) noted = noted || n.find("empirical A2") != std::string::npos;
  EXPECT_TRUE(noted);
  EXPECT_GT(rep.values.at("family_size"), 1.0);
}

TEST(PartialSync, NoCouplingFails) {
  auto rep = check_partial_sync(networks::driven(0.0), driven_setup());
  EXPECT_FALSE(rep.holds);
  EXPECT_NEAR(rep.values.at("lambda_A1"), 2.0, 1e-12);
  EXPECT_GE(rep.lambda_est, 1.0);
  expect_report_consistent(rep);
}

TEST(PartialSync, SmallSelfCouplingOfTheDriverKeepsStability) {
  auto rep = check_partial_sync(networks::driven(-0.5, 1e-3), driven_setup());
  EXPECT_TRUE(rep.holds);
  expect_report_consistent(rep);
}

TEST(PartialSync, RejectsBadSplits) {
  PartialSyncSetup p = driven_setup();
  p.group1_size = 2;
  EXPECT_THROW(check_partial_sync(networks::driven(-0.5), p), std::invalid_argument);
}
