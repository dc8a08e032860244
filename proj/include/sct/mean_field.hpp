#pragma once

// The self-consistent transfer operator on tuples of cluster measures, its
// restriction G to all-Dirac states, and numerical checks of the contraction
// conditions that make (partially) synchronized states stable.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "sct/circle.hpp"
#include "sct/dynamics.hpp"
#include "sct/error.hpp"
#include "sct/measures.hpp"
#include "sct/parallel.hpp"

namespace sct {

/// Point of the N-torus; coordinates are kept in [0,1).
using TorusPoint = std::vector<double>;

struct NetworkSpec {
  std::vector<MapSpec> maps;
  /// kernels[i][j]: influence of cluster j on cluster i.
  std::vector<std::vector<CouplingKernel>> kernels;
  /// Population fractions m_i, used by the finite-n system.
  std::vector<double> masses;

  std::size_t size() const noexcept { return maps.size(); }

  void validate() const {
    const std::size_t n = maps.size();
    if (n == 0) throw std::invalid_argument("network needs at least one cluster");
    if (kernels.size() != n) throw std::invalid_argument("kernel table must be N x N");
    for (const auto& row : kernels) {
      if (row.size() != n) throw std::invalid_argument("kernel table must be N x N");
    }
    if (masses.size() != n) throw std::invalid_argument("need one mass per cluster");
    double total = 0.0;
    for (double m : masses) {
      if (!(m > 0.0)) throw std::invalid_argument("cluster masses must be positive");
      total += m;
    }
    if (std::fabs(total - 1.0) > 1e-12) throw std::invalid_argument("cluster masses must sum to 1");
  }

  /// All coupling strengths multiplied by `factor`.
  NetworkSpec with_coupling_scale(double factor) const {
    NetworkSpec s = *this;
    for (auto& row : s.kernels) {
      for (auto& k : row) k = k.scaled(factor);
    }
    return s;
  }

  static NetworkSpec uncoupled(std::vector<MapSpec> maps) {
    const std::size_t n = maps.size();
    NetworkSpec s;
    s.maps = std::move(maps);
    s.kernels.assign(n, std::vector<CouplingKernel>(n, kernels::zero()));
    s.masses.assign(n, 1.0 / static_cast<double>(n));
    return s;
  }
};

struct State {
  std::vector<Measure> clusters;
  std::vector<double> masses;

  State(std::vector<Measure> c, std::vector<double> m) : clusters(std::move(c)), masses(std::move(m)) {
    validate();
  }
  /// Equal masses.
  explicit State(std::vector<Measure> c) : clusters(std::move(c)) {
    masses.assign(clusters.size(), clusters.empty() ? 0.0 : 1.0 / static_cast<double>(clusters.size()));
    validate();
  }

  std::size_t size() const noexcept { return clusters.size(); }

 private:
  void validate() const {
    if (clusters.empty()) throw std::invalid_argument("state needs at least one cluster");
    if (masses.size() != clusters.size()) throw std::invalid_argument("need one mass per cluster");
    double total = 0.0;
    for (double v : masses) total += v;
    if (std::fabs(total - 1.0) > 1e-12) throw std::invalid_argument("cluster masses must sum to 1");
  }
};

inline State dirac_state(const TorusPoint& x, std::vector<double> masses) {
  std::vector<Measure> c;
  c.reserve(x.size());
  for (double xi : x) c.push_back(Measure::dirac(xi));
  return State(std::move(c), std::move(masses));
}

inline State dirac_state(const TorusPoint& x) {
  return dirac_state(x, std::vector<double>(x.size(), 1.0 / static_cast<double>(x.size())));
}

/// The map F_{mu,i}(x) = f_i(x + sum_j int h_ij(x,y) dmu_j(y)) with the state
/// frozen. Holds references into the spec and state it was built from.
class CoupledMap {
 public:
  CoupledMap(const NetworkSpec& spec, const State& state, std::size_t i) : f_(&spec.maps.at(i)) {
    const auto& row = spec.kernels.at(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      const auto& k = row[j];
      if (k.is_zero()) continue;
      const Measure& mu = state.clusters.at(j);
      if (k.has_terms()) {
        for (const auto& term : k.terms()) {
          double moment = mu.integrate([&](double y) { return term.psi(y); });
          linear_.push_back({&term, k.strength() * moment});
        }
      } else {
        direct_.push_back({&k, &mu});
      }
    }
  }

  /// sum_j int h_ij(x, y) dmu_j(y).
  double shift(double x) const {
    double s = 0.0;
    for (const auto& l : linear_) s += l.coeff * l.term->phi(x);
    for (const auto& d : direct_) s += integrate_kernel(*d.kernel, x, *d.mu);
    return s;
  }

  /// d/dx of shift.
  double shift_dx(double x) const {
    double s = 0.0;
    for (const auto& l : linear_) s += l.coeff * l.term->dphi(x);
    for (const auto& d : direct_) {
      s += d.mu->integrate([&](double y) { return d.kernel->dx(x, y); });
    }
    return s;
  }

  double eval(double x) const { return f_->eval(x + shift(x)); }
  CirclePoint eval(CirclePoint x) const { return CirclePoint(eval(x.value())); }
  double deriv(double x) const { return f_->deriv(x + shift(x)) * (1.0 + shift_dx(x)); }

 private:
  struct Linear {
    const SeparableTerm* term;
    double coeff;
  };
  struct Direct {
    const CouplingKernel* kernel;
    const Measure* mu;
  };
  const MapSpec* f_;
  std::vector<Linear> linear_;
  std::vector<Direct> direct_;
};

inline CoupledMap coupled_map(const NetworkSpec& spec, const State& state, std::size_t i) {
  return CoupledMap(spec, state, i);
}

/// One application of the self-consistent operator: every coupled map is
/// frozen from the current state, then each cluster is pushed forward under
/// its own map.
inline State step(const NetworkSpec& spec, const State& state,
                  std::size_t subdivisions = default_subdivisions) {
  const std::size_t n = state.size();
  if (spec.size() != n) throw std::invalid_argument("state and network sizes differ");
  std::vector<CoupledMap> frozen;
  frozen.reserve(n);
  for (std::size_t i = 0; i < n; ++i) frozen.emplace_back(spec, state, i);

  std::vector<Measure> next(n, Measure::dirac(0.0));
  parallel::for_each_index(n, [&](std::size_t i) {
    next[i] = pushforward(frozen[i], state.clusters[i], subdivisions);
  });
  return State(std::move(next), state.masses);
}

/// (G(x))_i = f_i(x_i + sum_j h_ij(x_i, x_j)): the operator on all-Dirac states.
inline TorusPoint eval_G(const NetworkSpec& spec, const TorusPoint& x) {
  const std::size_t n = spec.size();
  TorusPoint out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = x[i];
    for (std::size_t j = 0; j < n; ++j) {
      const auto& k = spec.kernels[i][j];
      if (!k.is_zero()) s += k.eval(x[i], x[j]);
    }
    out[i] = spec.maps[i].eval(s);
  }
  return out;
}

inline TorusPoint eval_G_power(const NetworkSpec& spec, TorusPoint x, std::size_t k) {
  for (std::size_t t = 0; t < k; ++t) x = eval_G(spec, x);
  return x;
}

/// g_i(x): derivative of the frozen coupled map of cluster i at x_i for the
/// all-Dirac state at x.
inline double eval_g(const NetworkSpec& spec, const TorusPoint& x, std::size_t i) {
  const std::size_t n = spec.size();
  double s = x[i];
  double ds = 1.0;
  for (std::size_t j = 0; j < n; ++j) {
    const auto& k = spec.kernels[i][j];
    if (k.is_zero()) continue;
    s += k.eval(x[i], x[j]);
    ds += k.dx(x[i], x[j]);
  }
  return spec.maps[i].deriv(s) * ds;
}

/// Sup-norm circle distance between two points of the torus.
inline double torus_dist(const TorusPoint& a, const TorusPoint& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, circle_dist(a[i], b[i]));
  return d;
}

// ---------------------------------------------------------------------------
// Periodic orbits of G.

struct PeriodicOrbit {
  std::vector<TorusPoint> points;  ///< x, G(x), ..., G^{k-1}(x)
  std::vector<std::complex<double>> multipliers;  ///< eigenvalues of DG^k at x
  double spectral_radius = 0.0;
  double residual = 0.0;
  int newton_steps = 0;
};

struct NewtonOptions {
  double fd_step = 1e-7;
  double tolerance = 1e-12;
  int max_steps = 50;
  /// Smallest singular value of DG^k - I, relative to max(1, |DG^k|), below
  /// which the solve is declared singular. Finite-difference noise is ~1e-9.
  double min_singular = 1e-7;
};

namespace detail {

inline Eigen::MatrixXd jacobian_of_power(const NetworkSpec& spec, const TorusPoint& x,
                                         std::size_t k, double h) {
  const std::size_t n = x.size();
  const TorusPoint base = eval_G_power(spec, x, k);
  Eigen::MatrixXd jac(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    TorusPoint xp = x;
    xp[j] = wrap_unit(xp[j] + h);
    const TorusPoint moved = eval_G_power(spec, xp, k);
    for (std::size_t i = 0; i < n; ++i) jac(i, j) = wrap_signed(moved[i] - base[i]) / h;
  }
  return jac;
}

inline Eigen::VectorXd power_residual(const NetworkSpec& spec, const TorusPoint& x, std::size_t k) {
  const TorusPoint y = eval_G_power(spec, x, k);
  Eigen::VectorXd r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r(i) = wrap_signed(y[i] - x[i]);
  return r;
}

}  // namespace detail

/// Newton's method on x -> G^k(x) - x with a forward-difference Jacobian.
inline PeriodicOrbit find_periodic_orbit(const NetworkSpec& spec, std::size_t k, TorusPoint guess,
                                         const NewtonOptions& opt = {}) {
  if (k == 0) throw std::invalid_argument("period must be at least 1");
  const std::size_t n = spec.size();
  if (guess.size() != n) throw std::invalid_argument("guess has the wrong dimension");
  for (auto& g : guess) g = wrap_unit(g);

  PeriodicOrbit orbit;
  TorusPoint x = std::move(guess);
  for (int it = 0;; ++it) {
    Eigen::VectorXd r = detail::power_residual(spec, x, k);
    const double res = r.cwiseAbs().maxCoeff();
    if (!std::isfinite(res)) throw NumericalError("orbit not found");
    if (res < opt.tolerance) {
      orbit.residual = res;
      orbit.newton_steps = it;
      break;
    }
    if (it >= opt.max_steps) throw NumericalError("orbit not found");
    Eigen::MatrixXd jac = detail::jacobian_of_power(spec, x, k, opt.fd_step);
    const double scale = std::max(1.0, jac.norm());
    jac -= Eigen::MatrixXd::Identity(n, n);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac);
    const auto& sv = svd.singularValues();
    if (!(sv(sv.size() - 1) > opt.min_singular * scale)) throw NumericalError("singular continuation");
    Eigen::VectorXd dx = Eigen::PartialPivLU<Eigen::MatrixXd>(jac).solve(r);
    for (std::size_t i = 0; i < n; ++i) x[i] = wrap_unit(x[i] - dx(i));
  }

  Eigen::MatrixXd dgk = detail::jacobian_of_power(spec, x, k, opt.fd_step);
  Eigen::EigenSolver<Eigen::MatrixXd> es(dgk, false);
  for (Eigen::Index e = 0; e < es.eigenvalues().size(); ++e) {
    orbit.multipliers.push_back(es.eigenvalues()(e));
    orbit.spectral_radius = std::max(orbit.spectral_radius, std::abs(es.eigenvalues()(e)));
  }
  orbit.points.push_back(x);
  for (std::size_t t = 1; t < k; ++t) orbit.points.push_back(eval_G(spec, orbit.points.back()));
  return orbit;
}

/// Follow a periodic orbit while the coupling is scaled through `scales`,
/// seeding each solve with the previous orbit.
inline std::vector<PeriodicOrbit> continue_orbit(const NetworkSpec& spec, std::size_t k,
                                                 TorusPoint guess, const std::vector<double>& scales,
                                                 const NewtonOptions& opt = {}) {
  std::vector<PeriodicOrbit> path;
  for (double s : scales) {
    path.push_back(find_periodic_orbit(spec.with_coupling_scale(s), k, guess, opt));
    guess = path.back().points.front();
  }
  return path;
}

// ---------------------------------------------------------------------------
// Stability reports.

struct StabilityReport {
  std::string criterion;
  bool holds = false;
  double lambda_est = std::numeric_limits<double>::infinity();
  /// Named estimates (e.g. lambda1, lambda2, per-cluster values).
  std::map<std::string, double> values;
  /// Per-condition slack; holds iff every slack is positive.
  std::map<std::string, double> margins;
  /// Worst-case points found by the check.
  std::vector<TorusPoint> witness;
  /// Per-step support diameters (partial synchronization runs).
  std::vector<double> diameters;
  std::vector<std::string> notes;
};

/// Sampled invariant set of G: a periodic orbit, or a mesh of the diagonal.
struct InvariantSet {
  enum class Kind { orbit, diagonal };
  Kind kind = Kind::orbit;
  std::vector<TorusPoint> samples;

  static InvariantSet from_orbit(const PeriodicOrbit& o) { return {Kind::orbit, o.points}; }
  static InvariantSet from_points(std::vector<TorusPoint> pts) { return {Kind::orbit, std::move(pts)}; }
  static InvariantSet diagonal(std::size_t n, std::size_t mesh = 512) {
    InvariantSet s{Kind::diagonal, {}};
    for (std::size_t k = 0; k < mesh; ++k) {
      s.samples.emplace_back(n, static_cast<double>(k) / static_cast<double>(mesh));
    }
    return s;
  }

  /// Sup-norm distance to the set. For the diagonal this is exact: half the
  /// length of the shortest arc holding every coordinate.
  double distance(const TorusPoint& x) const {
    if (kind == Kind::diagonal) {
      return 0.5 * smallest_covering_arc(std::span<const double>(x)).length();
    }
    double d = std::numeric_limits<double>::infinity();
    for (const auto& p : samples) d = std::min(d, torus_dist(x, p));
    return d;
  }
};

struct SyncCheckOptions {
  std::size_t mesh_per_dim = 9;
  std::size_t mesh_budget = 20000;
  std::size_t max_base_points = 32;
  double margin = 1e-3;
  double invariance_tol = 1e-9;
};

/// Numerical version of the two hypotheses for stability of completely
/// synchronized states: lambda1 is the worst ratio d(G^n0 x, X)/d(x, X) over
/// a mesh of B_R(X), lambda2 the worst |prod_j g_i(G^j x)| over the samples
/// of X. Holds when max(lambda1, lambda2) + margin < 1.
inline StabilityReport check_sync_stability(const NetworkSpec& spec, const InvariantSet& X,
                                            double radius, std::size_t n0,
                                            const SyncCheckOptions& opt = {}) {
  if (X.samples.empty()) throw Error("invalid invariant set");
  if (n0 == 0) throw std::invalid_argument("n0 must be at least 1");
  const std::size_t n = spec.size();
  for (const auto& x : X.samples) {
    if (x.size() != n) throw Error("invalid invariant set");
    if (X.distance(eval_G(spec, x)) > opt.invariance_tol) throw Error("invalid invariant set");
  }

  StabilityReport rep;
  rep.criterion = "sync_stability";

  // Condition on the derivative products along X.
  double lambda2 = 0.0;
  TorusPoint worst2;
  for (const auto& x0 : X.samples) {
    for (std::size_t i = 0; i < n; ++i) {
      TorusPoint x = x0;
      double prod = 1.0;
      for (std::size_t j = 0; j < n0; ++j) {
        prod *= eval_g(spec, x, i);
        x = eval_G(spec, x);
      }
      if (std::fabs(prod) > lambda2) {
        lambda2 = std::fabs(prod);
        worst2 = x0;
      }
    }
  }

  // Transversal contraction on a mesh around X.
  std::vector<const TorusPoint*> bases;
  const std::size_t stride = std::max<std::size_t>(1, X.samples.size() / opt.max_base_points);
  for (std::size_t b = 0; b < X.samples.size(); b += stride) bases.push_back(&X.samples[b]);
  std::size_t per_dim = opt.mesh_per_dim;
  auto total_points = [&](std::size_t m) {
    double t = static_cast<double>(bases.size());
    for (std::size_t d = 0; d < n; ++d) t *= static_cast<double>(m);
    return t;
  };
  while (per_dim > 3 && total_points(per_dim) > static_cast<double>(opt.mesh_budget)) per_dim -= 2;

  std::vector<double> offsets(per_dim);
  for (std::size_t k = 0; k < per_dim; ++k) {
    offsets[k] = -radius + 2.0 * radius * static_cast<double>(k) / static_cast<double>(per_dim - 1);
  }
  std::size_t mesh_size = 1;
  for (std::size_t d = 0; d < n; ++d) mesh_size *= per_dim;

  const std::size_t jobs = bases.size() * mesh_size;
  std::vector<double> ratio(jobs, 0.0);
  parallel::for_each_index(
      jobs,
      [&](std::size_t job) {
        const TorusPoint& base = *bases[job / mesh_size];
        std::size_t code = job % mesh_size;
        TorusPoint x(n);
        for (std::size_t d = 0; d < n; ++d) {
          x[d] = wrap_unit(base[d] + offsets[code % per_dim]);
          code /= per_dim;
        }
        const double d0 = X.distance(x);
        if (d0 <= 1e-12) return;
        ratio[job] = X.distance(eval_G_power(spec, x, n0)) / d0;
      },
      256);
  double lambda1 = 0.0;
  std::size_t worst1 = 0;
  for (std::size_t j = 0; j < jobs; ++j) {
    if (ratio[j] > lambda1) {
      lambda1 = ratio[j];
      worst1 = j;
    }
  }
  {
    const TorusPoint& base = *bases[worst1 / mesh_size];
    std::size_t code = worst1 % mesh_size;
    TorusPoint x(n);
    for (std::size_t d = 0; d < n; ++d) {
      x[d] = wrap_unit(base[d] + offsets[code % per_dim]);
      code /= per_dim;
    }
    rep.witness.push_back(std::move(x));
  }
  rep.witness.push_back(worst2);

  rep.values["lambda1"] = lambda1;
  rep.values["lambda2"] = lambda2;
  rep.values["radius"] = radius;
  rep.values["n0"] = static_cast<double>(n0);
  rep.values["margin"] = opt.margin;
  rep.margins["condition1"] = 1.0 - opt.margin - lambda1;
  rep.margins["condition2"] = 1.0 - opt.margin - lambda2;
  rep.lambda_est = std::max(lambda1, lambda2) + opt.margin;
  rep.holds = rep.lambda_est < 1.0;
  return rep;
}

/// max_x |f'(x)| * |1 - sum_j phi_ij'(0)| for each cluster i, for networks of
/// equal maps with diffusive coupling. Holds when the worst value is below 1.
inline StabilityReport diffusive_criterion(const NetworkSpec& spec, std::size_t grid = 10000) {
  const std::size_t n = spec.size();
  for (const auto& row : spec.kernels) {
    for (const auto& k : row) {
      if (k.structure() != KernelStructure::diffusive) {
        throw Error("criterion requires diffusive structure");
      }
    }
  }
  for (const auto& m : spec.maps) {
    if (m.name() != spec.maps.front().name() || m.params() != spec.maps.front().params()) {
      throw Error("criterion requires equal maps");
    }
  }
  const MapSpec& f = spec.maps.front();
  double max_slope = 0.0;
  for (std::size_t k = 0; k < grid; ++k) {
    max_slope = std::max(max_slope, std::fabs(f.deriv(static_cast<double>(k) / static_cast<double>(grid))));
  }

  StabilityReport rep;
  rep.criterion = "diffusive";
  rep.lambda_est = 0.0;
  rep.values["max_abs_fprime"] = max_slope;
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (const auto& k : spec.kernels[i]) sum += k.diffusive_slope();
    const double value = max_slope * std::fabs(1.0 - sum);
    rep.values["cluster_" + std::to_string(i)] = value;
    rep.margins["cluster_" + std::to_string(i)] = 1.0 - value;
    rep.lambda_est = std::max(rep.lambda_est, value);
  }
  rep.holds = rep.lambda_est < 1.0;
  return rep;
}

struct Interval {
  double lo;
  double hi;
  bool contains(double a) const noexcept { return lo < a && a < hi; }
  double midpoint() const noexcept { return 0.5 * (lo + hi); }
};

/// Coupling strengths for which the driven cluster's fixed point 0 is
/// attracting, given f'(0), the drive's mean of psi, and phi'(0).
inline Interval alpha_sync_interval(double fprime0, double mean_psi, double phiprime0) {
  const double p = mean_psi * phiprime0 * fprime0;
  if (p == 0.0) throw Error("no net interaction");
  const double a = (-1.0 - fprime0) / p;
  const double b = (1.0 - fprime0) / p;
  return p > 0.0 ? Interval{a, b} : Interval{b, a};
}

// ---------------------------------------------------------------------------
// Partial synchronization.

struct PartialSyncSetup {
  /// Clusters [0, group1_size) form the driving group; the rest synchronize.
  std::size_t group1_size = 1;
  /// Reference states of the driving group (grid densities).
  std::vector<Measure> reference;
  /// Perturbation family: reference * (1 + a cos(2 pi k x + phase)) for
  /// k = 1..modes, a = +-amplitude, phase in {0, pi/2}. Members farther than
  /// band_inner (W1) from the reference are discarded.
  std::size_t modes = 3;
  double amplitude = 0.05;
  double band_inner = 0.05;
  /// Wider band the driving group must stay in during the A2 run.
  double band_outer = 0.1;
  /// U: box of half-width u_radius around u_center (one coordinate per
  /// synchronizing cluster).
  TorusPoint u_center;
  double u_radius = 0.02;
  /// Initial states of the synchronizing clusters for the A2 run.
  std::vector<Measure> nu0;
  std::size_t steps = 300;
  std::size_t mesh_points = 201;
  std::size_t subdivisions = default_subdivisions;
  /// Diameters at or below this are treated as collapsed.
  double diameter_floor = 1e-14;
};

namespace detail {

inline std::vector<std::vector<Measure>> perturbation_family(const PartialSyncSetup& s) {
  std::vector<std::vector<Measure>> family{s.reference};
  for (std::size_t c = 0; c < s.reference.size(); ++c) {
    const Measure& ref = s.reference[c];
    if (!ref.is_grid()) continue;
    for (std::size_t k = 1; k <= s.modes; ++k) {
      for (double phase : {0.0, 0.25}) {
        for (double a : {s.amplitude, -s.amplitude}) {
          std::vector<double> m(ref.masses().begin(), ref.masses().end());
          for (std::size_t cell = 0; cell < m.size(); ++cell) {
            double x = ref.cell_midpoint(cell);
            m[cell] *= 1.0 + a * std::cos(two_pi * (static_cast<double>(k) * x + phase));
          }
          auto member = s.reference;
          member[c] = Measure::grid(std::move(m));
          if (wasserstein_circle(member[c], ref) <= s.band_inner) family.push_back(std::move(member));
        }
      }
    }
  }
  return family;
}

}  // namespace detail

/// Empirical check of the two assumptions behind stability of a partially
/// synchronized state.
///
/// A1: for every member of the perturbation family and every point of a mesh
/// of U, G restricted to the synchronizing group maps U inside U and
/// |g_i| <= lambda. A2: evolving (member, nu0) keeps the driving group within
/// band_outer of the reference and the synchronizing group inside U with
/// non-increasing, finally smaller support diameter.
inline StabilityReport check_partial_sync(const NetworkSpec& spec, const PartialSyncSetup& setup) {
  const std::size_t n = spec.size();
  const std::size_t n1 = setup.group1_size;
  if (n1 == 0 || n1 >= n) throw std::invalid_argument("group split must leave both groups non-empty");
  const std::size_t n2 = n - n1;
  if (setup.reference.size() != n1) throw std::invalid_argument("need one reference per driving cluster");
  if (setup.u_center.size() != n2 || setup.nu0.size() != n2) {
    throw std::invalid_argument("U and nu0 need one entry per synchronizing cluster");
  }

  StabilityReport rep;
  rep.criterion = "partial_sync";
  rep.notes.push_back("empirical A2: driving-group neighbourhood sampled by a finite perturbation family");

  const auto family = detail::perturbation_family(setup);
  rep.values["family_size"] = static_cast<double>(family.size());

  // Mesh of U.
  std::size_t per_dim = std::max<std::size_t>(2, setup.mesh_points);
  while (per_dim > 3 && std::pow(static_cast<double>(per_dim), static_cast<double>(n2)) > 20000.0) {
    per_dim = per_dim / 2 + 1;
  }
  std::size_t mesh_size = 1;
  for (std::size_t d = 0; d < n2; ++d) mesh_size *= per_dim;
  auto mesh_point = [&](std::size_t code) {
    TorusPoint y(n2);
    for (std::size_t d = 0; d < n2; ++d) {
      double t = -1.0 + 2.0 * static_cast<double>(code % per_dim) / static_cast<double>(per_dim - 1);
      y[d] = wrap_unit(setup.u_center[d] + setup.u_radius * t);
      code /= per_dim;
    }
    return y;
  };

  auto full_state = [&](const std::vector<Measure>& group1, std::vector<Measure> group2) {
    std::vector<Measure> c = group1;
    for (auto& m : group2) c.push_back(std::move(m));
    return State(std::move(c), spec.masses);
  };

  double lambda_a1 = 0.0;
  double invariance_slack = std::numeric_limits<double>::infinity();
  TorusPoint worst_point;
  for (const auto& member : family) {
    std::vector<double> gmax(mesh_size, 0.0);
    std::vector<double> reach(mesh_size, 0.0);
    parallel::for_each_index(
        mesh_size,
        [&](std::size_t code) {
          TorusPoint y = mesh_point(code);
          std::vector<Measure> g2;
          for (double v : y) g2.push_back(Measure::dirac(v));
          State st = full_state(member, std::move(g2));
          for (std::size_t d = 0; d < n2; ++d) {
            CoupledMap F(spec, st, n1 + d);
            gmax[code] = std::max(gmax[code], std::fabs(F.deriv(y[d])));
            reach[code] = std::max(reach[code], circle_dist(F.eval(y[d]), setup.u_center[d]));
          }
        },
        16);
    for (std::size_t code = 0; code < mesh_size; ++code) {
      if (gmax[code] > lambda_a1) {
        lambda_a1 = gmax[code];
        worst_point = mesh_point(code);
      }
      invariance_slack = std::min(invariance_slack, setup.u_radius - reach[code]);
    }
  }
  rep.witness.push_back(worst_point);

  // A2: evolve every family member with nu0.
  double band_slack = std::numeric_limits<double>::infinity();
  double support_slack = std::numeric_limits<double>::infinity();
  double shrink_slack = std::numeric_limits<double>::infinity();
  double worst_rate = 0.0;
  for (std::size_t m = 0; m < family.size(); ++m) {
    State st = full_state(family[m], setup.nu0);
    auto group2_diameter = [&](const State& s) {
      double d = 0.0;
      for (std::size_t c = n1; c < n; ++c) d = std::max(d, support_diameter(s.clusters[c]));
      return d;
    };
    const double d0 = group2_diameter(st);
    double prev = d0;
    bool monotone = true;
    std::vector<double> diam{d0};
    for (std::size_t t = 0; t < setup.steps; ++t) {
      st = step(spec, st, setup.subdivisions);
      for (std::size_t c = 0; c < n1; ++c) {
        band_slack = std::min(band_slack, setup.band_outer -
                                              wasserstein_circle(st.clusters[c], setup.reference[c]));
      }
      for (std::size_t c = n1; c < n; ++c) {
        const Measure& nu = st.clusters[c];
        if (nu.is_atomic()) {
          for (const auto& a : nu.atoms()) {
            support_slack = std::min(
                support_slack, setup.u_radius - circle_dist(a.position.value(), setup.u_center[c - n1]));
          }
        }
      }
      const double d = group2_diameter(st);
      if (d > setup.diameter_floor && d > prev * (1.0 + 1e-12)) monotone = false;
      prev = d;
      diam.push_back(d);
    }
    const double final_d = diam.back();
    double slack = d0 - final_d;
    if (!monotone) slack = std::min(slack, -1.0);
    shrink_slack = std::min(shrink_slack, slack);
    if (d0 > 0.0 && final_d > 0.0) {
      worst_rate = std::max(worst_rate, std::pow(final_d / d0, 1.0 / static_cast<double>(setup.steps)));
    }
    if (m == 0) rep.diameters = std::move(diam);
  }

  rep.values["lambda_A1"] = lambda_a1;
  rep.values["empirical_rate"] = worst_rate;
  rep.margins["A1_contraction"] = 1.0 - lambda_a1;
  rep.margins["A1_invariance"] = invariance_slack;
  rep.margins["A2_band"] = band_slack;
  rep.margins["A2_support"] = support_slack;
  rep.margins["A2_shrink"] = shrink_slack;
  bool all = true;
  for (const auto& [name, slack] : rep.margins) all = all && slack > 0.0;
  rep.holds = all;
  rep.lambda_est = all ? lambda_a1 : std::max({lambda_a1, 1.0, worst_rate});
  return rep;
}

}  // namespace sct
