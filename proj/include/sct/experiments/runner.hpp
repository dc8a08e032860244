#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sct/experiments/scenario.hpp"
#include "sct/finite_net.hpp"
#include "sct/mean_field.hpp"
#include "sct/parallel.hpp"
#include "sct/random.hpp"

namespace sct::experiments {

struct TimeRecord {
  std::size_t t = 0;
  std::vector<double> distance;  ///< D_i(t), W1 to the reference
  std::vector<double> diameter;  ///< support diameter of cluster i
};

struct HistogramSnapshot {
  std::size_t t = 0;
  std::size_t cluster = 0;
  Histogram histogram;
};

struct SweepRow {
  std::size_t n = 0;
  std::size_t cluster = 0;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct RunSeed {
  std::size_t n = 0;
  std::size_t repetition = 0;
  std::uint64_t seed = 0;
};

struct NamedReport {
  std::string type;
  std::string path;
  StabilityReport report;
};

struct ExperimentResult {
  std::string name;
  Mode mode = Mode::finite;
  std::uint64_t master_seed = 0;
  std::vector<RunSeed> runs;
  std::vector<TimeRecord> timeseries;
  std::vector<HistogramSnapshot> histograms;
  std::vector<SweepRow> sweep;
  std::vector<NamedReport> reports;
  std::size_t clusters = 0;
  json scenario;
  json chosen;
};

/// Seed of the finite run with n particles and repetition index rep.
inline std::uint64_t run_seed(std::uint64_t master, std::size_t n, std::size_t rep) {
  return derive_seed(master, {static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(rep)});
}

namespace detail {

inline double checked(double d, std::size_t t) {
  if (!std::isfinite(d)) throw NumericalError("non-finite distance", t);
  return d;
}

inline void require_finite(std::span<const double> values, std::size_t t) {
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericalError("non-finite state", t);
  }
}

inline void require_finite(const Measure& mu, std::size_t t) {
  if (mu.is_grid()) {
    require_finite(mu.masses(), t);
    return;
  }
  for (const auto& a : mu.atoms()) {
    if (!std::isfinite(a.position.value()) || !std::isfinite(a.weight)) {
      throw NumericalError("non-finite state", t);
    }
  }
}

inline ParticleSystem initial_system(const Scenario& s, std::size_t n, std::uint64_t seed) {
  if (s.initial.front().positions) {
    std::vector<double> pos;
    for (const auto& c : s.initial) {
      if (!c.positions) throw ConfigError("/initial", "either every cluster lists positions or none does");
      pos.insert(pos.end(), c.positions->begin(), c.positions->end());
    }
    ParticleSystem sys(s.network, std::move(pos), seed);
    for (std::size_t i = 0; i < sys.clusters(); ++i) {
      if (sys.cluster_size(i) != s.initial[i].positions->size()) {
        throw ConfigError("/initial/" + std::to_string(i) + "/positions",
                          "listed count does not match floor(m_i n)");
      }
    }
    return sys;
  }
  // Every cluster gets its own jitter radius, so draw per cluster and merge.
  const auto sizes = cluster_sizes(s.network.masses, n);
  std::vector<double> pos;
  pos.reserve(n);
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] == 0) continue;
    auto draws = sample(s.initial[i].measure, sizes[i], derive_seed(seed, {1, i}));
    Rng rng(derive_seed(seed, {2, i}));
    const double r = s.initial[i].radius;
    for (double x : draws) pos.push_back(r > 0.0 ? wrap_unit(x + rng.uniform(-r, r)) : x);
  }
  return ParticleSystem(s.network, std::move(pos), seed);
}

struct FiniteRun {
  std::vector<TimeRecord> records;
  std::vector<HistogramSnapshot> snapshots;
  /// D_i(t) for t in the window, per cluster.
  std::vector<std::vector<double>> window;
};

/// Evolves a particle system for s.horizon steps. With `full` every step is
/// recorded; otherwise distances are computed only inside the window.
inline FiniteRun run_finite(const Scenario& s, ParticleSystem sys, bool full, std::size_t lo,
                            std::size_t hi) {
  const std::size_t N = sys.clusters();
  FiniteRun out;
  out.window.assign(N, {});
  for (std::size_t t = 0;; ++t) {
    const bool in_window = t >= lo && t <= hi;
    if (full || in_window) {
      require_finite(sys.positions(), t);
      TimeRecord rec;
      rec.t = t;
      for (std::size_t i = 0; i < N; ++i) {
        if (sys.cluster_size(i) == 0) {
          rec.distance.push_back(0.0);
          rec.diameter.push_back(0.0);
          continue;
        }
        Measure emp = empirical_measure(sys, i);
        rec.distance.push_back(checked(wasserstein_circle(emp, s.reference[i]), t));
        rec.diameter.push_back(support_diameter(emp));
        if (in_window) out.window[i].push_back(rec.distance.back());
      }
      if (full) out.records.push_back(std::move(rec));
    }
    if (full && std::find(s.histograms.times.begin(), s.histograms.times.end(), t) != s.histograms.times.end()) {
      for (std::size_t i = 0; i < N; ++i) {
        out.snapshots.push_back({t, i, histogram(sys.cluster(i), s.histograms.bins, s.histograms.range)});
      }
    }
    if (t == s.horizon) break;
    sys = finite_step(sys);
  }
  return out;
}

inline json chosen_values(const Scenario& s) {
  json chosen = json::object();
  json radii = json::array();
  for (std::size_t i = 0; i < s.initial.size(); ++i) {
    radii.push_back({{"cluster", i}, {"value", s.initial[i].radius}, {"default", s.initial[i].radius_defaulted}});
  }
  chosen["perturbation_radius"] = radii;
  chosen["window"] = {{"lo", s.sweep.window_lo}, {"hi", s.sweep.window_hi}, {"default", s.sweep.window_defaulted}};
  chosen["histogram_bins"] = s.histograms.bins;
  chosen["subdivisions"] = s.subdivisions;
  return chosen;
}

inline StabilityReport run_check(const Scenario& s, const StabilityCheck& c) {
  const NetworkSpec& spec = s.network;
  try {
    if (c.type == "sync") {
      InvariantSet X;
      std::vector<std::string> notes;
      switch (c.sync.kind) {
        case SyncCheck::Kind::diagonal:
          X = InvariantSet::diagonal(spec.size(), c.sync.mesh);
          break;
        case SyncCheck::Kind::points:
          X = InvariantSet::from_points(c.sync.points);
          break;
        case SyncCheck::Kind::orbit: {
          PeriodicOrbit orbit;
          if (c.sync.continuation.empty()) {
            orbit = find_periodic_orbit(spec, c.sync.period, c.sync.guess);
          } else {
            auto path = continue_orbit(spec, c.sync.period, c.sync.guess, c.sync.continuation);
            orbit = path.back();
            const double d = torus_dist(path.front().points.front(), orbit.points.front());
            notes.push_back("continued over " + std::to_string(path.size()) + " coupling scales; displacement " +
                            std::to_string(d));
          }
          X = InvariantSet::from_orbit(orbit);
          break;
        }
      }
      auto rep = check_sync_stability(spec, X, c.sync.radius, c.sync.n0, c.sync.options);
      for (auto& n : notes) rep.notes.push_back(std::move(n));
      for (const auto& p : X.kind == InvariantSet::Kind::orbit ? X.samples : std::vector<TorusPoint>{}) {
        rep.witness.push_back(p);
      }
      return rep;
    }
    if (c.type == "diffusive") return diffusive_criterion(spec, c.diffusive.grid);
    if (c.type == "alpha_interval") {
      Interval iv = alpha_sync_interval(c.alpha.fprime0, c.alpha.mean_psi, c.alpha.phiprime0);
      StabilityReport rep;
      rep.criterion = "alpha_interval";
      rep.values["lo"] = iv.lo;
      rep.values["hi"] = iv.hi;
      rep.holds = true;
      rep.lambda_est = 0.0;
      return rep;
    }
    if (c.type == "partial_sync") {
      PartialSyncSetup setup = c.partial;
      setup.subdivisions = s.subdivisions;
      return check_partial_sync(spec, setup);
    }
  } catch (const NumericalError&) {
    throw;
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(c.path, e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(c.path, e.what());
  }
  throw ConfigError(c.path, "unknown check type '" + c.type + "'");
}

}  // namespace detail

/// Executes the scenario's mode and collects everything emit_results writes.
inline ExperimentResult run_scenario(const Scenario& s) {
  require_mode_inputs(s);
  ExperimentResult r;
  r.name = s.name;
  r.mode = s.mode;
  r.master_seed = s.seed;
  r.clusters = s.network.size();
  r.scenario = s.source;
  r.chosen = detail::chosen_values(s);

  switch (s.mode) {
    case Mode::finite: {
      const std::uint64_t seed = run_seed(s.seed, s.n, 0);
      ParticleSystem sys = detail::initial_system(s, s.n, seed);
      r.runs.push_back({sys.n(), 0, seed});
      auto run = detail::run_finite(s, std::move(sys), true, 1, 0);
      r.timeseries = std::move(run.records);
      r.histograms = std::move(run.snapshots);
      break;
    }
    case Mode::meanfield: {
      std::vector<Measure> init;
      for (const auto& c : s.initial) init.push_back(c.measure);
      State st(std::move(init), s.network.masses);
      for (std::size_t t = 0;; ++t) {
        TimeRecord rec;
        rec.t = t;
        for (std::size_t i = 0; i < st.size(); ++i) {
          detail::require_finite(st.clusters[i], t);
          rec.distance.push_back(detail::checked(wasserstein_circle(st.clusters[i], s.reference[i]), t));
          rec.diameter.push_back(support_diameter(st.clusters[i]));
        }
        r.timeseries.push_back(std::move(rec));
        if (t == s.horizon) break;
        st = step(s.network, st, s.subdivisions);
      }
      break;
    }
    case Mode::stability: {
      for (const auto& c : s.checks) r.reports.push_back({c.type, c.path, detail::run_check(s, c)});
      break;
    }
    case Mode::sweep: {
      const std::size_t reps = s.sweep.repetitions;
      const std::size_t jobs = s.sweep.n.size() * reps;
      const std::size_t recorded = jobs - reps;  // largest n, repetition 0
      std::vector<detail::FiniteRun> results(jobs);
      std::vector<RunSeed> seeds(jobs);
      parallel::for_each_index(jobs, [&](std::size_t job) {
        const std::size_t n = s.sweep.n[job / reps];
        const std::size_t rep = job % reps;
        const std::uint64_t seed = run_seed(s.seed, n, rep);
        seeds[job] = {n, rep, seed};
        results[job] = detail::run_finite(s, detail::initial_system(s, n, seed), job == recorded,
                                          s.sweep.window_lo, s.sweep.window_hi);
      });
      r.runs = seeds;
      for (std::size_t k = 0; k < s.sweep.n.size(); ++k) {
        for (std::size_t i = 0; i < r.clusters; ++i) {
          SweepRow row{s.sweep.n[k], i, 0.0, std::numeric_limits<double>::infinity(), 0.0};
          std::size_t count = 0;
          for (std::size_t rep = 0; rep < reps; ++rep) {
            for (double d : results[k * reps + rep].window[i]) {
              row.mean += d;
              row.min = std::min(row.min, d);
              row.max = std::max(row.max, d);
              ++count;
            }
          }
          row.mean /= static_cast<double>(std::max<std::size_t>(count, 1));
          if (count == 0) row.min = 0.0;
          r.sweep.push_back(row);
        }
      }
      r.timeseries = std::move(results[recorded].records);
      r.histograms = std::move(results[recorded].snapshots);
      break;
    }
  }
  return r;
}

}  // namespace sct::experiments
