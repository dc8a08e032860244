#pragma once

// Probability measures on the circle: weighted atoms or cell masses on a
// uniform partition. Pushforward, kernel integration, support diameter,
// circular W1 distance and sampling.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <span>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

#include "sct/circle.hpp"
#include "sct/dynamics.hpp"
#include "sct/parallel.hpp"
#include "sct/random.hpp"

namespace sct {

inline constexpr std::size_t default_grid_cells = 1024;
inline constexpr std::size_t default_subdivisions = 8;
inline constexpr double support_mass_threshold = 1e-12;

/// Samplers that bypass the stored representation and draw from an exact law.
enum class ExactSampler { none, arcsine_i1 };

struct Atom {
  CirclePoint position;
  double weight;
};

class Measure {
 public:
  /// Weights must be positive; they are rescaled to total mass one.
  static Measure atomic(std::vector<Atom> atoms) {
    if (atoms.empty()) throw std::invalid_argument("atomic measure needs at least one atom");
    double total = 0.0;
    for (const auto& a : atoms) {
      if (!(a.weight > 0.0)) throw std::invalid_argument("atom weights must be positive");
      total += a.weight;
    }
    for (auto& a : atoms) a.weight /= total;
    return Measure(Atomic{std::move(atoms)});
  }

  /// Equal-weight atoms at the given positions.
  static Measure empirical(std::span<const double> positions) {
    if (positions.empty()) throw std::invalid_argument("empirical measure of no points");
    std::vector<Atom> atoms;
    atoms.reserve(positions.size());
    const double w = 1.0 / static_cast<double>(positions.size());
    for (double x : positions) atoms.push_back({CirclePoint(x), w});
    return Measure(Atomic{std::move(atoms)});
  }

  static Measure dirac(CirclePoint x) { return Measure(Atomic{{Atom{x, 1.0}}}); }
  static Measure dirac(double x) { return dirac(CirclePoint(x)); }

  /// Cell masses on M equal cells [c/M, (c+1)/M); rescaled to total one.
  static Measure grid(std::vector<double> masses) {
    if (masses.empty()) throw std::invalid_argument("grid density needs at least one cell");
    double total = 0.0;
    for (double m : masses) {
      if (!(m >= 0.0)) throw std::invalid_argument("cell masses must be non-negative");
      total += m;
    }
    if (!(total > 0.0)) throw std::invalid_argument("grid density has zero mass");
    for (auto& m : masses) m /= total;
    return Measure(Grid{std::move(masses)});
  }

  bool is_atomic() const noexcept { return std::holds_alternative<Atomic>(rep_); }
  bool is_grid() const noexcept { return std::holds_alternative<Grid>(rep_); }

  std::span<const Atom> atoms() const { return std::get<Atomic>(rep_).atoms; }
  std::span<const double> masses() const { return std::get<Grid>(rep_).masses; }
  std::size_t cells() const { return std::get<Grid>(rep_).masses.size(); }
  double cell_width() const { return 1.0 / static_cast<double>(cells()); }
  double cell_midpoint(std::size_t c) const {
    return (static_cast<double>(c) + 0.5) / static_cast<double>(cells());
  }

  double total_mass() const {
    if (is_atomic()) {
      double s = 0.0;
      for (const auto& a : atoms()) s += a.weight;
      return s;
    }
    double s = 0.0;
    for (double m : masses()) s += m;
    return s;
  }

  ExactSampler exact_sampler() const noexcept { return sampler_; }
  Measure with_sampler(ExactSampler s) const {
    Measure m = *this;
    m.sampler_ = s;
    return m;
  }

  /// Integral of g against the measure; grid densities use the cell midpoint.
  template <std::invocable<double> G>
  double integrate(G&& g) const {
    double s = 0.0;
    if (is_atomic()) {
      for (const auto& a : atoms()) s += a.weight * g(a.position.value());
    } else {
      auto m = masses();
      for (std::size_t c = 0; c < m.size(); ++c) {
        if (m[c] != 0.0) s += m[c] * g(cell_midpoint(c));
      }
    }
    return s;
  }

 private:
  struct Atomic {
    std::vector<Atom> atoms;
  };
  struct Grid {
    std::vector<double> masses;
  };
  template <class Rep>
  explicit Measure(Rep rep) : rep_(std::move(rep)) {}

  std::variant<Atomic, Grid> rep_;
  ExactSampler sampler_ = ExactSampler::none;
};

// ---------------------------------------------------------------------------
// Constructors for common measures.

namespace measures {

inline Measure lebesgue(std::size_t cells = default_grid_cells) {
  return Measure::grid(std::vector<double>(cells, 1.0 / static_cast<double>(cells)));
}

/// `count` equal-weight atoms equally spaced on [center - radius, center + radius].
inline Measure uniform_atoms(double center, double radius, std::size_t count) {
  if (count == 0) throw std::invalid_argument("uniform_atoms needs count >= 1");
  std::vector<Atom> atoms;
  atoms.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    double t = count == 1 ? 0.0 : -1.0 + 2.0 * static_cast<double>(k) / static_cast<double>(count - 1);
    atoms.push_back({CirclePoint(center + radius * t), 1.0});
  }
  return Measure::atomic(std::move(atoms));
}

/// Grid density whose cell masses are differences of a CDF on [0,1].
template <std::invocable<double> Cdf>
Measure grid_from_cdf(Cdf&& cdf, std::size_t cells = default_grid_cells) {
  std::vector<double> m(cells);
  double prev = cdf(0.0);
  for (std::size_t c = 0; c < cells; ++c) {
    double next = cdf(static_cast<double>(c + 1) / static_cast<double>(cells));
    m[c] = std::max(0.0, next - prev);
    prev = next;
  }
  return Measure::grid(std::move(m));
}

/// Grid density from a pointwise density, cell masses by `sub`-point midpoint rule.
template <std::invocable<double> Density>
Measure grid_from_density(Density&& rho, std::size_t cells = default_grid_cells,
                          std::size_t sub = 16) {
  std::vector<double> m(cells);
  const double h = 1.0 / static_cast<double>(cells * sub);
  for (std::size_t c = 0; c < cells; ++c) {
    double s = 0.0;
    for (std::size_t k = 0; k < sub; ++k) {
      s += std::max(0.0, rho((static_cast<double>(c * sub + k) + 0.5) * h));
    }
    m[c] = s * h;
  }
  return Measure::grid(std::move(m));
}

/// CDF of the invariant density 2/(pi sqrt(2x(1-2x))) on [0,1/2].
inline double arcsine_i1_cdf(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 0.5) return 1.0;
  return 2.0 / std::numbers::pi * std::asin(std::sqrt(2.0 * x));
}

inline double arcsine_i1_density(double x) {
  if (x <= 0.0 || x >= 0.5) return 0.0;
  return 2.0 / (std::numbers::pi * std::sqrt(2.0 * x * (1.0 - 2.0 * x)));
}

/// Grid density of the arcsine law on [0,1/2]; samples are drawn exactly.
inline Measure arcsine_i1(std::size_t cells = default_grid_cells) {
  return grid_from_cdf(arcsine_i1_cdf, cells).with_sampler(ExactSampler::arcsine_i1);
}

/// Integral of g against the arcsine law, via x = sin^2(pi t)/2 (t uniform on
/// [0,1)) and the periodic trapezoid rule.
template <std::invocable<double> G>
double arcsine_i1_expectation(G&& g, std::size_t nodes = 1 << 16) {
  double s = 0.0;
  for (std::size_t k = 0; k < nodes; ++k) {
    double r = std::sin(std::numbers::pi * static_cast<double>(k) / static_cast<double>(nodes));
    s += g(0.5 * r * r);
  }
  return s / static_cast<double>(nodes);
}

}  // namespace measures

/// Convert a grid density to atoms at the midpoints of cells with positive mass.
inline Measure to_atomic(const Measure& mu) {
  if (mu.is_atomic()) return mu;
  std::vector<Atom> atoms;
  auto m = mu.masses();
  for (std::size_t c = 0; c < m.size(); ++c) {
    if (m[c] > 0.0) atoms.push_back({CirclePoint(mu.cell_midpoint(c)), m[c]});
  }
  return Measure::atomic(std::move(atoms));
}

inline double integrate_kernel(const CouplingKernel& k, double x, const Measure& mu) {
  return mu.integrate([&](double y) { return k.eval(x, y); });
}

inline double integrate_kernel(const CouplingKernel& k, CirclePoint x, const Measure& mu) {
  return integrate_kernel(k, x.value(), mu);
}

/// A circle map with a derivative, as consumed by pushforward.
template <class F>
concept CircleMapLike = requires(const F& f, double x) {
  { f.eval(x) } -> std::convertible_to<double>;
  { f.deriv(x) } -> std::convertible_to<double>;
};

namespace detail {

// Spread `mass` uniformly over the arc [start, start + length] of an M-cell grid.
inline void deposit_arc(std::vector<double>& out, double start, double length, double mass) {
  const std::size_t cells = out.size();
  const double m = static_cast<double>(cells);
  std::size_t c = std::min(cells - 1, static_cast<std::size_t>(start * m));
  if (!(length > 0.0)) {
    out[c] += mass;
    return;
  }
  double pos = start;
  double remaining = length;
  while (remaining > 0.0) {
    double edge = static_cast<double>(c + 1) / m;
    double seg = std::min(edge - pos, remaining);
    if (seg > 0.0) {
      out[c] += mass * (seg / length);
      remaining -= seg;
    }
    c = (c + 1) % cells;
    pos = static_cast<double>(c) / m;
  }
}

}  // namespace detail

/// Transfer operator F_* mu.
///
/// Atoms move to F(position) with unchanged weights. Grid densities are
/// treated as piecewise constant: each cell is cut into `subdivisions`
/// subcells, each subcell's image arc is taken between its mapped endpoints
/// (orientation and winding fixed by the derivative at the subcell midpoint),
/// and its mass is spread uniformly over that arc. Exact when F is affine on
/// every subcell. Masses are renormalized afterwards.
template <CircleMapLike F>
Measure pushforward(const F& map, const Measure& mu,
                    std::size_t subdivisions = default_subdivisions) {
  if (mu.is_atomic()) {
    auto in = mu.atoms();
    std::vector<Atom> out(in.size());
    parallel::for_each_index(
        in.size(),
        [&](std::size_t a) { out[a] = {CirclePoint(map.eval(in[a].position.value())), in[a].weight}; },
        1024);
    return Measure::atomic(std::move(out));
  }

  const auto masses = mu.masses();
  const std::size_t cells = masses.size();
  const std::size_t s = std::max<std::size_t>(1, subdivisions);
  const std::size_t points = cells * s;
  const double w = 1.0 / static_cast<double>(points);

  std::vector<double> image(points + 1);
  for (std::size_t k = 0; k <= points; ++k) image[k] = map.eval(static_cast<double>(k) * w);

  std::vector<double> out(cells, 0.0);
  for (std::size_t c = 0; c < cells; ++c) {
    if (masses[c] == 0.0) continue;
    const double sub_mass = masses[c] / static_cast<double>(s);
    for (std::size_t j = 0; j < s; ++j) {
      const std::size_t k = c * s + j;
      const double a = image[k];
      const double chord = image[k + 1] - a;
      const double slope_guess = map.deriv((static_cast<double>(k) + 0.5) * w) * w;
      const double lifted = chord + std::nearbyint(slope_guess - chord);
      if (lifted >= 0.0) {
        detail::deposit_arc(out, a, lifted, sub_mass);
      } else {
        detail::deposit_arc(out, wrap_unit(a + lifted), -lifted, sub_mass);
      }
    }
  }
  return Measure::grid(std::move(out));
}

/// Length of the shortest arc containing the support. Grid cells count as
/// support when their mass exceeds `threshold`; an occupied cell contributes
/// its whole extent.
inline double support_diameter(const Measure& mu, double threshold = support_mass_threshold) {
  if (mu.is_atomic()) {
    std::vector<double> pos;
    pos.reserve(mu.atoms().size());
    for (const auto& a : mu.atoms()) pos.push_back(a.position.value());
    return smallest_covering_arc(std::span<const double>(pos)).length();
  }
  // Cells as closed intervals: the largest run of empty cells is the gap.
  auto m = mu.masses();
  const std::size_t cells = m.size();
  std::size_t occupied = 0;
  for (double v : m) occupied += v > threshold;
  if (occupied == 0) return 0.0;
  if (occupied == cells) return 1.0;
  std::size_t first = 0;
  while (!(m[first] > threshold)) ++first;
  std::size_t best_gap = 0;
  std::size_t run = 0;
  for (std::size_t k = 1; k <= cells; ++k) {
    std::size_t c = (first + k) % cells;
    if (m[c] > threshold) {
      best_gap = std::max(best_gap, run);
      run = 0;
    } else {
      ++run;
    }
  }
  return static_cast<double>(cells - best_gap) / static_cast<double>(cells);
}

/// W1 distance on the circle for the arc-length metric.
///
/// With H the difference of the two CDFs measured from 0, the distance is
/// min_s int_0^1 |H(t) - s| dt; the optimal s is a length-weighted median of
/// the values of H (ties resolved toward the smaller value). Grid inputs are
/// atomized at cell midpoints first.
inline double wasserstein_circle(const Measure& mu, const Measure& nu) {
  struct Event {
    double pos;
    double dw;
  };
  std::vector<Event> events;
  auto collect = [&](const Measure& m, double sign) {
    if (m.is_atomic()) {
      for (const auto& a : m.atoms()) events.push_back({a.position.value(), sign * a.weight});
    } else {
      auto masses = m.masses();
      for (std::size_t c = 0; c < masses.size(); ++c) {
        if (masses[c] > 0.0) events.push_back({m.cell_midpoint(c), sign * masses[c]});
      }
    }
  };
  events.reserve((mu.is_atomic() ? mu.atoms().size() : mu.cells()) +
                 (nu.is_atomic() ? nu.atoms().size() : nu.cells()));
  collect(mu, 1.0);
  collect(nu, -1.0);
  std::sort(events.begin(), events.end(),
            [](const Event& a, const Event& b) { return a.pos < b.pos; });

  // Pieces of H: (value, length).
  std::vector<std::pair<double, double>> pieces;
  pieces.reserve(events.size() + 1);
  double h = 0.0;
  double prev = 0.0;
  for (const auto& e : events) {
    if (e.pos > prev) pieces.emplace_back(h, e.pos - prev);
    h += e.dw;
    prev = e.pos;
  }
  if (prev < 1.0) pieces.emplace_back(h, 1.0 - prev);

  std::vector<std::pair<double, double>> by_value = pieces;
  std::sort(by_value.begin(), by_value.end());
  double total = 0.0;
  for (const auto& p : by_value) total += p.second;
  double acc = 0.0;
  double shift = by_value.empty() ? 0.0 : by_value.back().first;
  for (const auto& p : by_value) {
    acc += p.second;
    if (acc >= 0.5 * total) {
      shift = p.first;
      break;
    }
  }
  double dist = 0.0;
  for (const auto& p : pieces) dist += p.second * std::fabs(p.first - shift);
  return dist;
}

/// i.i.d. draws from mu. Atoms: categorical by weight. Grid: cell by mass,
/// then uniform within the cell. Measures tagged arcsine_i1 draw
/// x = sin^2(pi U)/2 exactly.
inline std::vector<double> sample(const Measure& mu, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("sample size must be at least 1");
  Rng rng(seed);
  std::vector<double> out(n);
  if (mu.exact_sampler() == ExactSampler::arcsine_i1) {
    for (auto& x : out) {
      double s = std::sin(std::numbers::pi * rng.uniform());
      x = wrap_unit(0.5 * s * s);
    }
    return out;
  }
  std::vector<double> cumulative;
  if (mu.is_atomic()) {
    for (const auto& a : mu.atoms()) {
      cumulative.push_back((cumulative.empty() ? 0.0 : cumulative.back()) + a.weight);
    }
  } else {
    for (double m : mu.masses()) {
      cumulative.push_back((cumulative.empty() ? 0.0 : cumulative.back()) + m);
    }
  }
  const double total = cumulative.back();
  auto pick = [&](double u) {
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u * total);
    std::size_t idx = static_cast<std::size_t>(it - cumulative.begin());
    return std::min(idx, cumulative.size() - 1);
  };
  if (mu.is_atomic()) {
    auto atoms = mu.atoms();
    for (auto& x : out) x = atoms[pick(rng.uniform())].position.value();
  } else {
    const double width = mu.cell_width();
    for (auto& x : out) {
      std::size_t c = pick(rng.uniform());
      x = wrap_unit((static_cast<double>(c) + rng.uniform()) * width);
    }
  }
  return out;
}

}  // namespace sct
