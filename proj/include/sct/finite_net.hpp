#pragma once

// The finite population: n units split into clusters of sizes floor(m_i n)
// (the last cluster takes the remainder), updated synchronously by
//   xi <- f_i(xi + (1/n) sum_l (1/m_l) sum_k h_il(xi, xi_lk)).

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "sct/circle.hpp"
#include "sct/dynamics.hpp"
#include "sct/mean_field.hpp"
#include "sct/measures.hpp"
#include "sct/parallel.hpp"
#include "sct/random.hpp"

namespace sct {

/// Cluster sizes floor(m_i n) with the remainder assigned to the last cluster.
inline std::vector<std::size_t> cluster_sizes(std::span<const double> masses, std::size_t n) {
  if (masses.empty()) throw std::invalid_argument("need at least one cluster");
  std::vector<std::size_t> sizes(masses.size());
  std::size_t used = 0;
  for (std::size_t i = 0; i + 1 < masses.size(); ++i) {
    sizes[i] = static_cast<std::size_t>(std::floor(masses[i] * static_cast<double>(n)));
    used += sizes[i];
  }
  if (used > n) throw std::invalid_argument("cluster masses exceed 1");
  sizes.back() = n - used;
  return sizes;
}

class ParticleSystem {
 public:
  ParticleSystem(NetworkSpec spec, std::vector<double> positions, std::uint64_t seed = 0)
      : spec_(std::move(spec)), positions_(std::move(positions)), seed_(seed) {
    spec_.validate();
    sizes_ = cluster_sizes(spec_.masses, positions_.size());
    offsets_.assign(sizes_.size() + 1, 0);
    for (std::size_t i = 0; i < sizes_.size(); ++i) offsets_[i + 1] = offsets_[i] + sizes_[i];
    for (auto& x : positions_) x = wrap_unit(x);
  }

  /// Draws M_i points from initial[i], then shifts each by U(-r, r).
  static ParticleSystem sampled(NetworkSpec spec, const std::vector<Measure>& initial, std::size_t n,
                                double jitter, std::uint64_t seed) {
    if (initial.size() != spec.size()) throw std::invalid_argument("need one initial measure per cluster");
    const auto sizes = cluster_sizes(spec.masses, n);
    std::vector<double> pos;
    pos.reserve(n);
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      if (sizes[i] == 0) continue;
      auto draws = sample(initial[i], sizes[i], derive_seed(seed, {1, i}));
      Rng rng(derive_seed(seed, {2, i}));
      for (double x : draws) pos.push_back(jitter > 0.0 ? wrap_unit(x + rng.uniform(-jitter, jitter)) : x);
    }
    return ParticleSystem(std::move(spec), std::move(pos), seed);
  }

  const NetworkSpec& spec() const noexcept { return spec_; }
  std::size_t n() const noexcept { return positions_.size(); }
  std::size_t clusters() const noexcept { return sizes_.size(); }
  std::size_t cluster_size(std::size_t i) const { return sizes_.at(i); }
  std::uint64_t seed() const noexcept { return seed_; }
  std::span<const double> positions() const noexcept { return positions_; }
  std::span<const double> cluster(std::size_t i) const {
    return std::span<const double>(positions_).subspan(offsets_.at(i), sizes_.at(i));
  }
  std::size_t cluster_end(std::size_t i) const { return offsets_.at(i + 1); }
  std::size_t cluster_of(std::size_t p) const {
    std::size_t i = 0;
    while (p >= offsets_[i + 1]) ++i;
    return i;
  }

  ParticleSystem with_positions(std::vector<double> positions) const {
    if (positions.size() != n()) throw std::invalid_argument("position count changed");
    ParticleSystem s = *this;
    s.positions_ = std::move(positions);
    for (auto& x : s.positions_) x = wrap_unit(x);
    return s;
  }

 private:
  NetworkSpec spec_;
  std::vector<double> positions_;
  std::uint64_t seed_;
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;
};

enum class StepPath {
  automatic,  ///< separable kernels through per-cluster means, others summed directly
  direct,     ///< every kernel summed over all pairs
};

/// One synchronous update of every particle from the time-t configuration.
inline ParticleSystem finite_step(const ParticleSystem& sys, StepPath path = StepPath::automatic) {
  const NetworkSpec& spec = sys.spec();
  const std::size_t N = sys.clusters();
  const double inv_n = 1.0 / static_cast<double>(sys.n());

  struct Linear {
    const SeparableTerm* term;
    double coeff;
  };
  struct Direct {
    const CouplingKernel* kernel;
    std::size_t source;
    double weight;
  };
  std::vector<std::vector<Linear>> linear(N);
  std::vector<std::vector<Direct>> direct(N);
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t l = 0; l < N; ++l) {
      const auto& k = spec.kernels[i][l];
      if (k.is_zero() || sys.cluster_size(l) == 0) continue;
      const double weight = inv_n / spec.masses[l];
      if (path == StepPath::automatic && k.has_terms()) {
        const auto src = sys.cluster(l);
        for (const auto& term : k.terms()) {
          const double sum = parallel::chunked_sum(src.size(), [&](std::size_t q) { return term.psi(src[q]); });
          linear[i].push_back({&term, k.strength() * weight * sum});
        }
      } else {
        direct[i].push_back({&k, l, weight});
      }
    }
  }

  std::vector<double> next(sys.n());
  const auto pos = sys.positions();
  parallel::for_chunks(sys.n(), 1024, [&](std::size_t, std::size_t b, std::size_t e) {
    std::size_t i = sys.cluster_of(b);
    for (std::size_t p = b; p < e; ++p) {
      while (p >= sys.cluster_end(i)) ++i;
      const double x = pos[p];
      double shift = 0.0;
      for (const auto& lin : linear[i]) shift += lin.coeff * lin.term->phi(x);
      for (const auto& d : direct[i]) {
        const auto src = sys.cluster(d.source);
        double s = 0.0;
        for (double y : src) s += d.kernel->eval(x, y);
        shift += d.weight * s;
      }
      next[p] = spec.maps[i].eval(x + shift);
    }
  });
  return sys.with_positions(std::move(next));
}

/// Equal-weight atoms at the positions of cluster i.
inline Measure empirical_measure(const ParticleSystem& sys, std::size_t i) {
  const auto c = sys.cluster(i);
  if (c.empty()) throw std::invalid_argument("cluster has no particles");
  return Measure::empirical(c);
}

enum class HistogramRange {
  unit,     ///< bins on [0, 1)
  centered  ///< bins on [-1/2, 1/2)
};

struct Histogram {
  double left = 0.0;
  double width = 0.0;
  std::vector<std::size_t> counts;
  double bin_left(std::size_t b) const { return left + width * static_cast<double>(b); }
  double bin_right(std::size_t b) const { return left + width * static_cast<double>(b + 1); }
};

inline Histogram histogram(std::span<const double> points, std::size_t bins, HistogramRange range) {
  if (bins == 0) throw std::invalid_argument("need at least one bin");
  Histogram h;
  h.left = range == HistogramRange::centered ? -0.5 : 0.0;
  h.width = 1.0 / static_cast<double>(bins);
  h.counts.assign(bins, 0);
  for (double x : points) {
    double v = range == HistogramRange::centered ? wrap_signed(x) : wrap_unit(x);
    auto b = static_cast<std::size_t>(std::floor((v - h.left) * static_cast<double>(bins)));
    h.counts[std::min(b, bins - 1)] += 1;
  }
  return h;
}

}  // namespace sct
