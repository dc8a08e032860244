#pragma once

// Scenario files: one JSON document describing the network, initial and
// reference states, the run mode and its parameters. Every lookup carries a
// JSON-pointer style path so configuration errors name the offending entry.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "sct/dynamics.hpp"
#include "sct/error.hpp"
#include "sct/finite_net.hpp"
#include "sct/mean_field.hpp"
#include "sct/measures.hpp"

namespace sct::experiments {

using json = nlohmann::json;

enum class Mode { finite, meanfield, stability, sweep };

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::finite: return "finite";
    case Mode::meanfield: return "meanfield";
    case Mode::stability: return "stability";
    case Mode::sweep: return "sweep";
  }
  return "?";
}

inline constexpr double default_perturbation_radius = 0.01;
inline constexpr std::size_t default_histogram_bins = 100;
inline constexpr std::size_t default_window_lo = 1000;
inline constexpr std::size_t default_window_hi = 1500;

struct InitialCluster {
  Measure measure = Measure::dirac(0.0);
  /// Listed particle positions; overrides sampling in finite runs.
  std::optional<std::vector<double>> positions;
  double radius = default_perturbation_radius;
  bool radius_defaulted = true;
};

struct SyncCheck {
  enum class Kind { diagonal, orbit, points } kind = Kind::diagonal;
  std::size_t mesh = 512;
  std::size_t period = 1;
  TorusPoint guess;
  std::vector<double> continuation;
  std::vector<TorusPoint> points;
  double radius = 0.05;
  std::size_t n0 = 1;
  SyncCheckOptions options;
};

struct DiffusiveCheck {
  std::size_t grid = 10000;
};

struct AlphaIntervalCheck {
  double fprime0 = 0.0;
  double mean_psi = 0.0;
  double phiprime0 = 0.0;
};

struct StabilityCheck {
  std::string type;
  std::string path;
  SyncCheck sync;
  DiffusiveCheck diffusive;
  AlphaIntervalCheck alpha;
  PartialSyncSetup partial;
};

struct SweepConfig {
  std::vector<std::size_t> n;
  std::size_t repetitions = 1;
  std::size_t window_lo = default_window_lo;
  std::size_t window_hi = default_window_hi;
  bool window_defaulted = true;
};

struct HistogramConfig {
  std::vector<std::size_t> times;
  std::size_t bins = default_histogram_bins;
  HistogramRange range = HistogramRange::unit;
};

struct Scenario {
  std::string name;
  Mode mode = Mode::finite;
  std::uint64_t seed = 0;
  NetworkSpec network;
  std::vector<InitialCluster> initial;
  std::vector<Measure> reference;
  std::size_t horizon = 1;
  std::size_t n = 0;
  std::size_t subdivisions = default_subdivisions;
  SweepConfig sweep;
  HistogramConfig histograms;
  std::vector<StabilityCheck> checks;
  std::filesystem::path output;
  json source;
};

/// Cursor into a JSON document that remembers where it is.
class Node {
 public:
  Node(const json& j, std::string path) : j_(&j), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }
  const json& raw() const noexcept { return *j_; }

  [[noreturn]] void fail(const std::string& what) const { throw ConfigError(path_.empty() ? "/" : path_, what); }

  bool has(const std::string& key) const { return j_->is_object() && j_->contains(key); }

  Node at(const std::string& key) const {
    if (!j_->is_object()) fail("expected an object");
    auto it = j_->find(key);
    if (it == j_->end()) Node(*j_, path_ + "/" + key).fail("missing required entry");
    return Node(*it, path_ + "/" + key);
  }

  std::optional<Node> get(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return at(key);
  }

  std::size_t size() const {
    if (!j_->is_array()) fail("expected an array");
    return j_->size();
  }

  Node operator[](std::size_t i) const {
    if (!j_->is_array()) fail("expected an array");
    if (i >= j_->size()) fail("index " + std::to_string(i) + " out of range");
    return Node((*j_)[i], path_ + "/" + std::to_string(i));
  }

  double number() const {
    if (!j_->is_number()) fail("expected a number");
    return j_->get<double>();
  }

  std::uint64_t unsigned_integer() const {
    if (j_->is_number_unsigned()) return j_->get<std::uint64_t>();
    if (j_->is_number_integer() && j_->get<std::int64_t>() >= 0) return j_->get<std::uint64_t>();
    fail("expected a non-negative integer");
  }

  std::size_t count() const { return static_cast<std::size_t>(unsigned_integer()); }

  std::string string() const {
    if (!j_->is_string()) fail("expected a string");
    return j_->get<std::string>();
  }

  std::vector<double> numbers() const {
    std::vector<double> v;
    for (std::size_t i = 0; i < size(); ++i) v.push_back((*this)[i].number());
    return v;
  }

  double number_or(const std::string& key, double fallback) const {
    auto n = get(key);
    return n ? n->number() : fallback;
  }
  std::size_t count_or(const std::string& key, std::size_t fallback) const {
    auto n = get(key);
    return n ? n->count() : fallback;
  }

 private:
  const json* j_;
  std::string path_;
};

namespace detail {

/// Every numeric entry other than "name" becomes a parameter.
inline ParamMap params_of(const Node& node) {
  if (!node.raw().is_object()) node.fail("expected an object");
  ParamMap p;
  for (const auto& [key, value] : node.raw().items()) {
    if (key == "name") continue;
    p[key] = node.at(key).number();
  }
  return p;
}

inline MapSpec parse_map(const Node& node) {
  const std::string name = node.at("name").string();
  const ParamMap params = params_of(node);
  try {
    return make_map(name, params);
  } catch (const std::invalid_argument& e) {
    if (std::string_view(e.what()).starts_with("unknown")) node.at("name").fail(e.what());
    node.fail(e.what());
  }
}

inline CouplingKernel parse_kernel(const Node& node) {
  const std::string name = node.at("name").string();
  const ParamMap params = params_of(node);
  try {
    return make_kernel(name, params);
  } catch (const std::invalid_argument& e) {
    if (std::string_view(e.what()).starts_with("unknown")) node.at("name").fail(e.what());
    node.fail(e.what());
  }
}

}  // namespace detail

/// Measure descriptors:
///   {"type": "dirac", "at": x}
///   {"type": "atoms", "positions": [...], "weights": [...]}   weights optional
///   {"type": "uniform_atoms", "center": c, "radius": r, "count": k}
///   {"type": "lebesgue", "cells": M}
///   {"type": "arcsine_i1", "cells": M}
///   {"type": "von_mises", "kappa": k, "theta": t, "cells": M}
///   {"type": "mixture", "components": [...], "weights": [...]}  atomic components
inline Measure parse_measure(const Node& node) {
  const std::string type = node.at("type").string();
  try {
    if (type == "dirac") return Measure::dirac(node.at("at").number());
    if (type == "atoms") {
      auto pos = node.at("positions").numbers();
      if (pos.empty()) node.at("positions").fail("need at least one atom");
      std::vector<double> w(pos.size(), 1.0);
      if (auto wn = node.get("weights")) {
        w = wn->numbers();
        if (w.size() != pos.size()) wn->fail("need one weight per position");
      }
      std::vector<Atom> atoms;
      for (std::size_t k = 0; k < pos.size(); ++k) atoms.push_back({CirclePoint(pos[k]), w[k]});
      return Measure::atomic(std::move(atoms));
    }
    if (type == "uniform_atoms") {
      return measures::uniform_atoms(node.at("center").number(), node.at("radius").number(),
                                     node.at("count").count());
    }
    if (type == "lebesgue") return measures::lebesgue(node.count_or("cells", default_grid_cells));
    if (type == "arcsine_i1") return measures::arcsine_i1(node.count_or("cells", default_grid_cells));
    if (type == "von_mises") {
      const double kappa = node.at("kappa").number();
      const double theta = node.at("theta").number();
      return measures::grid_from_density(
          [=](double x) { return std::exp(kappa * std::cos(two_pi * (x - theta))); },
          node.count_or("cells", default_grid_cells));
    }
    if (type == "mixture") {
      Node comps = node.at("components");
      std::vector<double> w(comps.size(), 1.0);
      if (auto wn = node.get("weights")) {
        w = wn->numbers();
        if (w.size() != comps.size()) wn->fail("need one weight per component");
      }
      std::vector<Atom> atoms;
      for (std::size_t c = 0; c < comps.size(); ++c) {
        Measure m = parse_measure(comps[c]);
        if (!m.is_atomic()) comps[c].fail("mixture components must be atomic");
        for (const auto& a : m.atoms()) atoms.push_back({a.position, a.weight * w[c]});
      }
      if (atoms.empty()) comps.fail("need at least one component");
      return Measure::atomic(std::move(atoms));
    }
  } catch (const std::invalid_argument& e) {
    node.fail(e.what());
  }
  node.at("type").fail("unknown measure type '" + type + "'");
}

inline std::vector<Measure> parse_measures(const Node& node, std::size_t expected) {
  if (node.size() != expected) node.fail("expected " + std::to_string(expected) + " entries");
  std::vector<Measure> out;
  for (std::size_t i = 0; i < expected; ++i) out.push_back(parse_measure(node[i]));
  return out;
}

inline NetworkSpec parse_network(const Node& node) {
  NetworkSpec spec;
  Node maps = node.at("maps");
  for (std::size_t i = 0; i < maps.size(); ++i) spec.maps.push_back(detail::parse_map(maps[i]));
  const std::size_t n = spec.maps.size();
  if (n == 0) maps.fail("need at least one cluster");
  Node ks = node.at("kernels");
  if (ks.size() != n) ks.fail("kernel table must be " + std::to_string(n) + " x " + std::to_string(n));
  for (std::size_t i = 0; i < n; ++i) {
    Node row = ks[i];
    if (row.size() != n) row.fail("kernel row must have " + std::to_string(n) + " entries");
    std::vector<CouplingKernel> r;
    for (std::size_t j = 0; j < n; ++j) r.push_back(detail::parse_kernel(row[j]));
    spec.kernels.push_back(std::move(r));
  }
  Node masses = node.at("masses");
  spec.masses = masses.numbers();
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    masses.fail(e.what());
  }
  return spec;
}

namespace detail {

inline TorusPoint parse_point(const Node& node, std::size_t dim) {
  auto p = node.numbers();
  if (p.size() != dim) node.fail("expected a point with " + std::to_string(dim) + " coordinates");
  return p;
}

inline StabilityCheck parse_check(const Node& node, std::size_t dim) {
  StabilityCheck c;
  c.path = node.path();
  c.type = node.at("type").string();
  if (c.type == "sync") {
    Node inv = node.at("invariant");
    const std::string kind = inv.at("kind").string();
    if (kind == "diagonal") {
      c.sync.kind = SyncCheck::Kind::diagonal;
      c.sync.mesh = inv.count_or("mesh", 512);
    } else if (kind == "orbit") {
      c.sync.kind = SyncCheck::Kind::orbit;
      c.sync.period = inv.at("period").count();
      if (c.sync.period == 0) inv.at("period").fail("period must be at least 1");
      c.sync.guess = parse_point(inv.at("guess"), dim);
      if (auto cont = inv.get("continuation")) c.sync.continuation = cont->numbers();
    } else if (kind == "points") {
      c.sync.kind = SyncCheck::Kind::points;
      Node pts = inv.at("points");
      for (std::size_t k = 0; k < pts.size(); ++k) c.sync.points.push_back(parse_point(pts[k], dim));
    } else {
      inv.at("kind").fail("unknown invariant set kind '" + kind + "'");
    }
    c.sync.radius = node.at("radius").number();
    c.sync.n0 = node.at("n0").count();
    c.sync.options.margin = node.number_or("margin", c.sync.options.margin);
    c.sync.options.mesh_per_dim = node.count_or("mesh_per_dim", c.sync.options.mesh_per_dim);
  } else if (c.type == "diffusive") {
    c.diffusive.grid = node.count_or("grid", c.diffusive.grid);
  } else if (c.type == "alpha_interval") {
    c.alpha.fprime0 = node.at("fprime0").number();
    c.alpha.mean_psi = node.at("mean_psi").number();
    c.alpha.phiprime0 = node.at("phiprime0").number();
  } else if (c.type == "partial_sync") {
    auto& p = c.partial;
    p.group1_size = node.at("group1_size").count();
    if (p.group1_size == 0 || p.group1_size >= dim) node.at("group1_size").fail("must split the clusters in two non-empty groups");
    p.reference = parse_measures(node.at("reference"), p.group1_size);
    p.nu0 = parse_measures(node.at("nu0"), dim - p.group1_size);
    p.u_center = parse_point(node.at("u_center"), dim - p.group1_size);
    p.u_radius = node.at("u_radius").number();
    p.band_inner = node.at("band_inner").number();
    p.band_outer = node.at("band_outer").number();
    p.steps = node.at("steps").count();
    p.modes = node.count_or("modes", p.modes);
    p.amplitude = node.number_or("amplitude", p.amplitude);
    p.mesh_points = node.count_or("mesh_points", p.mesh_points);
  } else {
    node.at("type").fail("unknown check type '" + c.type + "'");
  }
  return c;
}

}  // namespace detail

inline Mode parse_mode(const Node& node) {
  const std::string m = node.string();
  if (m == "finite") return Mode::finite;
  if (m == "meanfield") return Mode::meanfield;
  if (m == "stability") return Mode::stability;
  if (m == "sweep") return Mode::sweep;
  node.fail("unknown mode '" + m + "'");
}

inline Scenario parse_scenario(const json& doc) {
  Node root(doc, "");
  if (!doc.is_object()) root.fail("scenario must be a JSON object");
  Scenario s;
  s.source = doc;
  s.name = root.at("name").string();
  if (auto m = root.get("mode")) s.mode = parse_mode(*m);
  s.seed = root.at("seed").unsigned_integer();
  s.network = parse_network(root.at("network"));
  const std::size_t dim = s.network.size();

  if (auto init = root.get("initial")) {
    if (init->size() != dim) init->fail("expected " + std::to_string(dim) + " entries");
    for (std::size_t i = 0; i < dim; ++i) {
      Node c = (*init)[i];
      InitialCluster ic;
      if (auto pos = c.get("positions")) {
        ic.positions = pos->numbers();
        if (ic.positions->empty()) pos->fail("need at least one position");
        ic.measure = Measure::empirical(*ic.positions);
      } else {
        ic.measure = parse_measure(c.at("measure"));
      }
      if (auto r = c.get("perturbation_radius")) {
        ic.radius = r->number();
        if (ic.radius < 0.0) r->fail("radius must be non-negative");
        ic.radius_defaulted = false;
      }
      s.initial.push_back(std::move(ic));
    }
  }
  if (auto ref = root.get("reference")) s.reference = parse_measures(*ref, dim);

  if (auto t = root.get("horizon")) {
    s.horizon = t->count();
    if (s.horizon < 1) t->fail("horizon must be at least 1");
  }
  s.n = root.count_or("n", 0);
  s.subdivisions = root.count_or("subdivisions", default_subdivisions);
  if (s.subdivisions == 0) root.at("subdivisions").fail("must be at least 1");

  if (auto sw = root.get("sweep")) {
    Node list = sw->at("n");
    for (std::size_t k = 0; k < list.size(); ++k) {
      std::size_t v = list[k].count();
      if (v == 0) list[k].fail("n must be positive");
      if (!s.sweep.n.empty() && v <= s.sweep.n.back()) list[k].fail("sweep list must be strictly increasing");
      s.sweep.n.push_back(v);
    }
    s.sweep.repetitions = sw->count_or("repetitions", 1);
    if (s.sweep.repetitions == 0) sw->at("repetitions").fail("must be at least 1");
    if (auto w = sw->get("window")) {
      if (w->size() != 2) w->fail("window is [lo, hi]");
      s.sweep.window_lo = (*w)[0].count();
      s.sweep.window_hi = (*w)[1].count();
      s.sweep.window_defaulted = false;
      if (s.sweep.window_lo > s.sweep.window_hi) w->fail("window must satisfy lo <= hi");
    }
  }

  if (auto h = root.get("histograms")) {
    if (auto times = h->get("times")) {
      for (std::size_t k = 0; k < times->size(); ++k) s.histograms.times.push_back((*times)[k].count());
    }
    s.histograms.bins = h->count_or("bins", default_histogram_bins);
    if (s.histograms.bins == 0) h->at("bins").fail("need at least one bin");
    if (auto r = h->get("range")) {
      const std::string v = r->string();
      if (v == "unit") {
        s.histograms.range = HistogramRange::unit;
      } else if (v == "centered") {
        s.histograms.range = HistogramRange::centered;
      } else {
        r->fail("range is 'unit' or 'centered'");
      }
    }
  }

  if (auto checks = root.get("stability")) {
    for (std::size_t k = 0; k < checks->size(); ++k) s.checks.push_back(detail::parse_check((*checks)[k], dim));
  }

  s.output = root.has("output") ? std::filesystem::path(root.at("output").string())
                                : std::filesystem::path("out") / s.name;
  return s;
}

/// Checks that the entries the selected mode needs are present.
inline void require_mode_inputs(const Scenario& s) {
  auto missing = [](const std::string& path) { throw ConfigError(path, "required for this mode"); };
  if (s.mode == Mode::stability) {
    if (s.checks.empty()) missing("/stability");
    return;
  }
  if (s.initial.empty()) missing("/initial");
  if (s.reference.empty()) missing("/reference");
  if (s.mode == Mode::finite) {
    bool listed = s.initial.front().positions.has_value();
    if (!listed && s.n == 0) missing("/n");
  }
  if (s.mode == Mode::sweep && s.sweep.n.empty()) missing("/sweep/n");
  if (s.mode == Mode::sweep && s.sweep.window_hi > s.horizon) {
    throw ConfigError("/sweep/window", "window ends after the horizon");
  }
}

inline Scenario load_scenario(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError(file.string(), "cannot open scenario file");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(file.string(), e.what());
  }
  return parse_scenario(doc);
}

}  // namespace sct::experiments
