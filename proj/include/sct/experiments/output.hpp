#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <system_error>

#include "sct/error.hpp"
#include "sct/experiments/runner.hpp"

namespace sct::experiments {

/// 17 significant digits: enough to round-trip any double.
inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string timeseries_csv(const ExperimentResult& r) {
  std::string out = "t";
  for (std::size_t i = 1; i <= r.clusters; ++i) out += ",D_" + std::to_string(i);
  for (std::size_t i = 1; i <= r.clusters; ++i) out += ",diam_" + std::to_string(i);
  out += '\n';
  for (const auto& rec : r.timeseries) {
    out += std::to_string(rec.t);
    for (double d : rec.distance) out += "," + format_number(d);
    for (double d : rec.diameter) out += "," + format_number(d);
    out += '\n';
  }
  return out;
}

/// Cluster indices are 1-based, matching the D_i columns.
inline std::string histograms_csv(const ExperimentResult& r) {
  std::string out = "snapshot_t,cluster,bin_left,bin_right,count\n";
  for (const auto& s : r.histograms) {
    const auto& h = s.histogram;
    for (std::size_t b = 0; b < h.counts.size(); ++b) {
      out += std::to_string(s.t) + "," + std::to_string(s.cluster + 1) + "," + format_number(h.bin_left(b)) +
             "," + format_number(h.bin_right(b)) + "," + std::to_string(h.counts[b]) + "\n";
    }
  }
  return out;
}

inline std::string sweep_csv(const ExperimentResult& r) {
  std::string out = "n,cluster,mean_D,min_D,max_D\n";
  for (const auto& row : r.sweep) {
    out += std::to_string(row.n) + "," + std::to_string(row.cluster + 1) + "," + format_number(row.mean) + "," +
           format_number(row.min) + "," + format_number(row.max) + "\n";
  }
  return out;
}

inline json report_json(const StabilityReport& rep) {
  json j;
  j["criterion"] = rep.criterion;
  j["holds"] = rep.holds;
  j["lambda_est"] = rep.lambda_est;
  j["values"] = rep.values;
  j["margins"] = rep.margins;
  j["witness"] = rep.witness;
  j["diameters"] = rep.diameters;
  j["notes"] = rep.notes;
  return j;
}

inline json result_json(const ExperimentResult& r) {
  json j;
  j["name"] = r.name;
  j["mode"] = to_string(r.mode);
  j["scenario"] = r.scenario;
  j["seeds"]["master"] = r.master_seed;
  j["seeds"]["runs"] = json::array();
  for (const auto& s : r.runs) {
    j["seeds"]["runs"].push_back({{"n", s.n}, {"repetition", s.repetition}, {"seed", s.seed}});
  }
  j["chosen_values"] = r.chosen;
  j["defaults"] = {{"grid_cells", default_grid_cells},
                   {"subdivisions", default_subdivisions},
                   {"window", {default_window_lo, default_window_hi}},
                   {"histogram_bins", default_histogram_bins}};

  json ts;
  ts["t"] = json::array();
  ts["D"] = json::array();
  ts["diam"] = json::array();
  for (const auto& rec : r.timeseries) {
    ts["t"].push_back(rec.t);
    ts["D"].push_back(rec.distance);
    ts["diam"].push_back(rec.diameter);
  }
  j["timeseries"] = ts;

  j["histograms"] = json::array();
  for (const auto& s : r.histograms) {
    j["histograms"].push_back({{"t", s.t},
                               {"cluster", s.cluster + 1},
                               {"left", s.histogram.left},
                               {"width", s.histogram.width},
                               {"counts", s.histogram.counts}});
  }
  j["sweep"] = json::array();
  for (const auto& row : r.sweep) {
    j["sweep"].push_back(
        {{"n", row.n}, {"cluster", row.cluster + 1}, {"mean_D", row.mean}, {"min_D", row.min}, {"max_D", row.max}});
  }
  j["reports"] = json::array();
  for (const auto& rep : r.reports) {
    json e = report_json(rep.report);
    e["type"] = rep.type;
    e["path"] = rep.path;
    j["reports"].push_back(std::move(e));
  }
  return j;
}

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << content;
  out.flush();
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace detail

/// Writes timeseries.csv, histograms.csv, sweep.csv and result.json into dir.
inline void emit_results(const ExperimentResult& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());
  detail::write_file(dir / "timeseries.csv", timeseries_csv(r));
  detail::write_file(dir / "histograms.csv", histograms_csv(r));
  detail::write_file(dir / "sweep.csv", sweep_csv(r));
  detail::write_file(dir / "result.json", result_json(r).dump(2) + "\n");
}

}  // namespace sct::experiments
