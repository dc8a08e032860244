// Command-line front end for scenario files.
//
//   sct simulate|meanfield|stability|sweep <scenario.json> [--out DIR]
//       [--seed U64] [--threads K] [--quiet]
//
// Exit codes: 0 success, 2 configuration error, 3 numerical abort.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "sct/experiments/output.hpp"
#include "sct/experiments/runner.hpp"
#include "sct/experiments/scenario.hpp"
#include "sct/parallel.hpp"

namespace {

namespace ex = sct::experiments;

struct Options {
  std::string scenario;
  std::string out;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  bool quiet = false;
};

void summarize(const ex::ExperimentResult& r, const std::filesystem::path& dir) {
  std::printf("%s (%s): %zu time records, %zu histogram snapshots, %zu sweep rows, %zu reports\n",
              r.name.c_str(), ex::to_string(r.mode), r.timeseries.size(), r.histograms.size(), r.sweep.size(),
              r.reports.size());
  if (!r.timeseries.empty()) {
    const auto& last = r.timeseries.back();
    std::printf("  t=%zu:", last.t);
    for (std::size_t i = 0; i < last.distance.size(); ++i) {
      std::printf(" D_%zu=%.3e diam_%zu=%.3e", i + 1, last.distance[i], i + 1, last.diameter[i]);
    }
    std::printf("\n");
  }
  for (const auto& row : r.sweep) {
    std::printf("  n=%zu cluster %zu: mean %.3e [%.3e, %.3e]\n", row.n, row.cluster + 1, row.mean, row.min,
                row.max);
  }
  for (const auto& rep : r.reports) {
    std::printf("  %s %s: %s, lambda_est %.6g\n", rep.path.c_str(), rep.report.criterion.c_str(),
                rep.report.holds ? "holds" : "fails", rep.report.lambda_est);
  }
  std::printf("  results in %s\n", dir.string().c_str());
}

int run(ex::Mode mode, const Options& opt) {
  try {
    ex::Scenario s = ex::load_scenario(opt.scenario);
    s.mode = mode;
    if (opt.seed) s.seed = *opt.seed;
    if (!opt.out.empty()) s.output = opt.out;
    sct::parallel::set_threads(opt.threads);
    auto result = ex::run_scenario(s);
    ex::emit_results(result, s.output);
    if (!opt.quiet) summarize(result, s.output);
    return 0;
  } catch (const sct::ConfigError& e) {
    std::fprintf(stderr, "config error at %s\n", e.what());
    return 2;
  } catch (const sct::NumericalError& e) {
    std::fprintf(stderr, "numerical abort: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-consistent coupled circle map experiments"};
  app.require_subcommand(1);
  Options opt;
  int code = 0;

  const std::pair<const char*, ex::Mode> commands[] = {
      {"simulate", ex::Mode::finite},
      {"meanfield", ex::Mode::meanfield},
      {"stability", ex::Mode::stability},
      {"sweep", ex::Mode::sweep},
  };
  const char* help[] = {"Finite-n particle simulation", "Mean-field evolution of the cluster measures",
                        "Run the scenario's stability checks", "Finite-n runs over a list of n"};
  for (std::size_t k = 0; k < 4; ++k) {
    auto* sub = app.add_subcommand(commands[k].first, help[k]);
    sub->add_option("scenario", opt.scenario, "Scenario file (JSON)")->required();
    sub->add_option("--out", opt.out, "Output directory (overrides the scenario)");
    sub->add_option("--seed", opt.seed, "Master seed (overrides the scenario)");
    sub->add_option("--threads", opt.threads, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--quiet", opt.quiet, "No summary on stdout");
    const ex::Mode mode = commands[k].second;
    sub->callback([&, mode] { code = run(mode, opt); });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  return code;
}
