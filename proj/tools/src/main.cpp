#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kbb/cli/config.hpp"
#include "kbb/cli/experiment.hpp"
#include "kbb/cli/report.hpp"
#include "kbb/diagnostics.hpp"

namespace {

namespace fs = std::filesystem;
using namespace kbb;
using namespace kbb::cli;

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

std::vector<fs::path> to_paths(const std::vector<std::string>& dirs) {
  return {dirs.begin(), dirs.end()};
}

int cmd_run(const std::string& config_path) {
  const ExperimentConfig cfg = load_config(config_path);
  const RunnerOptions opts = RunnerOptions::from_environment();
  const ExperimentResult result = run_experiment(cfg, opts);
  for (const RunOutcome& run : result.runs) {
    std::cout << run.name << ": " << (run.failed ? "FAILED (" + run.failure + ")" : "ok") << "\n";
  }
  std::cout << "wrote " << (result.dir / "manifest.json").string() << "\n";
  return result.ok() ? 0 : kExitRuntime;
}

int cmd_compare(const std::vector<std::string>& dirs, const std::string& out_path) {
  const ComparisonReport report = compare_runs(load_runs(to_paths(dirs)));
  write_comparison_markdown(std::cout, report);
  if (!out_path.empty()) {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + out_path);
    write_comparison_csv(out, report);
  }
  return 0;
}

int cmd_plot(const std::vector<std::string>& dirs, const std::string& out_path) {
  const auto runs = load_runs(to_paths(dirs));
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + out_path);
  write_plot_svg(out, runs);
  return 0;
}

int cmd_spectra(const std::string& config_path, int depth, const std::string& out_path) {
  const ExperimentConfig cfg = load_config(config_path);
  if (!cfg.env.tabular()) {
    std::cerr << "spectra: env.kind '" << cfg.env.kind << "' is not tabular\n";
    return kExitConfig;
  }
  const QOperator qop(std::get<TabularModel>(build_environment(cfg.env)));
  if (!qop.reversible) {
    std::cerr << "spectra: the chain is not reversible; restricted spectral values need "
                 "detailed balance\n";
    return kExitConfig;
  }
  const auto rows = krylov_spectra(qop, depth);
  if (out_path.empty()) {
    write_spectra_csv(std::cout, rows);
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + out_path);
    write_spectra_csv(out, rows);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Policy evaluation experiments: value iteration, fitted value iteration and "
               "Krylov-Bellman boosting"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(KBB_VERSION));

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run every (algorithm, seed) pair of a config");
  run->add_option("config", config_path, "Config file or manifest.json")->required();

  std::vector<std::string> dirs;
  std::string out_path;
  auto* compare = app.add_subcommand("compare", "Sample-complexity table across run directories");
  compare->add_option("dirs", dirs, "Run directories")->required();
  compare->add_option("--out", out_path, "Also write the table as CSV");

  auto* plot = app.add_subcommand("plot", "SVG of log error against iteration");
  plot->add_option("dirs", dirs, "Run directories")->required();
  plot->add_option("--out", out_path, "Output SVG file")->required();

  int depth = 10;
  auto* spectra = app.add_subcommand("spectra", "Restricted spectral values along Krylov bases");
  spectra->add_option("config", config_path, "Config file with a tabular env")->required();
  spectra->add_option("--depth", depth, "Number of rows (Krylov depths 0..depth-1)")
      ->check(CLI::PositiveNumber);
  spectra->add_option("--out", out_path, "Output CSV (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path);
    if (*compare) return cmd_compare(dirs, out_path);
    if (*plot) return cmd_plot(dirs, out_path);
    if (*spectra) return cmd_spectra(config_path, depth, out_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
