#pragma once

#include <filesystem>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "kbb/algorithms.hpp"
#include "kbb/diagnostics.hpp"

namespace kbb::cli {

/// One persisted run loaded back from a run directory.
struct LoadedRun {
  std::string name;
  Algo algo = Algo::kVI;
  std::uint64_t seed = 0;
  double initial_error = 0.0;
  std::vector<RunRow> rows;
};

/// Loads every run listed in the manifests of `dirs`. Throws
/// std::runtime_error if the manifests disagree on env or eval settings,
/// or if runs on the same environment report different initial errors.
std::vector<LoadedRun> load_runs(const std::vector<std::filesystem::path>& dirs);

inline constexpr double kNotReached = std::numeric_limits<double>::infinity();

/// Cumulative samples at the first row whose error is at most
/// fraction * initial_error, or kNotReached.
double samples_to_reach(const LoadedRun& run, double fraction);

struct ComparisonRow {
  Algo algo = Algo::kVI;
  int n_runs = 0;
  double samples_half = kNotReached;   // median over seeds; 0 for VI
  double samples_tenth = kNotReached;
  double ratio_half = std::numeric_limits<double>::quiet_NaN();  // vs reference algo
  double ratio_tenth = std::numeric_limits<double>::quiet_NaN();
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;  // ordered VI, FVI, KBB
  Algo reference = Algo::kFVI;      // first sampled algo present
  bool has_reference = false;
};

ComparisonReport compare_runs(const std::vector<LoadedRun>& runs);
void write_comparison_csv(std::ostream& out, const ComparisonReport& report);
void write_comparison_markdown(std::ostream& out, const ComparisonReport& report);

inline constexpr double kPlotFloor = 1e-16;

/// Least-squares slope of log10(error) against iteration, including the
/// initial error at iteration 0, over the leading points that stay above
/// floor_rel * initial_error.
double log_error_slope(const LoadedRun& run, double floor_rel = 1e-12);

/// SVG of log10(mu-error) against iteration, one polyline per run.
void write_plot_svg(std::ostream& out, const std::vector<LoadedRun>& runs);

/// CSV `t,mineig,maxeig,theorem1_bound`.
void write_spectra_csv(std::ostream& out, const std::vector<SpectraRow>& rows);

}  // namespace kbb::cli
