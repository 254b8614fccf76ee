#include "kbb/cli/report.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "kbb/cli/experiment.hpp"
#include "kbb/run_record.hpp"

namespace kbb::cli {
namespace {

double median(std::vector<double> values) {
  if (values.empty()) return kNotReached;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return 0.5 * (values[mid - 1] + values[mid]);
}

std::string cell(double samples) {
  return std::isinf(samples) ? "not reached" : format_double(samples);
}

std::string ratio_cell(double ratio) {
  if (std::isnan(ratio)) return "n/a";
  std::ostringstream s;
  s.precision(3);
  s << std::fixed << ratio;
  return s.str();
}

const char* algo_color(Algo algo) {
  switch (algo) {
    case Algo::kVI:
      return "#d62728";
    case Algo::kFVI:
      return "#2ca02c";
    case Algo::kKBB:
      return "#1f77b4";
  }
  return "#000000";
}

}  // namespace

std::vector<LoadedRun> load_runs(const std::vector<std::filesystem::path>& dirs) {
  if (dirs.empty()) throw std::invalid_argument("no run directories given");
  std::vector<LoadedRun> runs;
  nlohmann::json env, eval;
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    const Manifest m = read_manifest(dirs[i]);
    if (i == 0) {
      env = m.doc.at("env");
      eval = m.doc.at("eval");
    } else if (m.doc.at("env") != env || m.doc.at("eval") != eval) {
      throw std::runtime_error("mismatched manifests: " + dirs[i].string() +
                               " uses different env or eval settings than " + dirs[0].string());
    }
    for (const auto& entry : m.doc.at("runs")) {
      LoadedRun run;
      run.name = entry.at("name").get<std::string>();
      run.algo = parse_algo(entry.at("algo").get<std::string>());
      run.seed = entry.at("seed").get<std::uint64_t>();
      run.initial_error = entry.at("initial_error").get<double>();
      run.rows = read_run_csv((dirs[i] / entry.at("csv").get<std::string>()).string());
      runs.push_back(std::move(run));
    }
  }
  for (const LoadedRun& run : runs) {
    const double ref = runs.front().initial_error;
    if (std::abs(run.initial_error - ref) > 1e-12 * std::max(1.0, std::abs(ref))) {
      throw std::runtime_error("runs disagree on the initial error (" + run.name + ")");
    }
  }
  return runs;
}

double samples_to_reach(const LoadedRun& run, double fraction) {
  const double target = fraction * run.initial_error;
  for (const RunRow& row : run.rows) {
    if (row.mu_error <= target) return static_cast<double>(row.cum_samples);
  }
  return kNotReached;
}

ComparisonReport compare_runs(const std::vector<LoadedRun>& runs) {
  ComparisonReport report;
  for (Algo algo : {Algo::kVI, Algo::kFVI, Algo::kKBB}) {
    std::vector<double> half, tenth;
    for (const LoadedRun& run : runs) {
      if (run.algo != algo) continue;
      half.push_back(samples_to_reach(run, 0.5));
      tenth.push_back(samples_to_reach(run, 0.1));
    }
    if (half.empty()) continue;
    ComparisonRow row;
    row.algo = algo;
    row.n_runs = static_cast<int>(half.size());
    // VI uses the exact dynamics and draws no samples at all.
    row.samples_half = algo == Algo::kVI ? 0.0 : median(half);
    row.samples_tenth = algo == Algo::kVI ? 0.0 : median(tenth);
    report.rows.push_back(row);
    if (algo != Algo::kVI && !report.has_reference) {
      report.reference = algo;
      report.has_reference = true;
    }
  }
  if (report.has_reference) {
    const auto ref = std::find_if(report.rows.begin(), report.rows.end(),
                                  [&](const ComparisonRow& r) { return r.algo == report.reference; });
    auto ratio = [](double value, double base) {
      if (std::isinf(value) || std::isinf(base) || base == 0.0) {
        return std::numeric_limits<double>::quiet_NaN();
      }
      return value / base;
    };
    for (ComparisonRow& row : report.rows) {
      if (row.algo == Algo::kVI) continue;
      row.ratio_half = ratio(row.samples_half, ref->samples_half);
      row.ratio_tenth = ratio(row.samples_tenth, ref->samples_tenth);
    }
  }
  return report;
}

void write_comparison_csv(std::ostream& out, const ComparisonReport& report) {
  out << "algo,runs,samples_half,samples_tenth,ratio_half,ratio_tenth,note\n";
  for (const ComparisonRow& row : report.rows) {
    auto num = [](double v) { return std::isinf(v) ? std::string("not_reached") : format_double(v); };
    auto rat = [](double v) { return std::isnan(v) ? std::string() : format_double(v); };
    out << to_string(row.algo) << ',' << row.n_runs << ',' << num(row.samples_half) << ','
        << num(row.samples_tenth) << ',' << rat(row.ratio_half) << ',' << rat(row.ratio_tenth)
        << ',' << (row.algo == Algo::kVI ? "exact dynamics" : "") << '\n';
  }
}

void write_comparison_markdown(std::ostream& out, const ComparisonReport& report) {
  const std::string ref = report.has_reference ? to_string(report.reference) : "-";
  out << "| algo | runs | samples to 1/2 | samples to 1/10 | ratio 1/2 (vs " << ref
      << ") | ratio 1/10 (vs " << ref << ") |\n";
  out << "|---|---|---|---|---|---|\n";
  bool vi = false;
  for (const ComparisonRow& row : report.rows) {
    const bool exact = row.algo == Algo::kVI;
    vi |= exact;
    out << "| " << to_string(row.algo) << " | " << row.n_runs << " | " << cell(row.samples_half)
        << (exact ? "*" : "") << " | " << cell(row.samples_tenth) << (exact ? "*" : "") << " | "
        << ratio_cell(row.ratio_half) << " | " << ratio_cell(row.ratio_tenth) << " |\n";
  }
  if (vi) out << "\n\\* exact dynamics: VI draws no samples.\n";
}

double log_error_slope(const LoadedRun& run, double floor_rel) {
  std::vector<double> xs{0.0};
  std::vector<double> ys{std::log10(std::max(run.initial_error, kPlotFloor))};
  for (const RunRow& row : run.rows) {
    if (!(row.mu_error > floor_rel * run.initial_error)) break;
    xs.push_back(row.iter);
    ys.push_back(std::log10(row.mu_error));
  }
  if (xs.size() < 2) throw std::invalid_argument("log_error_slope: fewer than two usable points");
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

void write_plot_svg(std::ostream& out, const std::vector<LoadedRun>& runs) {
  if (runs.empty()) throw std::invalid_argument("plot: no runs");
  constexpr double kWidth = 720, kHeight = 440;
  constexpr double kLeft = 70, kRight = 150, kTop = 30, kBottom = 50;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;

  int max_iter = 1;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  auto log_err = [](double e) { return std::log10(std::max(e, kPlotFloor)); };
  for (const LoadedRun& run : runs) {
    lo = std::min(lo, log_err(run.initial_error));
    hi = std::max(hi, log_err(run.initial_error));
    for (const RunRow& row : run.rows) {
      max_iter = std::max(max_iter, row.iter);
      lo = std::min(lo, log_err(row.mu_error));
      hi = std::max(hi, log_err(row.mu_error));
    }
  }
  lo = std::floor(lo);
  hi = std::ceil(hi);
  if (hi <= lo) hi = lo + 1;
  auto px = [&](double iter) { return kLeft + plot_w * iter / max_iter; };
  auto py = [&](double y) { return kTop + plot_h * (hi - y) / (hi - lo); };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" fill=\"white\"/>\n";
  out << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w << "\" height=\""
      << plot_h << "\" fill=\"none\" stroke=\"black\"/>\n";
  const int ystep = std::max(1, static_cast<int>(std::ceil((hi - lo) / 10)));
  for (int y = static_cast<int>(lo); y <= static_cast<int>(hi); y += ystep) {
    out << "<text x=\"" << kLeft - 8 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\">1e"
        << y << "</text>\n";
  }
  const int xstep = std::max(1, max_iter / 10);
  for (int x = 0; x <= max_iter; x += xstep) {
    out << "<text x=\"" << px(x) << "\" y=\"" << kTop + plot_h + 18
        << "\" text-anchor=\"middle\">" << x << "</text>\n";
  }
  out << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 10
      << "\" text-anchor=\"middle\">iteration</text>\n";
  out << "<text transform=\"translate(16," << kTop + plot_h / 2
      << ") rotate(-90)\" text-anchor=\"middle\">log10 mu-error</text>\n";

  for (const LoadedRun& run : runs) {
    out << "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" << algo_color(run.algo)
        << "\" points=\"" << px(0) << ',' << py(log_err(run.initial_error));
    for (const RunRow& row : run.rows) out << ' ' << px(row.iter) << ',' << py(log_err(row.mu_error));
    out << "\"><title>" << run.name << "</title></polyline>\n";
  }

  double ly = kTop + 10;
  for (Algo algo : {Algo::kVI, Algo::kFVI, Algo::kKBB}) {
    const bool present = std::any_of(runs.begin(), runs.end(),
                                     [&](const LoadedRun& r) { return r.algo == algo; });
    if (!present) continue;
    const double lx = kLeft + plot_w + 15;
    out << "<line x1=\"" << lx << "\" y1=\"" << ly << "\" x2=\"" << lx + 25 << "\" y2=\"" << ly
        << "\" stroke-width=\"2\" stroke=\"" << algo_color(algo) << "\"/>\n";
    out << "<text x=\"" << lx + 32 << "\" y=\"" << ly + 4 << "\">" << to_string(algo)
        << "</text>\n";
    ly += 20;
  }
  out << "</svg>\n";
}

void write_spectra_csv(std::ostream& out, const std::vector<SpectraRow>& rows) {
  out << "t,mineig,maxeig,theorem1_bound\n";
  for (const SpectraRow& row : rows) {
    out << row.t << ',' << format_double(row.mineig) << ',' << format_double(row.maxeig) << ','
        << format_double(row.bound) << '\n';
  }
}

}  // namespace kbb::cli
