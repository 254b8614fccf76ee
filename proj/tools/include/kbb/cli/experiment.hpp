#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kbb/cli/config.hpp"

namespace kbb::cli {

struct RunnerOptions {
  int threads = 1;
  std::string out_dir;  // overrides the config's out_dir when non-empty

  /// Reads KBB_OUT_DIR and KBB_THREADS.
  static RunnerOptions from_environment();
};

struct RunOutcome {
  std::string name;  // file stem, e.g. "kbb_seed3"
  Algo algo = Algo::kVI;
  std::uint64_t seed = 0;
  double initial_error = 0.0;
  bool failed = false;
  std::string failure;
};

struct ExperimentResult {
  std::filesystem::path dir;
  std::vector<RunOutcome> runs;
  bool ok() const;
};

/// Executes every (algo, seed) pair and writes, per run, `<name>.csv` and
/// `<name>.meta.json` (plus `<name>.FAILED` on failure), then
/// `manifest.json`. VI is seed-independent and runs once as `vi`.
ExperimentResult run_experiment(const ExperimentConfig& config, const RunnerOptions& options = {});

nlohmann::json env_json(const EnvSpec& spec);
nlohmann::json eval_json(const EvalSpec& spec);
nlohmann::json regressor_json(const RegressorConfig& cfg);

/// Parsed manifest of a run directory.
struct Manifest {
  std::filesystem::path dir;
  nlohmann::json doc;
};

Manifest read_manifest(const std::filesystem::path& dir);

}  // namespace kbb::cli
