#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "kbb/algorithms.hpp"
#include "kbb/envs.hpp"
#include "kbb/regression.hpp"

namespace kbb::cli {

/// Invalid configuration; `key()` names the offending entry.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string key, const std::string& message);
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct EnvSpec {
  std::string kind;  // random_tabular | circular_walk | reversible_tabular | lqr | nonlinear | arch
  int n = 200;
  int d = 5;
  int m = 3;
  double q = 0.5;
  double gamma = 0.9;
  std::uint64_t seed = 0;

  bool tabular() const;
};

struct EvalSpec {
  int n_eval = 10000;
  std::uint64_t seed = 0;
};

struct ExperimentConfig {
  EnvSpec env;
  std::vector<Algo> algos;
  IterationBudget budget;
  RegressorConfig regressor;
  std::optional<RegressorConfig> first_regressor;
  std::vector<std::uint64_t> seeds{0};
  EvalSpec eval;
  std::string out_dir = "runs";
  std::string text;  // source text, verbatim
};

/// Parses the flat `key = value` format; see docs/config-format.md.
ExperimentConfig parse_config(std::string_view text);

/// Reads a config file, or a run manifest (whose embedded config text is
/// parsed instead).
ExperimentConfig load_config(const std::string& path);

Environment build_environment(const EnvSpec& spec);

}  // namespace kbb::cli
