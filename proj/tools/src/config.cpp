#include "kbb/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace kbb::cli {
namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "env.kind", "env.n", "env.d", "env.m", "env.q", "env.gamma", "env.seed",
      "algos", "seeds", "out_dir", "eval.n_eval", "eval.seed",
      "budget.n_per_iter", "budget.first_iter_multiplier", "budget.max_iters",
      "budget.shared_data",
      "regressor.kind", "regressor.n_trees", "regressor.max_depth", "regressor.learning_rate",
      "regressor.min_leaf", "regressor.subsample",
      "first_regressor.kind", "first_regressor.n_trees", "first_regressor.max_depth",
      "first_regressor.learning_rate", "first_regressor.min_leaf", "first_regressor.subsample"};
  return keys;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string& key, std::string_view value) {
  T out{};
  const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (value.empty() || res.ec != std::errc() || res.ptr != value.data() + value.size()) {
    throw ConfigError(key, "expected a number, got '" + std::string(value) + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError(key, "expected true or false, got '" + std::string(value) + "'");
}

std::vector<std::string_view> split_list(std::string_view value) {
  std::vector<std::string_view> items;
  while (!value.empty()) {
    const auto comma = value.find(',');
    const auto item = trim(value.substr(0, comma));
    if (!item.empty()) items.push_back(item);
    if (comma == std::string_view::npos) break;
    value.remove_prefix(comma + 1);
  }
  return items;
}

RegressorKind parse_regressor_kind(const std::string& key, std::string_view value) {
  if (value == "tabular_mean") return RegressorKind::kTabularMean;
  if (value == "boosted_trees") return RegressorKind::kBoostedTrees;
  throw ConfigError(key, "unknown regressor kind '" + std::string(value) + "'");
}

void apply_regressor_key(RegressorConfig& cfg, const std::string& key, std::string_view field,
                         std::string_view value) {
  if (field == "kind") {
    cfg.kind = parse_regressor_kind(key, value);
  } else if (field == "n_trees") {
    cfg.n_trees = parse_number<int>(key, value);
  } else if (field == "max_depth") {
    cfg.max_depth = parse_number<int>(key, value);
  } else if (field == "learning_rate") {
    cfg.learning_rate = parse_number<double>(key, value);
  } else if (field == "min_leaf") {
    cfg.min_leaf = parse_number<int>(key, value);
  } else if (field == "subsample") {
    cfg.subsample = parse_number<double>(key, value);
  }
}

void validate_regressor(const RegressorConfig& cfg, const std::string& prefix) {
  if (cfg.n_trees < 1) throw ConfigError(prefix + ".n_trees", "must be positive");
  if (cfg.max_depth < 1) throw ConfigError(prefix + ".max_depth", "must be positive");
  if (cfg.min_leaf < 1) throw ConfigError(prefix + ".min_leaf", "must be positive");
  if (!(cfg.learning_rate > 0.0 && cfg.learning_rate <= 1.0)) {
    throw ConfigError(prefix + ".learning_rate", "must lie in (0, 1]");
  }
  if (!(cfg.subsample > 0.0 && cfg.subsample <= 1.0)) {
    throw ConfigError(prefix + ".subsample", "must lie in (0, 1]");
  }
}

}  // namespace

ConfigError::ConfigError(std::string key, const std::string& message)
    : std::invalid_argument("config key '" + key + "': " + message), key_(std::move(key)) {}

bool EnvSpec::tabular() const {
  return kind == "random_tabular" || kind == "circular_walk" || kind == "reversible_tabular";
}

ExperimentConfig parse_config(std::string_view text) {
  std::map<std::string, std::string> entries;
  std::istringstream in{std::string(text)};
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line(raw);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(std::string(line), "line " + std::to_string(lineno) + " has no '='");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (!known_keys().count(key)) throw ConfigError(key, "unknown key");
    if (!entries.emplace(key, value).second) throw ConfigError(key, "duplicate key");
  }

  ExperimentConfig cfg;
  cfg.text = std::string(text);

  const auto kind = entries.find("env.kind");
  if (kind == entries.end()) throw ConfigError("env.kind", "missing");
  cfg.env.kind = kind->second;
  static const std::set<std::string> kinds = {"random_tabular", "circular_walk",
                                              "reversible_tabular", "lqr", "nonlinear", "arch"};
  if (!kinds.count(cfg.env.kind)) {
    throw ConfigError("env.kind", "unknown env kind '" + cfg.env.kind + "'");
  }

  bool regressor_kind_set = false;
  for (const auto& [key, value] : entries) {
    if (key == "env.n") {
      cfg.env.n = parse_number<int>(key, value);
    } else if (key == "env.d") {
      cfg.env.d = parse_number<int>(key, value);
    } else if (key == "env.m") {
      cfg.env.m = parse_number<int>(key, value);
    } else if (key == "env.q") {
      cfg.env.q = parse_number<double>(key, value);
    } else if (key == "env.gamma") {
      cfg.env.gamma = parse_number<double>(key, value);
    } else if (key == "env.seed") {
      cfg.env.seed = parse_number<std::uint64_t>(key, value);
    } else if (key == "algos") {
      for (const auto item : split_list(value)) {
        Algo algo;
        try {
          algo = parse_algo(std::string(item));
        } catch (const std::invalid_argument&) {
          throw ConfigError(key, "unknown algorithm '" + std::string(item) + "'");
        }
        if (std::find(cfg.algos.begin(), cfg.algos.end(), algo) == cfg.algos.end()) {
          cfg.algos.push_back(algo);
        }
      }
    } else if (key == "seeds") {
      cfg.seeds.clear();
      for (const auto item : split_list(value)) {
        cfg.seeds.push_back(parse_number<std::uint64_t>(key, item));
      }
    } else if (key == "out_dir") {
      cfg.out_dir = value;
    } else if (key == "eval.n_eval") {
      cfg.eval.n_eval = parse_number<int>(key, value);
    } else if (key == "eval.seed") {
      cfg.eval.seed = parse_number<std::uint64_t>(key, value);
    } else if (key == "budget.n_per_iter") {
      cfg.budget.n_per_iter = parse_number<int>(key, value);
    } else if (key == "budget.first_iter_multiplier") {
      cfg.budget.first_iter_multiplier = parse_number<int>(key, value);
    } else if (key == "budget.max_iters") {
      cfg.budget.max_iters = parse_number<int>(key, value);
    } else if (key == "budget.shared_data") {
      cfg.budget.shared_data = parse_bool(key, value);
    } else if (key.rfind("regressor.", 0) == 0) {
      apply_regressor_key(cfg.regressor, key, std::string_view(key).substr(10), value);
      regressor_kind_set |= key == "regressor.kind";
    }
  }
  if (!regressor_kind_set) {
    cfg.regressor.kind =
        cfg.env.tabular() ? RegressorKind::kTabularMean : RegressorKind::kBoostedTrees;
  }
  // first_regressor.* starts from the main regressor and overrides fields.
  for (const auto& [key, value] : entries) {
    if (key.rfind("first_regressor.", 0) != 0) continue;
    if (!cfg.first_regressor) cfg.first_regressor = cfg.regressor;
    apply_regressor_key(*cfg.first_regressor, key, std::string_view(key).substr(16), value);
  }

  if (!(cfg.env.gamma >= 0.0 && cfg.env.gamma < 1.0)) {
    throw ConfigError("env.gamma", "must lie in [0, 1)");
  }
  if (cfg.env.kind == "random_tabular" && cfg.env.n < 2) throw ConfigError("env.n", "must be >= 2");
  if (cfg.env.kind == "circular_walk" && cfg.env.n < 5) throw ConfigError("env.n", "must be >= 5");
  if (cfg.env.kind == "reversible_tabular" && cfg.env.n < 2) {
    throw ConfigError("env.n", "must be >= 2");
  }
  if ((cfg.env.kind == "lqr" || cfg.env.kind == "arch") && cfg.env.d < 1) {
    throw ConfigError("env.d", "must be positive");
  }
  if (cfg.env.kind == "lqr" && cfg.env.m < 1) throw ConfigError("env.m", "must be positive");
  if (cfg.env.kind == "arch" && !(cfg.env.q >= 0.0)) throw ConfigError("env.q", "must be >= 0");
  if (cfg.algos.empty()) throw ConfigError("algos", "at least one algorithm is required");
  if (cfg.seeds.empty()) throw ConfigError("seeds", "at least one seed is required");
  if (cfg.eval.n_eval < 1) throw ConfigError("eval.n_eval", "must be positive");
  if (cfg.budget.n_per_iter < 1) throw ConfigError("budget.n_per_iter", "must be positive");
  if (cfg.budget.first_iter_multiplier < 1) {
    throw ConfigError("budget.first_iter_multiplier", "must be positive");
  }
  if (cfg.budget.max_iters < 1) throw ConfigError("budget.max_iters", "must be positive");
  if (cfg.out_dir.empty()) throw ConfigError("out_dir", "must not be empty");
  validate_regressor(cfg.regressor, "regressor");
  if (!cfg.env.tabular() && cfg.regressor.kind == RegressorKind::kTabularMean) {
    throw ConfigError("regressor.kind", "tabular_mean needs a tabular environment");
  }
  if (cfg.first_regressor) {
    validate_regressor(*cfg.first_regressor, "first_regressor");
    if (!cfg.env.tabular() && cfg.first_regressor->kind == RegressorKind::kTabularMean) {
      throw ConfigError("first_regressor.kind", "tabular_mean needs a tabular environment");
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    const auto manifest = nlohmann::json::parse(text, nullptr, false);
    if (manifest.is_discarded() || !manifest.contains("config_text")) {
      throw ConfigError("config_text", path + " is neither a config nor a run manifest");
    }
    return parse_config(manifest.at("config_text").get<std::string>());
  }
  return parse_config(text);
}

Environment build_environment(const EnvSpec& spec) {
  if (spec.kind == "random_tabular") return make_random_tabular(spec.n, spec.gamma, spec.seed);
  if (spec.kind == "circular_walk") return make_circular_walk(spec.n, spec.gamma, spec.seed);
  if (spec.kind == "reversible_tabular") {
    return make_reversible_tabular(spec.n, spec.gamma, spec.seed);
  }
  if (spec.kind == "lqr") return make_lqr(spec.d, spec.m, spec.gamma, spec.seed);
  if (spec.kind == "nonlinear") return make_nonlinear(spec.gamma, spec.seed);
  if (spec.kind == "arch") return make_arch(spec.d, spec.q, spec.gamma, spec.seed);
  throw ConfigError("env.kind", "unknown env kind '" + spec.kind + "'");
}

}  // namespace kbb::cli
