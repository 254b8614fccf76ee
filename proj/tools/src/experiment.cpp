#include "kbb/cli/experiment.hpp"

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <thread>

#include "kbb/run_record.hpp"

namespace kbb::cli {
namespace {

namespace fs = std::filesystem;

struct Job {
  std::string name;
  Algo algo;
  std::uint64_t seed;
};

std::string lower(Algo algo) {
  std::string s = to_string(algo);
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

nlohmann::json design_json(const Environment& env) {
  return {{"spectral_radius_target", kStableSpectralRadius},
          {"noise_scale", kNoiseScale},
          {"arch_contraction_target", kArchContractionTarget},
          {"arch_burn_in", kArchBurnIn},
          {"arch_stride", kArchStride},
          {"draw_mode", to_string(env_draw_mode(env))}};
}

}  // namespace

RunnerOptions RunnerOptions::from_environment() {
  RunnerOptions opts;
  if (const char* dir = std::getenv("KBB_OUT_DIR"); dir && *dir) opts.out_dir = dir;
  if (const char* threads = std::getenv("KBB_THREADS"); threads && *threads) {
    const int n = std::atoi(threads);
    if (n < 1) throw ConfigError("KBB_THREADS", "must be a positive integer");
    opts.threads = n;
  }
  return opts;
}

bool ExperimentResult::ok() const {
  for (const auto& run : runs) {
    if (run.failed) return false;
  }
  return true;
}

nlohmann::json env_json(const EnvSpec& spec) {
  nlohmann::json j{{"kind", spec.kind}, {"gamma", spec.gamma}, {"seed", spec.seed}};
  if (spec.tabular()) {
    j["n"] = spec.n;
  } else if (spec.kind == "lqr") {
    j["d"] = spec.d;
    j["m"] = spec.m;
  } else if (spec.kind == "arch") {
    j["d"] = spec.d;
    j["q"] = spec.q;
  }
  return j;
}

nlohmann::json eval_json(const EvalSpec& spec) {
  return {{"n_eval", spec.n_eval}, {"seed", spec.seed}};
}

nlohmann::json regressor_json(const RegressorConfig& cfg) {
  return {{"kind", cfg.kind == RegressorKind::kTabularMean ? "tabular_mean" : "boosted_trees"},
          {"n_trees", cfg.n_trees},
          {"max_depth", cfg.max_depth},
          {"learning_rate", cfg.learning_rate},
          {"min_leaf", cfg.min_leaf},
          {"subsample", cfg.subsample}};
}

ExperimentResult run_experiment(const ExperimentConfig& config, const RunnerOptions& options) {
  ExperimentResult result;
  result.dir = options.out_dir.empty() ? fs::path(config.out_dir) : fs::path(options.out_dir);
  fs::create_directories(result.dir);

  const Environment env = build_environment(config.env);
  const ErrorEvaluator eval(env, true_value(env), config.eval.n_eval, config.eval.seed);
  const std::string hash = config_hash(config.text);
  RunOptions run_options;
  run_options.first_iter_regressor = config.first_regressor;

  std::vector<Job> jobs;
  for (Algo algo : config.algos) {
    if (algo == Algo::kVI) {
      jobs.push_back({"vi", algo, 0});
      continue;
    }
    for (std::uint64_t seed : config.seeds) {
      jobs.push_back({lower(algo) + "_seed" + std::to_string(seed), algo, seed});
    }
  }
  result.runs.resize(jobs.size());

  nlohmann::json base_meta{{"config_hash", hash},
                           {"library_version", KBB_VERSION},
                           {"env", env_json(config.env)},
                           {"env_id", env_id(env)},
                           {"eval", eval_json(config.eval)},
                           {"budget",
                            {{"n_per_iter", config.budget.n_per_iter},
                             {"first_iter_multiplier", config.budget.first_iter_multiplier},
                             {"max_iters", config.budget.max_iters},
                             {"shared_data", config.budget.shared_data}}},
                           {"regressor", regressor_json(config.regressor)},
                           {"design", design_json(env)}};
  if (config.first_regressor) base_meta["first_regressor"] = regressor_json(*config.first_regressor);

  auto execute = [&](std::size_t index) {
    const Job& job = jobs[index];
    RunOutcome& outcome = result.runs[index];
    outcome.name = job.name;
    outcome.algo = job.algo;
    outcome.seed = job.seed;
    const fs::path stem = result.dir / job.name;
    RunRecord rec;
    try {
      switch (job.algo) {
        case Algo::kVI:
          rec = run_vi(env, config.budget.max_iters, eval);
          break;
        case Algo::kFVI:
          rec = run_fvi(env, config.regressor, config.budget, eval, job.seed, run_options);
          break;
        case Algo::kKBB:
          rec = run_kbb(env, config.regressor, config.budget, eval, job.seed, run_options);
          break;
      }
    } catch (const std::exception& e) {
      rec.algo = job.algo;
      rec.failed = true;
      rec.failure = e.what();
    }
    rec.config_hash = hash;
    if (job.algo != Algo::kVI) rec.seeds = {job.seed};
    outcome.initial_error = rec.initial_error;
    outcome.failed = rec.failed;
    outcome.failure = rec.failure;

    write_run_csv((stem.string() + ".csv"), rec);
    nlohmann::json meta = base_meta;
    meta["name"] = job.name;
    meta["algo"] = to_string(job.algo);
    meta["seeds"] = rec.seeds;
    meta["initial_error"] = rec.initial_error;
    meta["rows"] = rec.rows.size();
    std::vector<int> rejected;
    for (const RunRow& row : rec.rows) {
      if (row.basis_rejected) rejected.push_back(row.iter);
    }
    meta["rejected_basis_iterations"] = rejected;
    meta["failed"] = rec.failed;
    if (rec.failed) meta["failure"] = rec.failure;
    write_text(stem.string() + ".meta.json", meta.dump(2) + "\n");
    if (rec.failed) write_text(stem.string() + ".FAILED", rec.failure + "\n");
  };

  const int workers = std::max(1, std::min<int>(options.threads, static_cast<int>(jobs.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) execute(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
          try {
            execute(i);
          } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
  }

  nlohmann::json manifest{{"format", "kbb-manifest"},
                          {"version", 1},
                          {"library_version", KBB_VERSION},
                          {"config_hash", hash},
                          {"config_text", config.text},
                          {"env", env_json(config.env)},
                          {"env_id", env_id(env)},
                          {"eval", eval_json(config.eval)},
                          {"status", result.ok() ? "ok" : "failed"}};
  nlohmann::json runs = nlohmann::json::array();
  for (const RunOutcome& run : result.runs) {
    runs.push_back({{"name", run.name},
                    {"algo", to_string(run.algo)},
                    {"seed", run.seed},
                    {"csv", run.name + ".csv"},
                    {"meta", run.name + ".meta.json"},
                    {"initial_error", run.initial_error},
                    {"failed", run.failed}});
  }
  manifest["runs"] = runs;
  write_text(result.dir / "manifest.json", manifest.dump(2) + "\n");
  return result;
}

Manifest read_manifest(const fs::path& dir) {
  const fs::path path = dir / "manifest.json";
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("no manifest.json in " + dir.string());
  Manifest m{dir, nlohmann::json::parse(in, nullptr, false)};
  if (m.doc.is_discarded() || m.doc.value("format", "") != "kbb-manifest") {
    throw std::runtime_error(path.string() + " is not a kbb manifest");
  }
  return m;
}

}  // namespace kbb::cli
