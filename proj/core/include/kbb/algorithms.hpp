#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "kbb/envs.hpp"
#include "kbb/regression.hpp"
#include "kbb/value_function.hpp"

namespace kbb {

enum class Algo { kVI, kFVI, kKBB };

const char* to_string(Algo algo);
/// Accepts "VI", "FVI", "KBB" (case-insensitive); throws std::invalid_argument.
Algo parse_algo(const std::string& name);

/// Per-iteration sample budget. Iteration 1 draws
/// n_per_iter * first_iter_multiplier samples; with shared_data = false the
/// LSTD step draws its own dataset of the same size.
struct IterationBudget {
  int n_per_iter = 10000;
  int first_iter_multiplier = 4;
  int max_iters = 10;
  bool shared_data = true;

  void validate() const;
  long long samples_at(int iter) const;
};

struct RunRow {
  int iter = 0;
  long long cum_samples = 0;
  double mu_error = 0.0;
  double ridge_used = 0.0;
  double wall_ms = 0.0;
  bool basis_rejected = false;
};

/// Error trace of one run. Rows hold iterates V_1..V_T; the error of V_0 = 0
/// lives in `initial_error`.
struct RunRecord {
  Algo algo = Algo::kVI;
  double initial_error = 0.0;
  std::vector<RunRow> rows;
  std::string config_hash;
  std::vector<std::uint64_t> seeds;
  bool failed = false;
  std::string failure;
  StateValueFn final_value;  // not persisted
};

/// mu-weighted RMS error against a fixed ground truth. Tabular environments
/// use every state with its stationary weight (exact); continuous ones use
/// n_eval stationary draws from eval_seed with equal weights.
class ErrorEvaluator {
 public:
  ErrorEvaluator(const Environment& env, const StateValueFn& truth, int n_eval,
                 std::uint64_t eval_seed);

  const StateMatrix& points() const { return points_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  const Eigen::VectorXd& truth_values() const { return truth_values_; }

  double error(const Eigen::VectorXd& values_at_points) const;
  double error(const ValueFunction& v) const { return error(v.evaluate_batch(points_)); }

 private:
  StateMatrix points_;
  Eigen::VectorXd weights_;
  Eigen::VectorXd truth_values_;
};

double evaluate_error(const ValueFunction& v, const StateValueFn& truth, const Environment& env,
                      int n_eval, std::uint64_t seed);

struct RunOptions {
  /// Regressor used at iteration 1 instead of the run's regressor.
  std::optional<RegressorConfig> first_iter_regressor;
};

/// Exact value iteration from V_0 = 0 (tabular: dense Bellman update; LQR,
/// nonlinear, ARCH: the closed-form quadratic recursions).
RunRecord run_vi(const Environment& env, int max_iters, const ErrorEvaluator& eval);

/// Fitted value iteration: V_{t+1} = fit of r + gamma V_t(x') on a fresh dataset.
RunRecord run_fvi(const Environment& env, const RegressorConfig& regressor,
                  const IterationBudget& budget, const ErrorEvaluator& eval, std::uint64_t seed,
                  const RunOptions& options = {});

/// Krylov-Bellman boosting: fit the sampled Bellman residual of V_t, append
/// it to the basis (unless it duplicates the span), and set V_{t+1} to the
/// LSTD solution over the basis.
RunRecord run_kbb(const Environment& env, const RegressorConfig& regressor,
                  const IterationBudget& budget, const ErrorEvaluator& eval, std::uint64_t seed,
                  const RunOptions& options = {});

// Seed streams used by the sampled algorithms; identical run seeds give FVI
// and KBB the same regression datasets.
std::uint64_t dataset_seed(std::uint64_t run_seed, int iter);
std::uint64_t lstd_dataset_seed(std::uint64_t run_seed, int iter);
std::uint64_t fit_seed(std::uint64_t run_seed, int iter);

}  // namespace kbb
