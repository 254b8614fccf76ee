#include "kbb/algorithms.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "kbb/lstd.hpp"
#include "kbb/random.hpp"

namespace kbb {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// x^T P x + c evaluated on every row of `coords`.
Eigen::VectorXd quadratic_values(const StateMatrix& coords, const Eigen::MatrixXd& p, double c) {
  const Eigen::MatrixXd xp = coords * p;
  return xp.cwiseProduct(coords).rowwise().sum().array() + c;
}

StateMatrix nonlinear_coords(const StateMatrix& xs) {
  StateMatrix zs(xs.rows(), xs.cols());
  for (Eigen::Index i = 0; i < xs.rows(); ++i) {
    zs.row(i) = NonlinearModel::to_z(xs.row(i).transpose()).transpose();
  }
  return zs;
}

}  // namespace

const char* to_string(Algo algo) {
  switch (algo) {
    case Algo::kVI:
      return "VI";
    case Algo::kFVI:
      return "FVI";
    case Algo::kKBB:
      return "KBB";
  }
  return "?";
}

Algo parse_algo(const std::string& name) {
  std::string upper = name;
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (upper == "VI") return Algo::kVI;
  if (upper == "FVI") return Algo::kFVI;
  if (upper == "KBB") return Algo::kKBB;
  throw std::invalid_argument("unknown algorithm '" + name + "'");
}

void IterationBudget::validate() const {
  if (n_per_iter < 1 || first_iter_multiplier < 1 || max_iters < 1) {
    throw std::invalid_argument("IterationBudget: all counts must be positive");
  }
}

long long IterationBudget::samples_at(int iter) const {
  const long long n = static_cast<long long>(n_per_iter) * (iter == 1 ? first_iter_multiplier : 1);
  return shared_data ? n : 2 * n;
}

std::uint64_t dataset_seed(std::uint64_t run_seed, int iter) {
  return derive_seed(run_seed, {static_cast<std::uint64_t>(iter), 0});
}
std::uint64_t lstd_dataset_seed(std::uint64_t run_seed, int iter) {
  return derive_seed(run_seed, {static_cast<std::uint64_t>(iter), 1});
}
std::uint64_t fit_seed(std::uint64_t run_seed, int iter) {
  return derive_seed(run_seed, {static_cast<std::uint64_t>(iter), 2});
}

ErrorEvaluator::ErrorEvaluator(const Environment& env, const StateValueFn& truth, int n_eval,
                               std::uint64_t eval_seed) {
  if (const auto* tab = std::get_if<TabularModel>(&env)) {
    points_ = tabular_states(tab->n_states());
    weights_ = stationary_distribution(*tab).weights();
  } else {
    if (n_eval < 1) throw std::invalid_argument("ErrorEvaluator: n_eval must be positive");
    points_ = sample_states(env, static_cast<std::size_t>(n_eval), eval_seed);
    weights_ = Eigen::VectorXd::Constant(n_eval, 1.0 / n_eval);
  }
  truth_values_ = truth->evaluate_batch(points_);
}

double ErrorEvaluator::error(const Eigen::VectorXd& values_at_points) const {
  if (values_at_points.size() != truth_values_.size()) {
    throw DimensionError("ErrorEvaluator: value count differs from evaluation points");
  }
  const Eigen::ArrayXd diff = (values_at_points - truth_values_).array();
  return std::sqrt((weights_.array() * diff * diff).sum());
}

double evaluate_error(const ValueFunction& v, const StateValueFn& truth, const Environment& env,
                      int n_eval, std::uint64_t seed) {
  return ErrorEvaluator(env, truth, n_eval, seed).error(v);
}

RunRecord run_vi(const Environment& env, int max_iters, const ErrorEvaluator& eval) {
  if (max_iters < 1) throw std::invalid_argument("run_vi: max_iters must be positive");
  RunRecord rec;
  rec.algo = Algo::kVI;
  rec.initial_error = eval.error(Eigen::VectorXd::Zero(eval.points().rows()));

  if (const auto* tab = std::get_if<TabularModel>(&env)) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(tab->n_states());
    for (int t = 1; t <= max_iters; ++t) {
      const auto start = Clock::now();
      v = bellman_apply(*tab, v);
      rec.rows.push_back({t, 0, eval.error(v), 0.0, elapsed_ms(start)});
    }
    rec.final_value = std::make_shared<TableValueFn>(v);
    return rec;
  }

  // Quadratic recursions: V_t(x) = z^T P_t z + c_t with z = x, or z = z(x)
  // for the nonlinear system.
  const bool nonlinear = std::holds_alternative<NonlinearModel>(env);
  const StateMatrix coords = nonlinear ? nonlinear_coords(eval.points()) : eval.points();
  const int d = env_state_dim(env);
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(d, d);
  double c = 0.0;
  for (int t = 1; t <= max_iters; ++t) {
    const auto start = Clock::now();
    if (const auto* arch = std::get_if<ArchModel>(&env)) {
      const double tr = (p * arch->noise_cov).trace();
      c = arch->gamma * c + arch->gamma * arch->q_scalar * tr;
      p = arch->cost_mat +
          arch->gamma * (arch->a_mat.transpose() * p * arch->a_mat + arch->scale_mat * tr);
    } else {
      const LqrModel& lqr = nonlinear ? std::get<NonlinearModel>(env).inner : std::get<LqrModel>(env);
      const Eigen::MatrixXd m = lqr.closed_loop();
      c = lqr.gamma * c + lqr.gamma * (p * lqr.noise_cov).trace();
      p = lqr.state_cost() + lqr.gamma * m.transpose() * p * m;
    }
    p = 0.5 * (p + p.transpose());
    rec.rows.push_back({t, 0, eval.error(quadratic_values(coords, p, c)), 0.0, elapsed_ms(start)});
  }
  rec.final_value = nonlinear ? std::make_shared<QuadraticValueFn>(p, c, &NonlinearModel::to_z)
                              : std::make_shared<QuadraticValueFn>(p, c);
  return rec;
}

RunRecord run_fvi(const Environment& env, const RegressorConfig& regressor,
                  const IterationBudget& budget, const ErrorEvaluator& eval, std::uint64_t seed,
                  const RunOptions& options) {
  budget.validate();
  regressor.validate();
  const double gamma = env_gamma(env);
  RunRecord rec;
  rec.algo = Algo::kFVI;
  rec.seeds = {seed};
  rec.initial_error = eval.error(Eigen::VectorXd::Zero(eval.points().rows()));

  StateValueFn v = std::make_shared<ZeroValueFn>();
  long long cum = 0;
  for (int t = 1; t <= budget.max_iters; ++t) {
    const auto start = Clock::now();
    const long long n = static_cast<long long>(budget.n_per_iter) *
                        (t == 1 ? budget.first_iter_multiplier : 1);
    const Dataset data = sample_transitions(env, static_cast<std::size_t>(n), dataset_seed(seed, t));
    const RegressorConfig& cfg =
        (t == 1 && options.first_iter_regressor) ? *options.first_iter_regressor : regressor;
    v = fit_backup(*v, data, gamma, cfg, fit_seed(seed, t));
    cum += n;
    rec.rows.push_back({t, cum, eval.error(*v), 0.0, elapsed_ms(start)});
  }
  rec.final_value = v;
  return rec;
}

RunRecord run_kbb(const Environment& env, const RegressorConfig& regressor,
                  const IterationBudget& budget, const ErrorEvaluator& eval, std::uint64_t seed,
                  const RunOptions& options) {
  budget.validate();
  regressor.validate();
  const double gamma = env_gamma(env);
  RunRecord rec;
  rec.algo = Algo::kKBB;
  rec.seeds = {seed};
  rec.initial_error = eval.error(Eigen::VectorXd::Zero(eval.points().rows()));

  BasisSet basis;
  Eigen::VectorXd alpha;
  // Basis functions evaluated at the error-evaluation points, one column each.
  Eigen::MatrixXd basis_at_eval(eval.points().rows(), 0);
  long long cum = 0;

  for (int t = 1; t <= budget.max_iters; ++t) {
    const auto start = Clock::now();
    const long long n = static_cast<long long>(budget.n_per_iter) *
                        (t == 1 ? budget.first_iter_multiplier : 1);
    const Dataset reg = sample_transitions(env, static_cast<std::size_t>(n), dataset_seed(seed, t));
    cum += n;

    Eigen::MatrixXd phi = evaluate_basis(basis, reg.states());
    Eigen::MatrixXd phi_next = evaluate_basis(basis, reg.next_states());
    const Eigen::VectorXd v_x = basis.empty() ? Eigen::VectorXd::Zero(reg.size()) : Eigen::VectorXd(phi * alpha);
    const Eigen::VectorXd v_xp =
        basis.empty() ? Eigen::VectorXd::Zero(reg.size()) : Eigen::VectorXd(phi_next * alpha);

    const RegressorConfig& cfg =
        (t == 1 && options.first_iter_regressor) ? *options.first_iter_regressor : regressor;
    const Eigen::VectorXd targets = residual_targets(v_x, v_xp, reg, gamma);
    const FittedFunctionPtr candidate = fit(reg.kind(), reg.states(), targets, cfg, fit_seed(seed, t));

    const Eigen::VectorXd cand_x = candidate->evaluate_batch(reg.states());
    const BasisCheck check = check_new_basis(
        phi, cand_x, Eigen::VectorXd::Constant(reg.size(), 1.0 / static_cast<double>(reg.size())));
    RunRow row{t, 0, 0.0, 0.0, 0.0, check.rejected};
    if (!check.rejected) {
      basis.push_back(candidate);
      phi.conservativeResize(Eigen::NoChange, phi.cols() + 1);
      phi.col(phi.cols() - 1) = cand_x;
      phi_next.conservativeResize(Eigen::NoChange, phi_next.cols() + 1);
      phi_next.col(phi_next.cols() - 1) = candidate->evaluate_batch(reg.next_states());
      basis_at_eval.conservativeResize(Eigen::NoChange, basis_at_eval.cols() + 1);
      basis_at_eval.col(basis_at_eval.cols() - 1) = candidate->evaluate_batch(eval.points());
    }

    if (!basis.empty()) {
      try {
        LstdSolution sol;
        if (budget.shared_data) {
          sol = solve_lstd_system(build_lstd_system(phi, phi_next, reg.rewards(), gamma));
        } else {
          const Dataset lstd_data = sample_transitions(env, static_cast<std::size_t>(n),
                                                       lstd_dataset_seed(seed, t));
          cum += n;
          sol = lstd_solve(basis, lstd_data, gamma);
        }
        alpha = std::move(sol.coeffs);
        row.ridge_used = sol.ridge_used;
      } catch (const LstdError& e) {
        rec.failed = true;
        rec.failure = "iteration " + std::to_string(t) + ": " + e.what();
        break;
      }
    } else if (!budget.shared_data) {
      cum += n;  // the LSTD dataset is still drawn and charged
    }

    row.cum_samples = cum;
    row.mu_error = basis.empty() ? eval.error(Eigen::VectorXd::Zero(eval.points().rows()))
                                 : eval.error(Eigen::VectorXd(basis_at_eval * alpha));
    row.wall_ms = elapsed_ms(start);
    rec.rows.push_back(row);
  }
  if (basis.empty()) {
    rec.final_value = std::make_shared<ZeroValueFn>();
  } else {
    rec.final_value = std::make_shared<BasisSumValueFn>(basis, alpha);
  }
  return rec;
}

}  // namespace kbb
