#pragma once

#include <stdexcept>

#include <Eigen/Core>

namespace kbb {

/// Finite-state Markov reward process: row-stochastic transition matrix,
/// per-state reward, discount in (0, 1). Validated on construction.
class TabularModel {
 public:
  TabularModel(Eigen::MatrixXd trans, Eigen::VectorXd reward, double gamma);

  int n_states() const { return static_cast<int>(reward_.size()); }
  const Eigen::MatrixXd& trans() const { return trans_; }
  const Eigen::VectorXd& reward() const { return reward_; }
  double gamma() const { return gamma_; }

 private:
  Eigen::MatrixXd trans_;
  Eigen::VectorXd reward_;
  double gamma_;
};

/// Probability weights over tabular states.
class Distribution {
 public:
  explicit Distribution(Eigen::VectorXd weights);

  static Distribution uniform(int n);

  int size() const { return static_cast<int>(weights_.size()); }
  const Eigen::VectorXd& weights() const { return weights_; }

 private:
  Eigen::VectorXd weights_;
};

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// r + gamma * P * v.
Eigen::VectorXd bellman_apply(const TabularModel& model, const Eigen::VectorXd& v);

/// Solves (I - gamma P) V = r by dense LU.
Eigen::VectorXd solve_exact(const TabularModel& model);

/// Stationary law by power iteration from the uniform vector (tolerance 1e-12
/// in l1, at most 100*n steps). The transition graph is first checked for
/// irreducibility and aperiodicity; a chain failing either check, or one that
/// does not settle within the step cap, raises ConvergenceError.
Distribution stationary_distribution(const TabularModel& model);

/// sqrt(sum_i mu_i f_i^2).
double mu_norm(const Eigen::VectorXd& f, const Distribution& mu);

/// sum_i mu_i f_i g_i.
double mu_inner(const Eigen::VectorXd& f, const Eigen::VectorXd& g,
                const Distribution& mu);

/// Detailed balance mu_i P_ij = mu_j P_ji for every pair, within 1e-10.
bool is_reversible(const TabularModel& model, const Distribution& mu);

}  // namespace kbb
