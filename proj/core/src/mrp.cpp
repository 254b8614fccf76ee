#include "kbb/mrp.hpp"

#include <cmath>
#include <numeric>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/LU>

#include "kbb/value_function.hpp"

namespace kbb {
namespace {

constexpr double kRowSumTol = 1e-12;
constexpr double kStationaryTol = 1e-12;

// Breadth-first distances from state 0 over edges with positive probability.
std::vector<int> bfs_levels(const Eigen::MatrixXd& adj, bool transpose) {
  const int n = static_cast<int>(adj.rows());
  std::vector<int> level(n, -1);
  std::queue<int> frontier;
  level[0] = 0;
  frontier.push(0);
  while (!frontier.empty()) {
    const int i = frontier.front();
    frontier.pop();
    for (int j = 0; j < n; ++j) {
      const double w = transpose ? adj(j, i) : adj(i, j);
      if (w > 0.0 && level[j] < 0) {
        level[j] = level[i] + 1;
        frontier.push(j);
      }
    }
  }
  return level;
}

void check_irreducible_aperiodic(const Eigen::MatrixXd& p) {
  const int n = static_cast<int>(p.rows());
  const auto fwd = bfs_levels(p, false);
  const auto bwd = bfs_levels(p, true);
  for (int i = 0; i < n; ++i) {
    if (fwd[i] < 0 || bwd[i] < 0) {
      throw ConvergenceError(
          "stationary_distribution: chain is reducible (power iteration "
          "cannot converge to a unique law)");
    }
  }
  // Period of an irreducible chain: gcd over edges (i,j) of level(i)+1-level(j).
  int period = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (p(i, j) > 0.0) period = std::gcd(period, std::abs(fwd[i] + 1 - fwd[j]));
    }
  }
  if (period != 1) {
    throw ConvergenceError("stationary_distribution: chain is periodic (period " +
                           std::to_string(period) + "), power iteration does not converge");
  }
}

}  // namespace

TabularModel::TabularModel(Eigen::MatrixXd trans, Eigen::VectorXd reward, double gamma)
    : trans_(std::move(trans)), reward_(std::move(reward)), gamma_(gamma) {
  const auto n = reward_.size();
  if (n < 1) throw std::invalid_argument("TabularModel: need at least one state");
  if (trans_.rows() != n || trans_.cols() != n) {
    throw DimensionError("TabularModel: transition matrix must be n x n");
  }
  if (!(gamma_ >= 0.0 && gamma_ < 1.0)) {
    throw std::invalid_argument("TabularModel: gamma must lie in [0, 1)");
  }
  if (trans_.minCoeff() < 0.0) {
    throw std::invalid_argument("TabularModel: negative transition probability");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(trans_.row(i).sum() - 1.0) > kRowSumTol) {
      throw std::invalid_argument("TabularModel: row " + std::to_string(i) +
                                  " does not sum to 1");
    }
  }
}

Distribution::Distribution(Eigen::VectorXd weights) : weights_(std::move(weights)) {
  if (weights_.size() < 1) throw std::invalid_argument("Distribution: empty");
  if (weights_.minCoeff() < 0.0) throw std::invalid_argument("Distribution: negative weight");
  if (std::abs(weights_.sum() - 1.0) > 1e-12) {
    throw std::invalid_argument("Distribution: weights must sum to 1");
  }
}

Distribution Distribution::uniform(int n) {
  return Distribution(Eigen::VectorXd::Constant(n, 1.0 / n));
}

Eigen::VectorXd bellman_apply(const TabularModel& model, const Eigen::VectorXd& v) {
  if (v.size() != model.n_states()) {
    throw DimensionError("bellman_apply: value vector length differs from n_states");
  }
  return model.reward() + model.gamma() * (model.trans() * v);
}

Eigen::VectorXd solve_exact(const TabularModel& model) {
  const int n = model.n_states();
  const Eigen::MatrixXd q = Eigen::MatrixXd::Identity(n, n) - model.gamma() * model.trans();
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(q);
  Eigen::VectorXd v = lu.solve(model.reward());
  if (!v.allFinite()) throw std::logic_error("solve_exact: singular system");
  return v;
}

Distribution stationary_distribution(const TabularModel& model) {
  const int n = model.n_states();
  if (n > 1) check_irreducible_aperiodic(model.trans());

  Eigen::RowVectorXd mu = Eigen::RowVectorXd::Constant(n, 1.0 / n);
  const int max_steps = 100 * n;
  for (int step = 0; step < max_steps; ++step) {
    Eigen::RowVectorXd next = mu * model.trans();
    next /= next.sum();
    const double change = (next - mu).lpNorm<1>();
    mu = std::move(next);
    if (change <= kStationaryTol) {
      return Distribution(mu.transpose().cwiseMax(0.0) / mu.cwiseMax(0.0).sum());
    }
  }
  throw ConvergenceError("stationary_distribution: no convergence after " +
                         std::to_string(max_steps) + " steps");
}

double mu_norm(const Eigen::VectorXd& f, const Distribution& mu) {
  return std::sqrt(mu_inner(f, f, mu));
}

double mu_inner(const Eigen::VectorXd& f, const Eigen::VectorXd& g,
                const Distribution& mu) {
  if (f.size() != mu.size() || g.size() != mu.size()) {
    throw DimensionError("mu_inner: vector length differs from distribution size");
  }
  return (mu.weights().array() * f.array() * g.array()).sum();
}

bool is_reversible(const TabularModel& model, const Distribution& mu) {
  if (mu.size() != model.n_states()) {
    throw DimensionError("is_reversible: distribution size differs from n_states");
  }
  const Eigen::MatrixXd flow = mu.weights().asDiagonal() * model.trans();
  return (flow - flow.transpose()).cwiseAbs().maxCoeff() <= 1e-10;
}

}  // namespace kbb
