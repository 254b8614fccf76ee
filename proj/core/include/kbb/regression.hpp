#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "kbb/dataset.hpp"
#include "kbb/value_function.hpp"

namespace kbb {

enum class RegressorKind { kTabularMean, kBoostedTrees };

struct RegressorConfig {
  RegressorKind kind = RegressorKind::kBoostedTrees;
  int n_trees = 200;
  int max_depth = 3;
  double learning_rate = 0.1;
  int min_leaf = 5;
  double subsample = 1.0;

  void validate() const;
};

struct RegressionPair {
  std::vector<double> x;
  double y = 0.0;
};

/// Output of a regression fit; evaluation is total and deterministic.
class FittedFunction : public ValueFunction {
 public:
  virtual RegressorKind kind() const = 0;
};

using FittedFunctionPtr = std::shared_ptr<const FittedFunction>;

/// Per-state sample averages; states never seen evaluate to 0.
class TabularMeanFn final : public FittedFunction {
 public:
  explicit TabularMeanFn(std::vector<double> table) : table_(std::move(table)) {}

  double evaluate(std::span<const double> x) const override;
  RegressorKind kind() const override { return RegressorKind::kTabularMean; }
  const std::vector<double>& table() const { return table_; }

 private:
  std::vector<double> table_;
};

/// Axis-aligned binary regression tree stored as a flat node array; node 0
/// is the root. A node with feature < 0 is a leaf.
struct RegressionTree {
  struct Node {
    int feature = -1;
    double threshold = 0.0;  // x[feature] <= threshold goes left
    int left = -1;
    int right = -1;
    double value = 0.0;
  };
  std::vector<Node> nodes;

  double evaluate(std::span<const double> x) const;
  int depth() const;
};

/// base + sum_k weight_k * tree_k(x).
class TreeEnsembleFn final : public FittedFunction {
 public:
  TreeEnsembleFn(double base, std::vector<RegressionTree> trees, std::vector<double> weights,
                 std::vector<double> stage_mse = {});

  double evaluate(std::span<const double> x) const override;
  Eigen::VectorXd evaluate_batch(const StateMatrix& xs) const override;
  RegressorKind kind() const override { return RegressorKind::kBoostedTrees; }

  double base() const { return base_; }
  const std::vector<RegressionTree>& trees() const { return trees_; }
  const std::vector<double>& weights() const { return weights_; }
  /// Training MSE after stage 0 (the constant) and after each tree. Not
  /// serialized.
  const std::vector<double>& stage_mse() const { return stage_mse_; }

 private:
  double base_;
  std::vector<RegressionTree> trees_;
  std::vector<double> weights_;
  std::vector<double> stage_mse_;
};

/// Least-squares fit of y on x. TabularMean needs one-column integer states;
/// BoostedTrees runs gradient boosting with CART trees grown greedily on
/// variance reduction. Deterministic given (inputs, config, seed).
FittedFunctionPtr fit(StateKind kind, const StateMatrix& x, const Eigen::VectorXd& y,
                      const RegressorConfig& config, std::uint64_t seed);
FittedFunctionPtr fit(std::span<const RegressionPair> pairs, StateKind kind,
                      const RegressorConfig& config, std::uint64_t seed);

/// y_i = v(x_i) - (r_i + gamma v(x'_i)).
Eigen::VectorXd residual_targets(const Eigen::VectorXd& v_at_states,
                                 const Eigen::VectorXd& v_at_next, const Dataset& data,
                                 double gamma);
/// y_i = r_i + gamma v(x'_i).
Eigen::VectorXd backup_targets(const Eigen::VectorXd& v_at_next, const Dataset& data,
                               double gamma);

/// Fits the sampled Bellman residual v - T v.
FittedFunctionPtr fit_residual(const ValueFunction& v, const Dataset& data, double gamma,
                               const RegressorConfig& config, std::uint64_t seed);
/// Fits the sampled Bellman backup T v.
FittedFunctionPtr fit_backup(const ValueFunction& v, const Dataset& data, double gamma,
                             const RegressorConfig& config, std::uint64_t seed);

/// Self-describing binary blob ("KBBF" magic, version, kind tag, payload).
std::vector<std::uint8_t> serialize(const FittedFunction& fn);
FittedFunctionPtr deserialize(std::span<const std::uint8_t> blob);

}  // namespace kbb
