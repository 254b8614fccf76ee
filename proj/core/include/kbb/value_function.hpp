#pragma once

#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace kbb {

/// Row-major block of state points, one state per row. Tabular states are
/// stored as a single column holding the state index.
using StateMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class StateKind { kDiscrete, kContinuous };

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A real-valued function on the state space. Implementations are immutable
/// after construction and safe to evaluate concurrently.
class ValueFunction {
 public:
  virtual ~ValueFunction() = default;

  virtual double evaluate(std::span<const double> x) const = 0;

  /// Evaluates every row of `xs`. Subclasses override when a batched path
  /// is cheaper than the per-point loop.
  virtual Eigen::VectorXd evaluate_batch(const StateMatrix& xs) const;

  double operator()(std::span<const double> x) const { return evaluate(x); }
};

using StateValueFn = std::shared_ptr<const ValueFunction>;
using BasisSet = std::vector<StateValueFn>;

/// Dense table over tabular states; index read from x[0].
class TableValueFn final : public ValueFunction {
 public:
  explicit TableValueFn(Eigen::VectorXd values);

  double evaluate(std::span<const double> x) const override;
  const Eigen::VectorXd& values() const { return values_; }

 private:
  Eigen::VectorXd values_;
};

/// x -> z(x)^T P z(x) + offset, with z the identity unless a coordinate map
/// is supplied.
class QuadraticValueFn final : public ValueFunction {
 public:
  using CoordMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

  QuadraticValueFn(Eigen::MatrixXd p_mat, double offset,
                   CoordMap coord_map = nullptr);

  double evaluate(std::span<const double> x) const override;

  const Eigen::MatrixXd& p_mat() const { return p_mat_; }
  double offset() const { return offset_; }

 private:
  Eigen::MatrixXd p_mat_;
  double offset_;
  CoordMap coord_map_;
};

/// Weighted sum of basis functions, sum_j coeffs[j] * basis[j](x).
class BasisSumValueFn final : public ValueFunction {
 public:
  BasisSumValueFn(BasisSet basis, Eigen::VectorXd coeffs);

  double evaluate(std::span<const double> x) const override;
  Eigen::VectorXd evaluate_batch(const StateMatrix& xs) const override;

  const BasisSet& basis() const { return basis_; }
  const Eigen::VectorXd& coeffs() const { return coeffs_; }

 private:
  BasisSet basis_;
  Eigen::VectorXd coeffs_;
};

/// The identically-zero function.
class ZeroValueFn final : public ValueFunction {
 public:
  double evaluate(std::span<const double>) const override { return 0.0; }
  Eigen::VectorXd evaluate_batch(const StateMatrix& xs) const override {
    return Eigen::VectorXd::Zero(xs.rows());
  }
};

/// Evaluates `fn` on tabular states 0..n-1.
Eigen::VectorXd evaluate_on_states(const ValueFunction& fn, int n_states);

/// Columns are the basis functions evaluated at the rows of `xs`.
Eigen::MatrixXd evaluate_basis(const BasisSet& basis, const StateMatrix& xs);

/// Single-column state matrix holding indices 0..n-1.
StateMatrix tabular_states(int n_states);

inline std::span<const double> row_span(const StateMatrix& xs, Eigen::Index i) {
  return {xs.data() + i * xs.cols(), static_cast<std::size_t>(xs.cols())};
}

}  // namespace kbb
