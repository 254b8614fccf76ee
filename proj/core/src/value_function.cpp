#include "kbb/value_function.hpp"

#include <cmath>
#include <utility>

namespace kbb {

Eigen::VectorXd ValueFunction::evaluate_batch(const StateMatrix& xs) const {
  Eigen::VectorXd out(xs.rows());
  for (Eigen::Index i = 0; i < xs.rows(); ++i) out[i] = evaluate(row_span(xs, i));
  return out;
}

TableValueFn::TableValueFn(Eigen::VectorXd values) : values_(std::move(values)) {}

double TableValueFn::evaluate(std::span<const double> x) const {
  if (x.size() != 1) throw DimensionError("TableValueFn: expects a tabular state");
  const auto idx = static_cast<Eigen::Index>(std::llround(x[0]));
  if (idx < 0 || idx >= values_.size()) {
    throw DimensionError("TableValueFn: state index out of range");
  }
  return values_[idx];
}

QuadraticValueFn::QuadraticValueFn(Eigen::MatrixXd p_mat, double offset,
                                   CoordMap coord_map)
    : p_mat_(std::move(p_mat)), offset_(offset), coord_map_(std::move(coord_map)) {
  if (p_mat_.rows() != p_mat_.cols()) {
    throw DimensionError("QuadraticValueFn: matrix must be square");
  }
  if (p_mat_.size() > 0 &&
      (p_mat_ - p_mat_.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
    throw std::invalid_argument("QuadraticValueFn: matrix must be symmetric");
  }
}

double QuadraticValueFn::evaluate(std::span<const double> x) const {
  if (static_cast<Eigen::Index>(x.size()) != p_mat_.rows()) {
    throw DimensionError("QuadraticValueFn: state dimension mismatch");
  }
  Eigen::VectorXd z = Eigen::Map<const Eigen::VectorXd>(x.data(), p_mat_.rows());
  if (coord_map_) z = coord_map_(z);
  return z.dot(p_mat_ * z) + offset_;
}

BasisSumValueFn::BasisSumValueFn(BasisSet basis, Eigen::VectorXd coeffs)
    : basis_(std::move(basis)), coeffs_(std::move(coeffs)) {
  if (static_cast<Eigen::Index>(basis_.size()) != coeffs_.size()) {
    throw DimensionError("BasisSumValueFn: coefficient count must match basis size");
  }
}

double BasisSumValueFn::evaluate(std::span<const double> x) const {
  double acc = 0.0;
  for (std::size_t j = 0; j < basis_.size(); ++j) {
    acc += coeffs_[static_cast<Eigen::Index>(j)] * basis_[j]->evaluate(x);
  }
  return acc;
}

Eigen::VectorXd BasisSumValueFn::evaluate_batch(const StateMatrix& xs) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(xs.rows());
  for (std::size_t j = 0; j < basis_.size(); ++j) {
    out += coeffs_[static_cast<Eigen::Index>(j)] * basis_[j]->evaluate_batch(xs);
  }
  return out;
}

StateMatrix tabular_states(int n_states) {
  StateMatrix xs(n_states, 1);
  for (int i = 0; i < n_states; ++i) xs(i, 0) = i;
  return xs;
}

Eigen::VectorXd evaluate_on_states(const ValueFunction& fn, int n_states) {
  return fn.evaluate_batch(tabular_states(n_states));
}

Eigen::MatrixXd evaluate_basis(const BasisSet& basis, const StateMatrix& xs) {
  Eigen::MatrixXd out(xs.rows(), static_cast<Eigen::Index>(basis.size()));
  for (std::size_t j = 0; j < basis.size(); ++j) {
    out.col(static_cast<Eigen::Index>(j)) = basis[j]->evaluate_batch(xs);
  }
  return out;
}

}  // namespace kbb
