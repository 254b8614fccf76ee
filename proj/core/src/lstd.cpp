#include "kbb/lstd.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/LU>
#include <Eigen/QR>

namespace kbb {

LstdSystem build_lstd_system(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& phi_next,
                             const Eigen::VectorXd& rewards, double gamma) {
  const Eigen::Index n = phi.rows();
  const Eigen::Index k = phi.cols();
  if (phi_next.rows() != n || phi_next.cols() != k || rewards.size() != n) {
    throw DimensionError("build_lstd_system: feature/reward shapes disagree");
  }
  if (n == 0) throw std::invalid_argument("build_lstd_system: no samples");
  LstdSystem sys{Eigen::MatrixXd::Zero(k, k), Eigen::VectorXd::Zero(k)};
  Eigen::VectorXd diff(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index c = 0; c < k; ++c) diff[c] = phi(i, c) - gamma * phi_next(i, c);
    for (Eigen::Index r = 0; r < k; ++r) {
      const double f = phi(i, r);
      for (Eigen::Index c = 0; c < k; ++c) sys.a(r, c) += f * diff[c];
      sys.b[r] += rewards[i] * f;
    }
  }
  sys.a /= static_cast<double>(n);
  sys.b /= static_cast<double>(n);
  return sys;
}

LstdSystem build_lstd_system(const BasisSet& basis, const Dataset& data, double gamma) {
  return build_lstd_system(evaluate_basis(basis, data.states()),
                           evaluate_basis(basis, data.next_states()), data.rewards(), gamma);
}

LstdSystem build_population_system(const Eigen::MatrixXd& phi, const TabularModel& model,
                                   const Distribution& mu) {
  if (phi.rows() != model.n_states() || mu.size() != model.n_states()) {
    throw DimensionError("build_population_system: basis length differs from n_states");
  }
  const Eigen::MatrixXd weighted = mu.weights().asDiagonal() * phi;
  const Eigen::MatrixXd q_phi = phi - model.gamma() * (model.trans() * phi);
  return {weighted.transpose() * q_phi, weighted.transpose() * model.reward()};
}

LstdSolution solve_lstd_system(const LstdSystem& system) {
  const Eigen::Index k = system.a.rows();
  if (k == 0) throw LstdError("lstd: empty basis");
  if (system.a.cols() != k || system.b.size() != k) throw DimensionError("lstd: shape");
  if (!system.a.allFinite() || !system.b.allFinite()) throw LstdError("lstd: non-finite system");

  Eigen::VectorXd scale(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const double d = std::abs(system.a(j, j));
    scale[j] = d > 0.0 ? 1.0 / std::sqrt(d) : 1.0;
  }
  const Eigen::MatrixXd a = scale.asDiagonal() * system.a * scale.asDiagonal();
  const Eigen::VectorXd b = scale.cwiseProduct(system.b);
  const double trace_per_dim = std::abs(a.trace()) / static_cast<double>(k);

  double ridge = 0.0;
  for (;;) {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(a + ridge * Eigen::MatrixXd::Identity(k, k));
    const double rcond = lu.rcond();
    const double cond = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
    if (cond <= kIllConditioned) {
      Eigen::VectorXd alpha = scale.cwiseProduct(lu.solve(b));
      if (alpha.allFinite()) return {std::move(alpha), cond, ridge};
    }
    ridge = ridge == 0.0 ? kRidgeStart * trace_per_dim : ridge * 10.0;
    if (ridge > kRidgeMax * trace_per_dim * (1.0 + 1e-9) || !(ridge > 0.0)) {
      throw LstdError("lstd: system unsolvable (condition estimate " + std::to_string(cond) +
                      " with maximal ridge)");
    }
  }
}

LstdSolution lstd_solve(const BasisSet& basis, const Dataset& data, double gamma) {
  if (basis.empty()) throw LstdError("lstd_solve: empty basis");
  return solve_lstd_system(build_lstd_system(basis, data, gamma));
}

LstdSolution lstd_solve_population(const Eigen::MatrixXd& phi, const TabularModel& model,
                                   const Distribution& mu) {
  if (phi.cols() == 0) throw LstdError("lstd_solve_population: empty basis");
  return solve_lstd_system(build_population_system(phi, model, mu));
}

LstdSolution lstd_solve_population(const BasisSet& basis, const TabularModel& model,
                                   const Distribution& mu) {
  if (basis.empty()) throw LstdError("lstd_solve_population: empty basis");
  return lstd_solve_population(evaluate_basis(basis, tabular_states(model.n_states())), model,
                               mu);
}

BasisCheck check_new_basis(const Eigen::MatrixXd& existing, const Eigen::VectorXd& candidate,
                           const Eigen::VectorXd& weights) {
  if (candidate.size() != weights.size() ||
      (existing.cols() > 0 && existing.rows() != candidate.size())) {
    throw DimensionError("check_new_basis: shape mismatch");
  }
  const Eigen::VectorXd root = weights.cwiseSqrt();
  const Eigen::VectorXd v = root.cwiseProduct(candidate);
  BasisCheck out;
  out.norm = v.norm();
  if (!(out.norm >= kBasisMinNorm)) {
    out.rejected = true;
    return out;
  }
  if (existing.cols() == 0) return out;
  const Eigen::MatrixXd w_existing = root.asDiagonal() * existing;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(w_existing);
  const Eigen::VectorXd rotated = qr.householderQ().adjoint() * v;
  const Eigen::Index k = std::min(existing.cols(), existing.rows());
  const double orth = rotated.tail(rotated.size() - k).norm();
  const double sin2 = std::min(1.0, (orth / out.norm) * (orth / out.norm));
  out.correlation = std::sqrt(1.0 - sin2);
  out.rejected = out.correlation > kBasisMaxCorrelation;
  return out;
}

}  // namespace kbb
