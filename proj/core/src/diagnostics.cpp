#include "kbb/diagnostics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>
#include <utility>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>

#include "kbb/lstd.hpp"

namespace kbb {
namespace {

constexpr double kSaturation = 1e-10;
constexpr double kRateSlack = 1e-8;
constexpr double kRateDenominator = 1e-14;

void require_reversible(const QOperator& qop, const char* what) {
  if (!qop.reversible) {
    throw NotReversibleError(std::string(what) + ": chain is not reversible");
  }
}

double contraction_bound(const SpectralPair& s) { return 1.0 - s.mineig * s.mineig / (8.0 * s.maxeig); }

}  // namespace

QOperator::QOperator(TabularModel m) : QOperator(m, stationary_distribution(m)) {}

QOperator::QOperator(TabularModel m, Distribution dist)
    : model(std::move(m)), mu(std::move(dist)), reversible(false) {
  const int n = model.n_states();
  if (mu.size() != n) throw DimensionError("QOperator: distribution length differs from n_states");
  q_mat = Eigen::MatrixXd::Identity(n, n) - model.gamma() * model.trans();
  q_inv = q_mat.partialPivLu().solve(Eigen::MatrixXd::Identity(n, n));
  reversible = is_reversible(model, mu);
}

double q_inner(const QOperator& qop, const Eigen::VectorXd& f, const Eigen::VectorXd& g) {
  require_reversible(qop, "q_inner");
  if (f.size() != qop.q_mat.rows() || g.size() != qop.q_mat.rows()) {
    throw DimensionError("q_inner: vector length differs from n_states");
  }
  return f.dot(qop.mu.weights().cwiseProduct(qop.q_mat * g));
}

double q_norm(const QOperator& qop, const Eigen::VectorXd& f) {
  if (f.size() != qop.q_mat.rows()) throw DimensionError("q_norm: length differs from n_states");
  return std::sqrt(std::max(0.0, f.dot(qop.mu.weights().cwiseProduct(qop.q_mat * f))));
}

Eigen::MatrixXd krylov_basis(const QOperator& qop, int depth) {
  const int n = qop.model.n_states();
  if (depth < 0 || depth > n) throw std::invalid_argument("krylov_basis: depth must lie in [0, n]");
  const Eigen::VectorXd& w = qop.mu.weights();
  auto inner = [&w](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return a.dot(w.cwiseProduct(b));
  };

  Eigen::MatrixXd basis(n, depth);
  int k = 0;
  Eigen::VectorXd next = qop.model.reward();
  const double r_norm = std::sqrt(inner(next, next));
  if (depth == 0 || r_norm == 0.0) return Eigen::MatrixXd(n, 0);
  double scale = r_norm;
  while (k < depth) {
    for (int pass = 0; pass < 2; ++pass) {
      for (int j = 0; j < k; ++j) next -= inner(basis.col(j), next) * basis.col(j);
    }
    const double norm = std::sqrt(inner(next, next));
    if (norm < kSaturation * scale) break;
    basis.col(k++) = next / norm;
    next = qop.q_mat * basis.col(k - 1);
    scale = std::sqrt(inner(next, next));
  }
  return basis.leftCols(k);
}

BasisSet to_basis_set(const Eigen::MatrixXd& columns) {
  BasisSet out;
  out.reserve(columns.cols());
  for (Eigen::Index j = 0; j < columns.cols(); ++j) {
    out.push_back(std::make_shared<TableValueFn>(columns.col(j)));
  }
  return out;
}

Eigen::VectorXd krylov_projection_solution(const QOperator& qop, int depth) {
  const Eigen::MatrixXd u = krylov_basis(qop, depth);
  const int n = qop.model.n_states();
  if (u.cols() == 0) return Eigen::VectorXd::Zero(n);
  const Eigen::MatrixXd du = qop.mu.weights().asDiagonal() * u;
  const Eigen::MatrixXd h = du.transpose() * qop.q_mat * u;
  const Eigen::VectorXd rhs = du.transpose() * qop.model.reward();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(h);
  if (!lu.isInvertible()) {
    throw std::runtime_error("krylov_projection_solution: singular projected system");
  }
  return u * lu.solve(rhs);
}

SpectralPair restricted_spectral_values(const QOperator& qop, const Eigen::MatrixXd& basis) {
  require_reversible(qop, "restricted_spectral_values");
  const int n = qop.model.n_states();
  if (basis.cols() > 0 && basis.rows() != n) {
    throw DimensionError("restricted_spectral_values: basis length differs from n_states");
  }
  // Work in y = D^{1/2} z, where the mu inner product becomes Euclidean.
  const Eigen::VectorXd root = qop.mu.weights().cwiseSqrt();
  const Eigen::VectorXd inv_root = root.cwiseInverse();
  Eigen::MatrixXd complement;
  if (basis.cols() == 0) {
    complement = Eigen::MatrixXd::Identity(n, n);
  } else {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(root.asDiagonal() * basis);
    qr.setThreshold(kSaturation);
    const Eigen::Index rank = qr.rank();
    if (rank >= n) throw std::invalid_argument("degenerate complement");
    const Eigen::MatrixXd full = qr.householderQ();
    complement = full.rightCols(n - rank);
  }
  Eigen::MatrixXd q_inv_sym = root.asDiagonal() * qop.q_inv * inv_root.asDiagonal();
  q_inv_sym = 0.5 * (q_inv_sym + q_inv_sym.transpose());
  const Eigen::MatrixXd c_q = complement.transpose() * q_inv_sym * complement;
  // Pencil (I, C_Q): |z|^2_mu / <z, Q^{-1} z>_mu ranges over 1 / eig(C_Q).
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (c_q + c_q.transpose()),
                                                     Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& ev = eig.eigenvalues();
  return {1.0 / ev.maxCoeff(), 1.0 / ev.minCoeff()};
}

OracleTrace oracle_kbb(const QOperator& qop, int max_iters) {
  if (max_iters < 1) throw std::invalid_argument("oracle_kbb: max_iters must be positive");
  const TabularModel& model = qop.model;
  const int n = model.n_states();
  const Eigen::VectorXd vstar = solve_exact(model);

  OracleTrace trace;
  trace.record.algo = Algo::kKBB;
  trace.record.initial_error = mu_norm(vstar, qop.mu);
  trace.iterates.resize(n, max_iters);
  trace.basis.resize(n, 0);
  trace.q_errors.push_back(q_norm(qop, vstar));
  trace.basis_size.push_back(0);

  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  for (int t = 1; t <= max_iters; ++t) {
    const auto start = std::chrono::steady_clock::now();
    const Eigen::VectorXd residual = v - bellman_apply(model, v);
    const BasisCheck check = check_new_basis(trace.basis, residual, qop.mu.weights());
    RunRow row;
    row.iter = t;
    row.basis_rejected = check.rejected;
    if (!check.rejected) {
      trace.basis.conservativeResize(Eigen::NoChange, trace.basis.cols() + 1);
      trace.basis.col(trace.basis.cols() - 1) = residual;
    }
    if (trace.basis.cols() > 0) {
      const LstdSolution sol = lstd_solve_population(trace.basis, model, qop.mu);
      v = trace.basis * sol.coeffs;
      row.ridge_used = sol.ridge_used;
    }
    row.mu_error = mu_norm(v - vstar, qop.mu);
    row.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    trace.record.rows.push_back(row);
    trace.iterates.col(t - 1) = v;
    trace.q_errors.push_back(q_norm(qop, v - vstar));
    trace.basis_size.push_back(static_cast<int>(trace.basis.cols()));
  }
  trace.record.final_value = std::make_shared<TableValueFn>(v);
  return trace;
}

OracleTrace oracle_kbb(const TabularModel& model, int max_iters) {
  return oracle_kbb(QOperator(model), max_iters);
}

std::vector<RateRow> check_theorem1_rate(const TabularModel& model, int max_iters) {
  const QOperator qop(model);
  require_reversible(qop, "check_theorem1_rate");
  const OracleTrace trace = oracle_kbb(qop, max_iters);
  std::vector<RateRow> rows;
  for (int t = 0; t < max_iters; ++t) {
    const double denom = trace.q_errors[t] * trace.q_errors[t];
    if (denom <= kRateDenominator) continue;
    const int k = trace.basis_size[t];
    if (k >= model.n_states()) continue;
    const SpectralPair s = restricted_spectral_values(qop, trace.basis.leftCols(k));
    RateRow row{t, s.mineig, s.maxeig, contraction_bound(s),
                trace.q_errors[t + 1] * trace.q_errors[t + 1] / denom};
    if (row.observed > row.bound + kRateSlack) {
      throw std::logic_error("check_theorem1_rate: observed ratio " + std::to_string(row.observed) +
                             " exceeds bound " + std::to_string(row.bound) + " at t = " +
                             std::to_string(t));
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<SpectraRow> krylov_spectra(const QOperator& qop, int depth) {
  require_reversible(qop, "krylov_spectra");
  if (depth < 1) throw std::invalid_argument("krylov_spectra: depth must be positive");
  const Eigen::MatrixXd full = krylov_basis(qop, std::min(depth - 1, qop.model.n_states()));
  std::vector<SpectraRow> rows;
  for (int t = 0; t < depth; ++t) {
    const Eigen::Index k = std::min<Eigen::Index>(t, full.cols());
    if (k >= qop.model.n_states()) break;
    const SpectralPair s = restricted_spectral_values(qop, full.leftCols(k));
    rows.push_back({t, s.mineig, s.maxeig, contraction_bound(s)});
  }
  return rows;
}

}  // namespace kbb
