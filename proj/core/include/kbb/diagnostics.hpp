#pragma once

#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "kbb/algorithms.hpp"
#include "kbb/mrp.hpp"

namespace kbb {

class NotReversibleError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Discount operator Q = I - gamma P of a tabular model together with its
/// stationary law and dense inverse.
struct QOperator {
  explicit QOperator(TabularModel model);
  QOperator(TabularModel model, Distribution mu);

  TabularModel model;
  Distribution mu;
  Eigen::MatrixXd q_mat;
  Eigen::MatrixXd q_inv;
  bool reversible;
};

struct SpectralPair {
  double mineig = 0.0;
  double maxeig = 0.0;
};

/// <f, Q g>_mu. Throws NotReversibleError unless the chain is reversible.
double q_inner(const QOperator& qop, const Eigen::VectorXd& f, const Eigen::VectorXd& g);

/// sqrt(<f, Q f>_mu). Defined for any chain since <f, P f>_mu <= |f|^2_mu.
double q_norm(const QOperator& qop, const Eigen::VectorXd& f);

/// mu-orthonormal basis (as columns) of span{r, Qr, ..., Q^{depth-1} r},
/// built by modified Gram-Schmidt with one re-orthogonalization pass.
/// Stops early once a new direction has mu-norm below 1e-10.
Eigen::MatrixXd krylov_basis(const QOperator& qop, int depth);

/// Wraps the columns of `columns` as table-valued basis functions.
BasisSet to_basis_set(const Eigen::MatrixXd& columns);

/// Galerkin solution x in K_depth with r - Q x mu-orthogonal to K_depth.
Eigen::VectorXd krylov_projection_solution(const QOperator& qop, int depth);

/// Extremes of |z|^2_mu over z mu-orthogonal to the columns of `basis` with
/// <z, Q^{-1} z>_mu = 1. Throws NotReversibleError for non-reversible chains
/// and std::invalid_argument("degenerate complement") when `basis` spans
/// the whole space.
SpectralPair restricted_spectral_values(const QOperator& qop, const Eigen::MatrixXd& basis);

/// KBB with exact population residuals and population LSTD.
struct OracleTrace {
  RunRecord record;
  Eigen::MatrixXd iterates;  // column t-1 holds V_t
  Eigen::MatrixXd basis;     // accepted residuals, in order
  std::vector<int> basis_size;   // basis dimension after iteration t = 0..T
  std::vector<double> q_errors;  // |V_t - V*|_Q for t = 0..T
};

OracleTrace oracle_kbb(const QOperator& qop, int max_iters);
OracleTrace oracle_kbb(const TabularModel& model, int max_iters);

struct RateRow {
  int t = 0;
  double mineig = 0.0;
  double maxeig = 0.0;
  double bound = 0.0;     // 1 - mineig^2 / (8 maxeig)
  double observed = 0.0;  // |V_{t+1} - V*|_Q^2 / |V_t - V*|_Q^2
};

/// Per-iteration contraction bound against the observed Q-norm ratio of
/// oracle KBB, for t = 0 .. max_iters-1. Rows whose denominator is at most
/// 1e-14 or whose basis already spans the space are omitted. Throws
/// NotReversibleError for non-reversible chains and std::logic_error if an
/// observed ratio exceeds its bound by more than 1e-8.
std::vector<RateRow> check_theorem1_rate(const TabularModel& model, int max_iters);

struct SpectraRow {
  int t = 0;
  double mineig = 0.0;
  double maxeig = 0.0;
  double bound = 0.0;
};

/// Restricted spectral values along Krylov bases of depth 0 .. depth-1. Past
/// saturation the basis stays at the full Krylov space.
std::vector<SpectraRow> krylov_spectra(const QOperator& qop, int depth);

}  // namespace kbb
