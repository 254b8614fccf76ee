#pragma once

#include <stdexcept>

#include <Eigen/Core>

#include "kbb/dataset.hpp"
#include "kbb/mrp.hpp"
#include "kbb/value_function.hpp"

namespace kbb {

inline constexpr double kIllConditioned = 1e12;
inline constexpr double kRidgeStart = 1e-8;
inline constexpr double kRidgeMax = 1e-2;
inline constexpr double kBasisMinNorm = 1e-10;
inline constexpr double kBasisMaxCorrelation = 1.0 - 1e-10;

class LstdError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A alpha = b with A = E[phi(x) (phi(x) - gamma phi(x'))^T], b = E[r phi(x)].
struct LstdSystem {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
};

struct LstdSolution {
  Eigen::VectorXd coeffs;
  double cond_estimate = 0.0;
  double ridge_used = 0.0;
};

/// Empirical system from features at x (rows of `phi`) and x' (`phi_next`).
/// Accumulates sample by sample in index order, then divides by N.
LstdSystem build_lstd_system(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& phi_next,
                             const Eigen::VectorXd& rewards, double gamma);
LstdSystem build_lstd_system(const BasisSet& basis, const Dataset& data, double gamma);

/// Population system on a tabular model; `phi` holds basis vectors as columns.
LstdSystem build_population_system(const Eigen::MatrixXd& phi, const TabularModel& model,
                                   const Distribution& mu);

/// Solves after symmetric diagonal equilibration by |A_jj|^{-1/2}. When the
/// 1-norm condition estimate of the equilibrated matrix exceeds 1e12 a ridge
/// lambda I is added, lambda starting at 1e-8 tr/k and growing tenfold up to
/// 1e-2 tr/k; beyond that LstdError is thrown. `ridge_used` and
/// `cond_estimate` refer to the equilibrated system.
LstdSolution solve_lstd_system(const LstdSystem& system);

LstdSolution lstd_solve(const BasisSet& basis, const Dataset& data, double gamma);
LstdSolution lstd_solve_population(const BasisSet& basis, const TabularModel& model,
                                   const Distribution& mu);
LstdSolution lstd_solve_population(const Eigen::MatrixXd& phi, const TabularModel& model,
                                   const Distribution& mu);

/// Near-duplicate screen for a candidate basis column against the existing
/// columns, in the inner product weighted by `weights`.
struct BasisCheck {
  double norm = 0.0;         // weighted RMS of the candidate
  double correlation = 0.0;  // cosine of the angle to the existing span
  bool rejected = false;
};

BasisCheck check_new_basis(const Eigen::MatrixXd& existing, const Eigen::VectorXd& candidate,
                           const Eigen::VectorXd& weights);

}  // namespace kbb
