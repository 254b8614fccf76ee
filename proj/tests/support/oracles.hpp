#pragma once

// Dense reference computations used as test oracles. They avoid the library
// code paths they check (different factorizations, direct formulas).

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "kbb/mrp.hpp"

namespace kbb::test {

/// (I - gamma P)^{-1} r via column-pivoted Householder QR.
inline Eigen::VectorXd dense_value(const Eigen::MatrixXd& p, const Eigen::VectorXd& r,
                                   double gamma) {
  const Eigen::MatrixXd q = Eigen::MatrixXd::Identity(p.rows(), p.cols()) - gamma * p;
  return q.colPivHouseholderQr().solve(r);
}

inline Eigen::VectorXd dense_value(const TabularModel& m) {
  return dense_value(m.trans(), m.reward(), m.gamma());
}

/// Left Perron vector of P from the null space of (P^T - I), normalized.
inline Eigen::VectorXd dense_stationary(const Eigen::MatrixXd& p) {
  const Eigen::Index n = p.rows();
  Eigen::MatrixXd a(n + 1, n);
  a.topRows(n) = p.transpose() - Eigen::MatrixXd::Identity(n, n);
  a.row(n).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n + 1);
  b[n] = 1.0;
  return a.colPivHouseholderQr().solve(b);
}

inline double weighted_norm(const Eigen::VectorXd& f, const Eigen::VectorXd& mu) {
  return std::sqrt((mu.array() * f.array().square()).sum());
}

/// sqrt(f^T D (I - gamma P) f).
inline double dense_q_norm(const Eigen::VectorXd& f, const Eigen::MatrixXd& p, double gamma,
                           const Eigen::VectorXd& mu) {
  const Eigen::VectorXd qf = f - gamma * (p * f);
  return std::sqrt(f.dot(mu.cwiseProduct(qf)));
}

/// Column-major Kronecker product.
inline Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

inline Eigen::VectorXd vec(const Eigen::MatrixXd& m) {
  return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

inline Eigen::MatrixXd unvec(const Eigen::VectorXd& v, Eigen::Index d) {
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), d, d);
}

struct SpectralOracle {
  double mineig;
  double maxeig;
};

/// Extremes of |z|^2_mu / <z, Q^{-1} z>_mu over the mu-orthogonal complement
/// of span(basis): kernel of basis^T D from a full-pivot LU, then a
/// generalized symmetric-definite eigenproblem on that (non-orthonormal)
/// kernel basis.
inline SpectralOracle dense_restricted_values(const Eigen::MatrixXd& p, double gamma,
                                              const Eigen::VectorXd& mu,
                                              const Eigen::MatrixXd& basis) {
  const Eigen::Index n = p.rows();
  Eigen::MatrixXd kernel;
  if (basis.cols() == 0) {
    kernel = Eigen::MatrixXd::Identity(n, n);
  } else {
    Eigen::MatrixXd normalized = basis;
    for (Eigen::Index j = 0; j < normalized.cols(); ++j) {
      normalized.col(j) /= weighted_norm(normalized.col(j), mu);
    }
    const Eigen::MatrixXd constraint = normalized.transpose() * mu.asDiagonal();
    kernel = Eigen::FullPivLU<Eigen::MatrixXd>(constraint).kernel();
  }
  const Eigen::MatrixXd q = Eigen::MatrixXd::Identity(n, n) - gamma * p;
  const Eigen::MatrixXd q_inv = q.fullPivLu().inverse();
  const Eigen::MatrixXd a = kernel.transpose() * mu.asDiagonal() * kernel;
  Eigen::MatrixXd b = kernel.transpose() * mu.asDiagonal() * q_inv * kernel;
  b = 0.5 * (b + b.transpose());
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(0.5 * (a + a.transpose()), b,
                                                                Eigen::EigenvaluesOnly);
  return {ges.eigenvalues().minCoeff(), ges.eigenvalues().maxCoeff()};
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

}  // namespace kbb::test
