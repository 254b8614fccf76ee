#include "kbb/diagnostics.hpp"

#include <random>

#include <gtest/gtest.h>

#include "kbb/envs.hpp"
#include "oracles.hpp"

namespace kbb {
namespace {

Eigen::VectorXd Gaussian(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

TEST(QInner, SandwichAndConstants) {
  const QOperator qop(make_reversible_tabular(15, 0.8, 1));
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(15);
  EXPECT_NEAR(q_inner(qop, one, one), 0.2, 1e-14);
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::VectorXd f = Gaussian(15, rng);
    const double sq = mu_norm(f, qop.mu) * mu_norm(f, qop.mu);
    const double q = q_inner(qop, f, f);
    EXPECT_GE(q, 0.2 * sq - 1e-12);
    EXPECT_LE(q, 1.8 * sq + 1e-12);
    EXPECT_NEAR(q_norm(qop, f), std::sqrt(q), 1e-12);
  }
}

TEST(QInner, SelfAdjointAndMatchesDenseOracle) {
  const TabularModel m = make_circular_walk(10, 0.9, 2);
  const QOperator qop(m);
  const Eigen::VectorXd mu = Eigen::VectorXd::Constant(10, 0.1);
  const Eigen::MatrixXd q = Eigen::MatrixXd::Identity(10, 10) - 0.9 * m.trans();
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd f = Gaussian(10, rng), g = Gaussian(10, rng);
    EXPECT_NEAR(q_inner(qop, f, g), f.dot(mu.asDiagonal() * (q * g)), 1e-12);
    EXPECT_NEAR(q_inner(qop, f, g), q_inner(qop, g, f), 1e-10);
  }
}

TEST(QInner, RejectsNonReversible) {
  const QOperator qop(make_random_tabular(6, 0.9, 3));
  EXPECT_FALSE(qop.reversible);
  const Eigen::VectorXd f = Eigen::VectorXd::Ones(6);
  EXPECT_THROW(q_inner(qop, f, f), NotReversibleError);
  EXPECT_GT(q_norm(qop, f), 0.0);
}

TEST(KrylovBasis, DepthOneAndSaturation) {
  const TabularModel m = make_circular_walk(12, 0.9, 3);
  const QOperator qop(m);
  const Eigen::MatrixXd k1 = krylov_basis(qop, 1);
  ASSERT_EQ(k1.cols(), 1);
  EXPECT_LE((k1.col(0) - m.reward() / mu_norm(m.reward(), qop.mu)).cwiseAbs().maxCoeff(), 1e-14);

  const TabularModel flat(m.trans(), Eigen::VectorXd::Constant(12, 3.0), 0.9);
  const QOperator qflat(flat);
  EXPECT_EQ(krylov_basis(qflat, 5).cols(), 1);
  EXPECT_LE((krylov_projection_solution(qflat, 1) - test::dense_value(flat)).cwiseAbs().maxCoeff(),
            1e-12);
}

TEST(KrylovBasis, OrthonormalAndFullRank) {
  const QOperator qop(make_circular_walk(20, 0.9, 4));
  const Eigen::MatrixXd k = krylov_basis(qop, 20);
  const Eigen::MatrixXd gram = k.transpose() * qop.mu.weights().asDiagonal() * k;
  EXPECT_LE((gram - Eigen::MatrixXd::Identity(k.cols(), k.cols())).cwiseAbs().maxCoeff(), 1e-10);
  // Rank of the raw Krylov matrix decides whether the span is everything.
  const Eigen::Index rank = k.fullPivLu().rank();
  EXPECT_EQ(rank, k.cols());
  if (k.cols() == 20) {
    const Eigen::MatrixXd proj = k * k.transpose() * qop.mu.weights().asDiagonal();
    EXPECT_LE((proj - Eigen::MatrixXd::Identity(20, 20)).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LE((krylov_projection_solution(qop, 20) - test::dense_value(qop.model))
                  .cwiseAbs()
                  .maxCoeff(),
              1e-9);
  }
}

TEST(KrylovProjection, MatchesOracleKbbIterates) {
  const QOperator qop(make_circular_walk(20, 0.9, 5));
  const OracleTrace trace = oracle_kbb(qop, 20);
  for (int t = 1; t <= trace.iterates.cols(); ++t) {
    EXPECT_LE((trace.iterates.col(t - 1) - krylov_projection_solution(qop, t)).cwiseAbs().maxCoeff(),
              1e-8)
        << "t = " << t;
  }
}

TEST(RestrictedSpectra, EmptyBasisSandwich) {
  const QOperator qop(make_reversible_tabular(12, 0.9, 6));
  const SpectralPair s = restricted_spectral_values(qop, Eigen::MatrixXd(12, 0));
  EXPECT_GE(s.mineig, 0.1 - 1e-9);
  EXPECT_LE(s.mineig, s.maxeig);
  EXPECT_LE(s.maxeig, 1.9 + 1e-9);
  const auto o = test::dense_restricted_values(qop.model.trans(), 0.9, qop.mu.weights(),
                                               Eigen::MatrixXd(12, 0));
  EXPECT_NEAR(s.mineig, o.mineig, 1e-9);
  EXPECT_NEAR(s.maxeig, o.maxeig, 1e-9);
}

TEST(RestrictedSpectra, TwoStateHandValue) {
  Eigen::MatrixXd p(2, 2);
  p << 0.5, 0.5, 0.5, 0.5;
  const QOperator qop(TabularModel(p, Eigen::Vector2d(1, 0), 0.9));
  const SpectralPair s = restricted_spectral_values(qop, Eigen::MatrixXd::Ones(2, 1));
  EXPECT_NEAR(s.mineig, 1.0, 1e-12);
  EXPECT_NEAR(s.maxeig, 1.0, 1e-12);
}

TEST(RestrictedSpectra, Errors) {
  const QOperator qop(make_circular_walk(6, 0.9, 1));
  EXPECT_THROW(restricted_spectral_values(qop, Eigen::MatrixXd::Identity(6, 6)),
               std::invalid_argument);
  const QOperator bad(make_random_tabular(6, 0.9, 1));
  EXPECT_THROW(restricted_spectral_values(bad, Eigen::MatrixXd(6, 0)), NotReversibleError);
}

TEST(RestrictedSpectra, MinEigNonDecreasingAlongKrylov) {
  const QOperator qop(make_circular_walk(50, 0.9, 1));
  const Eigen::MatrixXd k = krylov_basis(qop, 30);
  double prev = 0.0;
  for (int t = 0; t <= 30; ++t) {
    const Eigen::MatrixXd b = k.leftCols(std::min<Eigen::Index>(t, k.cols()));
    const SpectralPair s = restricted_spectral_values(qop, b);
    const auto o = test::dense_restricted_values(qop.model.trans(), 0.9, qop.mu.weights(), b);
    EXPECT_NEAR(s.mineig, o.mineig, 1e-8);
    EXPECT_NEAR(s.maxeig, o.maxeig, 1e-8);
    EXPECT_GE(s.mineig, prev - 1e-10) << "t = " << t;
    prev = s.mineig;
  }
}

TEST(OracleKbb, TerminatesAndIsMonotone) {
  const TabularModel m = make_reversible_tabular(25, 0.95, 7);
  const OracleTrace trace = oracle_kbb(m, 25);
  const Eigen::VectorXd vstar = test::dense_value(m);
  const Eigen::VectorXd mu = test::dense_stationary(m.trans());
  const double target = 1e-8 * test::weighted_norm(vstar, mu);
  bool reached = false;
  for (Eigen::Index t = 0; t < trace.iterates.cols(); ++t) {
    reached = reached || test::weighted_norm(trace.iterates.col(t) - vstar, mu) <= target;
  }
  EXPECT_TRUE(reached);
  for (std::size_t t = 1; t < trace.q_errors.size(); ++t) {
    EXPECT_LE(trace.q_errors[t], trace.q_errors[t - 1] * (1 + 1e-9) + 1e-12);
  }
}

TEST(OracleKbb, ConstantRewardExactInOneStep) {
  const TabularModel base = make_random_tabular(10, 0.9, 8);
  const TabularModel m(base.trans(), Eigen::VectorXd::Constant(10, 1.0), 0.9);
  const OracleTrace trace = oracle_kbb(m, 3);
  EXPECT_LE((trace.iterates.col(0).array() - 10.0).abs().maxCoeff(), 1e-9);
}

TEST(ContractionRate, BoundHoldsAndWorstCase) {
  const double gamma = 0.9;
  const std::vector<RateRow> rows = check_theorem1_rate(make_circular_walk(50, gamma, 1), 50);
  ASSERT_FALSE(rows.empty());
  EXPECT_EQ(rows.front().t, 0);
  const double worst = 1 - (1 - gamma) * (1 - gamma) / (8 * (1 + gamma));
  for (const RateRow& r : rows) {
    EXPECT_LE(r.observed, r.bound + 1e-8);
    EXPECT_LE(r.bound, worst + 1e-12);
    EXPECT_NEAR(r.bound, 1 - r.mineig * r.mineig / (8 * r.maxeig), 1e-15);
  }
  EXPECT_THROW(check_theorem1_rate(make_random_tabular(8, 0.9, 1), 5), NotReversibleError);
}

TEST(KrylovSpectra, RowsAndDepthOne) {
  const QOperator qop(make_circular_walk(50, 0.9, 1));
  const std::vector<SpectraRow> rows = krylov_spectra(qop, 10);
  ASSERT_EQ(rows.size(), 10u);
  const SpectralPair empty = restricted_spectral_values(qop, Eigen::MatrixXd(50, 0));
  EXPECT_EQ(rows[0].mineig, empty.mineig);
  EXPECT_EQ(rows[0].maxeig, empty.maxeig);
  for (const SpectraRow& r : rows) {
    EXPECT_GE(r.mineig, 0.1 - 1e-9);
    EXPECT_LE(r.maxeig, 1.9 + 1e-9);
  }
}

}  // namespace
}  // namespace kbb
