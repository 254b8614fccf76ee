#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "kbb/dataset.hpp"
#include "kbb/mrp.hpp"
#include "kbb/value_function.hpp"

namespace kbb {

// Spectral radius that make_lqr / make_arch rescale their dynamics to.
inline constexpr double kStableSpectralRadius = 0.9;
// Isotropic noise scale: Sigma = kNoiseScale * I.
inline constexpr double kNoiseScale = 0.1;
// Upper bound on the undiscounted ARCH second-moment map's spectral radius.
inline constexpr double kArchContractionTarget = 0.95;
inline constexpr int kArchBurnIn = 1000;
inline constexpr int kArchStride = 10;

/// x' = (L + B K) x + w, w ~ N(0, Sigma); cost x^T (Q_s + K^T R_a K) x.
struct LqrModel {
  Eigen::MatrixXd a_mat;      // L, d x d
  Eigen::MatrixXd b_mat;      // B, d x m
  Eigen::MatrixXd k_mat;      // K, m x d
  Eigen::MatrixXd q_cost;     // Q_s, d x d
  Eigen::MatrixXd r_cost;     // R_a, m x m
  Eigen::MatrixXd noise_cov;  // Sigma, d x d
  double gamma = 0.9;

  int dim() const { return static_cast<int>(a_mat.rows()); }
  Eigen::MatrixXd closed_loop() const { return a_mat + b_mat * k_mat; }
  Eigen::MatrixXd state_cost() const { return q_cost + k_mat.transpose() * r_cost * k_mat; }

  /// Throws std::invalid_argument when a documented invariant fails.
  void validate() const;
};

/// x' = L x + sqrt(q + x^T Gamma x) w, w ~ N(0, Sigma); cost x^T R x.
struct ArchModel {
  Eigen::MatrixXd a_mat;      // L
  Eigen::MatrixXd scale_mat;  // Gamma
  Eigen::MatrixXd cost_mat;   // R
  double q_scalar = 0.5;
  Eigen::MatrixXd noise_cov;  // Sigma
  double gamma = 0.9;

  int dim() const { return static_cast<int>(a_mat.rows()); }
  void validate() const;
};

/// Three-dimensional system that is linear after the change of coordinates
/// z(x) = (x1 - x2^2, x2, x3 - x1^2).
struct NonlinearModel {
  LqrModel inner;

  static Eigen::VectorXd to_z(const Eigen::VectorXd& x);
  static Eigen::VectorXd to_x(const Eigen::VectorXd& z);
};

using Environment = std::variant<TabularModel, LqrModel, NonlinearModel, ArchModel>;

// Constructors. All are deterministic given the seed.
TabularModel make_random_tabular(int n, double gamma, std::uint64_t seed);
TabularModel make_circular_walk(int n, double gamma, std::uint64_t seed);
/// Random reversible chain: random walk on a weighted circulant graph whose
/// symmetric edge weights span offsets 0..bandwidth. Stationary law is
/// proportional to the weighted degree, so generally non-uniform.
TabularModel make_reversible_tabular(int n, double gamma, std::uint64_t seed,
                                     int bandwidth = 2);
LqrModel make_lqr(int d, int m, double gamma, std::uint64_t seed);
NonlinearModel make_nonlinear(double gamma, std::uint64_t seed);
ArchModel make_arch(int d, double q, double gamma, std::uint64_t seed);

/// Fixed point of a quadratic-plus-constant value recursion.
struct QuadraticSolution {
  Eigen::MatrixXd p_mat;
  double offset = 0.0;
  int iterations = 0;
};

/// P = Q_s + K^T R_a K + gamma M^T P M by fixed-point iteration to
/// max|dP| <= 1e-12 (cap 1e5 steps); offset gamma/(1-gamma) tr(P Sigma).
QuadraticSolution solve_lqr_value(const LqrModel& model);
/// P = R + gamma (L^T P L + Gamma tr(P Sigma)); offset gamma q/(1-gamma) tr(P Sigma).
QuadraticSolution solve_arch_value(const ArchModel& model);

StateValueFn lqr_true_value(const LqrModel& model);
StateValueFn nonlinear_true_value(const NonlinearModel& model);
StateValueFn arch_true_value(const ArchModel& model);

/// Spectral radius of the linear part P -> L^T P L + Gamma tr(P Sigma) of the
/// ARCH recursion (without the discount).
double arch_moment_radius(const ArchModel& model);

/// Sigma_inf = M Sigma_inf M^T + Sigma, by iteration.
Eigen::MatrixXd stationary_covariance(const Eigen::MatrixXd& m, const Eigen::MatrixXd& sigma);

/// Factor F with F F^T = c for a symmetric PSD c.
Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& c);

// One-step dynamics given an explicit noise draw w (w ~ N(0, I) is mapped
// through the noise factor by the caller).
Eigen::VectorXd lqr_step(const LqrModel& model, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& noise);
Eigen::VectorXd nonlinear_step(const NonlinearModel& model, const Eigen::VectorXd& x,
                               const Eigen::VectorXd& noise);
Eigen::VectorXd arch_step(const ArchModel& model, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& noise);

// Environment-generic helpers.
std::string env_id(const Environment& env);
double env_gamma(const Environment& env);
StateKind env_state_kind(const Environment& env);
int env_state_dim(const Environment& env);
double env_reward(const Environment& env, std::span<const double> x);
StateValueFn true_value(const Environment& env);
DrawMode env_draw_mode(const Environment& env);

/// n transition triples. Tabular, LQR and nonlinear draw x exactly from the
/// stationary law; ARCH reads a burn-in trajectory with stride.
Dataset sample_transitions(const Environment& env, std::size_t n, std::uint64_t seed);

/// n states from the stationary law (same draw rule as sample_transitions).
StateMatrix sample_states(const Environment& env, std::size_t n, std::uint64_t seed);

/// Samples next states x' ~ P(.|x) for a fixed x, `count` times.
StateMatrix sample_next_states(const Environment& env, std::span<const double> x,
                               std::size_t count, std::uint64_t seed);

}  // namespace kbb
