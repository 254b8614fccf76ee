#include "kbb/envs.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

#include "kbb/random.hpp"

namespace kbb {
namespace {

constexpr int kMaxFixedPointIters = 100000;

double spectral_radius(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

void require_psd(const Eigen::MatrixXd& m, const char* what) {
  if (m.rows() != m.cols()) throw std::invalid_argument(std::string(what) + " must be square");
  if (m.size() == 0) return;
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
    throw std::invalid_argument(std::string(what) + " must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10 * std::max(1.0, m.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument(std::string(what) + " must be positive semidefinite");
  }
}

void require_gamma(double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in [0, 1)");
}

Eigen::MatrixXd gram_of_uniform(Eigen::Index n, Rng& rng) {
  const Eigen::MatrixXd g = uniform_matrix(n, n, rng);
  return g.transpose() * g;
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

bool fixed_point_done(const Eigen::MatrixXd& next, const Eigen::MatrixXd& prev) {
  const double scale = std::max(1.0, next.cwiseAbs().maxCoeff());
  return (next - prev).cwiseAbs().maxCoeff() <= 1e-12 * scale;
}

std::vector<double> to_std(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  return std::vector<double>(row.data(), row.data() + row.size());
}

// Row-wise categorical samplers for a tabular chain.
struct TabularSampler {
  explicit TabularSampler(const TabularModel& model) {
    const auto mu = to_std(stationary_distribution(model).weights().transpose());
    stationary = std::discrete_distribution<int>(mu.begin(), mu.end());
    rows.reserve(model.n_states());
    for (int i = 0; i < model.n_states(); ++i) {
      const auto w = to_std(model.trans().row(i));
      rows.emplace_back(w.begin(), w.end());
    }
  }
  std::discrete_distribution<int> stationary;
  std::vector<std::discrete_distribution<int>> rows;
};

Eigen::VectorXd draw_gaussian(const Eigen::MatrixXd& factor, Rng& rng) {
  return factor * standard_normal(factor.cols(), rng);
}

void put_row(StateMatrix& xs, Eigen::Index i, const Eigen::VectorXd& v) { xs.row(i) = v.transpose(); }

}  // namespace

void LqrModel::validate() const {
  const auto d = a_mat.rows();
  if (d < 1 || a_mat.cols() != d) throw std::invalid_argument("LqrModel: L must be d x d");
  const auto m = b_mat.cols();
  if (b_mat.rows() != d || k_mat.rows() != m || k_mat.cols() != d || r_cost.rows() != m ||
      q_cost.rows() != d || noise_cov.rows() != d) {
    throw std::invalid_argument("LqrModel: inconsistent matrix dimensions");
  }
  require_gamma(gamma);
  require_psd(q_cost, "LqrModel: Q_s");
  require_psd(r_cost, "LqrModel: R_a");
  require_psd(noise_cov, "LqrModel: Sigma");
  if (spectral_radius(closed_loop()) >= 1.0) {
    throw std::invalid_argument("LqrModel: L + B K must have spectral radius < 1");
  }
}

void ArchModel::validate() const {
  const auto d = a_mat.rows();
  if (d < 1 || a_mat.cols() != d || scale_mat.rows() != d || cost_mat.rows() != d ||
      noise_cov.rows() != d) {
    throw std::invalid_argument("ArchModel: inconsistent matrix dimensions");
  }
  require_gamma(gamma);
  if (q_scalar < 0.0) throw std::invalid_argument("ArchModel: q must be nonnegative");
  require_psd(scale_mat, "ArchModel: Gamma");
  require_psd(cost_mat, "ArchModel: cost matrix");
  require_psd(noise_cov, "ArchModel: Sigma");
  if (gamma * arch_moment_radius(*this) >= 1.0) {
    throw std::invalid_argument("ArchModel: value recursion is not a contraction");
  }
}

Eigen::VectorXd NonlinearModel::to_z(const Eigen::VectorXd& x) {
  if (x.size() != 3) throw DimensionError("NonlinearModel: state must be 3-dimensional");
  return Eigen::Vector3d(x[0] - x[1] * x[1], x[1], x[2] - x[0] * x[0]);
}

Eigen::VectorXd NonlinearModel::to_x(const Eigen::VectorXd& z) {
  if (z.size() != 3) throw DimensionError("NonlinearModel: state must be 3-dimensional");
  const double x0 = z[0] + z[1] * z[1];
  return Eigen::Vector3d(x0, z[1], z[2] + x0 * x0);
}

TabularModel make_random_tabular(int n, double gamma, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("make_random_tabular: n must be at least 2");
  Rng rng(seed);
  Eigen::MatrixXd p = uniform_matrix(n, n, rng);
  for (int i = 0; i < n; ++i) p.row(i) /= p.row(i).sum();
  Eigen::VectorXd r = uniform_matrix(n, 1, rng);
  return TabularModel(std::move(p), std::move(r), gamma);
}

TabularModel make_circular_walk(int n, double gamma, std::uint64_t seed) {
  if (n < 5) throw std::invalid_argument("make_circular_walk: n must be at least 5");
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    p(i, i) = 1.0 / 3.0;
    for (int k : {-2, -1, 1, 2}) p(i, ((i + k) % n + n) % n) = 1.0 / 6.0;
  }
  Rng rng(seed);
  Eigen::VectorXd r = uniform_matrix(n, 1, rng);
  return TabularModel(std::move(p), std::move(r), gamma);
}

TabularModel make_reversible_tabular(int n, double gamma, std::uint64_t seed, int bandwidth) {
  if (n < 2) throw std::invalid_argument("make_reversible_tabular: n must be at least 2");
  if (bandwidth < 1) throw std::invalid_argument("make_reversible_tabular: bandwidth >= 1");
  Rng rng(seed);
  std::uniform_real_distribution<double> weight(0.1, 1.0);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    w(i, i) += weight(rng);
    for (int k = 1; k <= bandwidth; ++k) {
      const int j = (i + k) % n;
      if (j == i) continue;
      const double e = weight(rng);
      w(i, j) += e;
      w(j, i) += e;
    }
  }
  Eigen::MatrixXd p = w;
  for (int i = 0; i < n; ++i) p.row(i) /= w.row(i).sum();
  Eigen::VectorXd r = uniform_matrix(n, 1, rng);
  return TabularModel(std::move(p), std::move(r), gamma);
}

LqrModel make_lqr(int d, int m, double gamma, std::uint64_t seed) {
  if (d < 1 || m < 1) throw std::invalid_argument("make_lqr: dimensions must be positive");
  Rng rng(seed);
  LqrModel model;
  model.a_mat = uniform_matrix(d, d, rng);
  model.b_mat = uniform_matrix(d, m, rng);
  model.k_mat = uniform_matrix(m, d, rng);
  // Scaling L and K by s scales L + BK by s.
  const double s = kStableSpectralRadius / spectral_radius(model.closed_loop());
  model.a_mat *= s;
  model.k_mat *= s;
  model.q_cost = gram_of_uniform(d, rng);
  model.r_cost = gram_of_uniform(m, rng);
  model.noise_cov = kNoiseScale * Eigen::MatrixXd::Identity(d, d);
  model.gamma = gamma;
  model.validate();
  return model;
}

NonlinearModel make_nonlinear(double gamma, std::uint64_t seed) {
  return NonlinearModel{make_lqr(3, 3, gamma, seed)};
}

double arch_moment_radius(const ArchModel& model) {
  const auto d = model.dim();
  // Column-major vec: vec(L^T P L) = (L^T kron L^T) vec(P), tr(P Sigma) = vec(Sigma)^T vec(P).
  Eigen::MatrixXd op(d * d, d * d);
  const Eigen::MatrixXd lt = model.a_mat.transpose();
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) op.block(i * d, j * d, d, d) = lt(i, j) * lt;
  Eigen::Map<const Eigen::VectorXd> vec_gamma(model.scale_mat.data(), d * d);
  Eigen::Map<const Eigen::VectorXd> vec_sigma(model.noise_cov.data(), d * d);
  op += vec_gamma * vec_sigma.transpose();
  return spectral_radius(op);
}

ArchModel make_arch(int d, double q, double gamma, std::uint64_t seed) {
  if (d < 1) throw std::invalid_argument("make_arch: d must be positive");
  if (q < 0.0) throw std::invalid_argument("make_arch: q must be nonnegative");
  Rng rng(seed);
  ArchModel model;
  model.a_mat = uniform_matrix(d, d, rng);
  model.a_mat *= kStableSpectralRadius / spectral_radius(model.a_mat);
  model.scale_mat = gram_of_uniform(d, rng);
  model.cost_mat = gram_of_uniform(d, rng);
  model.q_scalar = q;
  model.noise_cov = kNoiseScale * Eigen::MatrixXd::Identity(d, d);
  model.gamma = gamma;

  // All operator entries are nonnegative, so the Perron root grows
  // monotonically with the Gamma scale and bisection applies.
  if (arch_moment_radius(model) > kArchContractionTarget) {
    const Eigen::MatrixXd base = model.scale_mat;
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      model.scale_mat = mid * base;
      (arch_moment_radius(model) > kArchContractionTarget ? hi : lo) = mid;
    }
    model.scale_mat = lo * base;
  }
  model.validate();
  return model;
}

QuadraticSolution solve_lqr_value(const LqrModel& model) {
  model.validate();
  const Eigen::MatrixXd m = model.closed_loop();
  const Eigen::MatrixXd cost = symmetrize(model.state_cost());
  Eigen::MatrixXd p = cost;
  for (int it = 1; it <= kMaxFixedPointIters; ++it) {
    Eigen::MatrixXd next = symmetrize(cost + model.gamma * m.transpose() * p * m);
    const bool done = fixed_point_done(next, p);
    p = std::move(next);
    if (done) {
      const double offset =
          model.gamma / (1.0 - model.gamma) * (p * model.noise_cov).trace();
      return {p, offset, it};
    }
  }
  throw ConvergenceError("solve_lqr_value: Lyapunov iteration did not converge");
}

QuadraticSolution solve_arch_value(const ArchModel& model) {
  model.validate();
  const Eigen::MatrixXd cost = symmetrize(model.cost_mat);
  const Eigen::MatrixXd& l = model.a_mat;
  Eigen::MatrixXd p = cost;
  for (int it = 1; it <= kMaxFixedPointIters; ++it) {
    Eigen::MatrixXd next = symmetrize(
        cost + model.gamma * (l.transpose() * p * l +
                              model.scale_mat * (p * model.noise_cov).trace()));
    const bool done = fixed_point_done(next, p);
    p = std::move(next);
    if (done) {
      const double offset = model.gamma * model.q_scalar / (1.0 - model.gamma) *
                            (p * model.noise_cov).trace();
      return {p, offset, it};
    }
  }
  throw ConvergenceError("solve_arch_value: fixed-point iteration did not converge");
}

StateValueFn lqr_true_value(const LqrModel& model) {
  auto sol = solve_lqr_value(model);
  return std::make_shared<QuadraticValueFn>(std::move(sol.p_mat), sol.offset);
}

StateValueFn nonlinear_true_value(const NonlinearModel& model) {
  auto sol = solve_lqr_value(model.inner);
  return std::make_shared<QuadraticValueFn>(std::move(sol.p_mat), sol.offset,
                                            &NonlinearModel::to_z);
}

StateValueFn arch_true_value(const ArchModel& model) {
  auto sol = solve_arch_value(model);
  return std::make_shared<QuadraticValueFn>(std::move(sol.p_mat), sol.offset);
}

Eigen::MatrixXd stationary_covariance(const Eigen::MatrixXd& m, const Eigen::MatrixXd& sigma) {
  Eigen::MatrixXd s = sigma;
  for (int it = 0; it < kMaxFixedPointIters; ++it) {
    Eigen::MatrixXd next = symmetrize(m * s * m.transpose() + sigma);
    const double scale = std::max(1.0, next.cwiseAbs().maxCoeff());
    const bool done = (next - s).cwiseAbs().maxCoeff() <= 1e-14 * scale;
    s = std::move(next);
    if (done) return s;
  }
  throw ConvergenceError("stationary_covariance: iteration did not converge");
}

Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& c) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal();
}

Eigen::VectorXd lqr_step(const LqrModel& model, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& noise) {
  return model.closed_loop() * x + noise;
}

Eigen::VectorXd nonlinear_step(const NonlinearModel& model, const Eigen::VectorXd& x,
                               const Eigen::VectorXd& noise) {
  return NonlinearModel::to_x(lqr_step(model.inner, NonlinearModel::to_z(x), noise));
}

Eigen::VectorXd arch_step(const ArchModel& model, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& noise) {
  const double vol = std::sqrt(model.q_scalar + x.dot(model.scale_mat * x));
  return model.a_mat * x + vol * noise;
}

std::string env_id(const Environment& env) {
  struct Visitor {
    std::string operator()(const TabularModel& m) const {
      return "tabular_n" + std::to_string(m.n_states());
    }
    std::string operator()(const LqrModel& m) const {
      return "lqr_d" + std::to_string(m.dim()) + "_m" + std::to_string(m.b_mat.cols());
    }
    std::string operator()(const NonlinearModel&) const { return "nonlinear_d3"; }
    std::string operator()(const ArchModel& m) const { return "arch_d" + std::to_string(m.dim()); }
  };
  return std::visit(Visitor{}, env);
}

double env_gamma(const Environment& env) {
  struct Visitor {
    double operator()(const TabularModel& m) const { return m.gamma(); }
    double operator()(const LqrModel& m) const { return m.gamma; }
    double operator()(const NonlinearModel& m) const { return m.inner.gamma; }
    double operator()(const ArchModel& m) const { return m.gamma; }
  };
  return std::visit(Visitor{}, env);
}

StateKind env_state_kind(const Environment& env) {
  return std::holds_alternative<TabularModel>(env) ? StateKind::kDiscrete
                                                   : StateKind::kContinuous;
}

int env_state_dim(const Environment& env) {
  struct Visitor {
    int operator()(const TabularModel&) const { return 1; }
    int operator()(const LqrModel& m) const { return m.dim(); }
    int operator()(const NonlinearModel&) const { return 3; }
    int operator()(const ArchModel& m) const { return m.dim(); }
  };
  return std::visit(Visitor{}, env);
}

DrawMode env_draw_mode(const Environment& env) {
  return std::holds_alternative<ArchModel>(env) ? DrawMode::kBurnInTrajectory
                                                : DrawMode::kExactStationary;
}

double env_reward(const Environment& env, std::span<const double> x) {
  struct Visitor {
    std::span<const double> x;
    double operator()(const TabularModel& m) const {
      const auto idx = static_cast<Eigen::Index>(std::llround(x[0]));
      return m.reward()[idx];
    }
    double operator()(const LqrModel& m) const {
      Eigen::Map<const Eigen::VectorXd> v(x.data(), m.dim());
      return v.dot(m.state_cost() * v);
    }
    double operator()(const NonlinearModel& m) const {
      const Eigen::VectorXd z =
          NonlinearModel::to_z(Eigen::Map<const Eigen::VectorXd>(x.data(), 3));
      return z.dot(m.inner.state_cost() * z);
    }
    double operator()(const ArchModel& m) const {
      Eigen::Map<const Eigen::VectorXd> v(x.data(), m.dim());
      return v.dot(m.cost_mat * v);
    }
  };
  if (static_cast<int>(x.size()) != env_state_dim(env)) {
    throw DimensionError("env_reward: state dimension mismatch");
  }
  return std::visit(Visitor{x}, env);
}

StateValueFn true_value(const Environment& env) {
  struct Visitor {
    StateValueFn operator()(const TabularModel& m) const {
      return std::make_shared<TableValueFn>(solve_exact(m));
    }
    StateValueFn operator()(const LqrModel& m) const { return lqr_true_value(m); }
    StateValueFn operator()(const NonlinearModel& m) const { return nonlinear_true_value(m); }
    StateValueFn operator()(const ArchModel& m) const { return arch_true_value(m); }
  };
  return std::visit(Visitor{}, env);
}

namespace {

// Draws (x, x') pairs; `with_next` = false skips the transition for
// state-only sampling. Noise consumption order is fixed per env kind.
void draw_pairs(const Environment& env, std::size_t n, std::uint64_t seed, StateMatrix& xs,
                StateMatrix* next) {
  Rng rng(seed);
  const auto rows = static_cast<Eigen::Index>(n);
  xs.resize(rows, env_state_dim(env));
  if (next) next->resize(rows, env_state_dim(env));

  if (const auto* tab = std::get_if<TabularModel>(&env)) {
    TabularSampler sampler(*tab);
    for (Eigen::Index i = 0; i < rows; ++i) {
      const int s = sampler.stationary(rng);
      xs(i, 0) = s;
      if (next) (*next)(i, 0) = sampler.rows[s](rng);
    }
    return;
  }
  if (const auto* arch = std::get_if<ArchModel>(&env)) {
    const Eigen::MatrixXd noise = psd_factor(arch->noise_cov);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(arch->dim());
    for (int t = 0; t < kArchBurnIn; ++t) x = arch_step(*arch, x, draw_gaussian(noise, rng));
    for (Eigen::Index i = 0; i < rows; ++i) {
      put_row(xs, i, x);
      Eigen::VectorXd xp = arch_step(*arch, x, draw_gaussian(noise, rng));
      if (next) put_row(*next, i, xp);
      x = std::move(xp);
      for (int t = 1; t < kArchStride; ++t) x = arch_step(*arch, x, draw_gaussian(noise, rng));
    }
    return;
  }
  const bool nonlinear = std::holds_alternative<NonlinearModel>(env);
  const LqrModel& lqr = nonlinear ? std::get<NonlinearModel>(env).inner : std::get<LqrModel>(env);
  const Eigen::MatrixXd m = lqr.closed_loop();
  const Eigen::MatrixXd stat = psd_factor(stationary_covariance(m, lqr.noise_cov));
  const Eigen::MatrixXd noise = psd_factor(lqr.noise_cov);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Eigen::VectorXd z = draw_gaussian(stat, rng);
    put_row(xs, i, nonlinear ? NonlinearModel::to_x(z) : z);
    if (next) {
      const Eigen::VectorXd zp = m * z + draw_gaussian(noise, rng);
      put_row(*next, i, nonlinear ? NonlinearModel::to_x(zp) : zp);
    }
  }
}

}  // namespace

Dataset sample_transitions(const Environment& env, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("sample_transitions: n must be positive");
  StateMatrix xs, next;
  draw_pairs(env, n, seed, xs, &next);
  Eigen::VectorXd rewards(xs.rows());
  for (Eigen::Index i = 0; i < xs.rows(); ++i) rewards[i] = env_reward(env, row_span(xs, i));
  return Dataset(env_state_kind(env), std::move(xs), std::move(rewards), std::move(next),
                 env_id(env), seed, env_draw_mode(env));
}

StateMatrix sample_states(const Environment& env, std::size_t n, std::uint64_t seed) {
  StateMatrix xs;
  draw_pairs(env, n, seed, xs, nullptr);
  return xs;
}

StateMatrix sample_next_states(const Environment& env, std::span<const double> x,
                               std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  const int d = env_state_dim(env);
  if (static_cast<int>(x.size()) != d) throw DimensionError("sample_next_states: dimension");
  StateMatrix out(static_cast<Eigen::Index>(count), d);
  if (const auto* tab = std::get_if<TabularModel>(&env)) {
    const auto w = to_std(tab->trans().row(std::llround(x[0])));
    std::discrete_distribution<int> dist(w.begin(), w.end());
    for (std::size_t i = 0; i < count; ++i) out(static_cast<Eigen::Index>(i), 0) = dist(rng);
    return out;
  }
  const Eigen::VectorXd x0 = Eigen::Map<const Eigen::VectorXd>(x.data(), d);
  const auto* lqr = std::get_if<LqrModel>(&env);
  const auto* nl = std::get_if<NonlinearModel>(&env);
  const auto* arch = std::get_if<ArchModel>(&env);
  const Eigen::MatrixXd noise =
      psd_factor(lqr ? lqr->noise_cov : nl ? nl->inner.noise_cov : arch->noise_cov);
  for (std::size_t i = 0; i < count; ++i) {
    const Eigen::VectorXd w = draw_gaussian(noise, rng);
    const Eigen::VectorXd xp =
        lqr ? lqr_step(*lqr, x0, w) : nl ? nonlinear_step(*nl, x0, w) : arch_step(*arch, x0, w);
    put_row(out, static_cast<Eigen::Index>(i), xp);
  }
  return out;
}

}  // namespace kbb
