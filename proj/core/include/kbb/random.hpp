#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include <Eigen/Core>

namespace kbb {

using Rng = std::mt19937_64;

/// Deterministic child seed from a parent seed and a list of stream tags.
inline std::uint64_t derive_seed(std::uint64_t base,
                                 std::initializer_list<std::uint64_t> tags) {
  std::uint64_t acc = base;
  for (auto tag : tags) {
    std::seed_seq mix{static_cast<std::uint32_t>(acc), static_cast<std::uint32_t>(acc >> 32),
                      static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32)};
    std::uint32_t out[2];
    mix.generate(out, out + 2);
    acc = (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
  }
  return acc;
}

/// Matrix with i.i.d. Unif(0, 1) entries, filled row by row.
inline Eigen::MatrixXd uniform_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = unif(rng);
  return m;
}

inline Eigen::VectorXd standard_normal(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

}  // namespace kbb
