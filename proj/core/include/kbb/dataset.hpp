#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "kbb/value_function.hpp"

namespace kbb {

enum class DrawMode : std::uint8_t {
  kExactStationary = 0,   // x drawn i.i.d. from the stationary law
  kBurnInTrajectory = 1,  // x read off a single trajectory after burn-in, strided
};

const char* to_string(DrawMode mode);

/// One (x, r, x') triple.
struct TransitionSample {
  std::vector<double> state;
  double reward = 0.0;
  std::vector<double> next_state;
};

/// Columnar store of transition triples. Row i of `states` / `next_states`
/// and entry i of `rewards` together form sample i.
class Dataset {
 public:
  Dataset(StateKind kind, StateMatrix states, Eigen::VectorXd rewards,
          StateMatrix next_states, std::string env_id, std::uint64_t seed,
          DrawMode draw_mode);

  Eigen::Index size() const { return rewards_.size(); }
  Eigen::Index dim() const { return states_.cols(); }
  StateKind kind() const { return kind_; }
  const StateMatrix& states() const { return states_; }
  const Eigen::VectorXd& rewards() const { return rewards_; }
  const StateMatrix& next_states() const { return next_states_; }
  const std::string& env_id() const { return env_id_; }
  std::uint64_t seed() const { return seed_; }
  DrawMode draw_mode() const { return draw_mode_; }

  TransitionSample sample(Eigen::Index i) const;

 private:
  StateKind kind_;
  StateMatrix states_;
  Eigen::VectorXd rewards_;
  StateMatrix next_states_;
  std::string env_id_;
  std::uint64_t seed_;
  DrawMode draw_mode_;
};

/// Binary columnar layout, all integers and floats little-endian:
///   "KBBD" | u32 version=1 | u32 len + env_id bytes | u64 seed | u64 n |
///   u64 dim | u8 draw_mode | u8 state_kind |
///   x_0[n] .. x_{d-1}[n] | reward[n] | xp_0[n] .. xp_{d-1}[n]   (f64)
void write_binary(const Dataset& data, std::ostream& out);
Dataset read_binary(std::istream& in);

/// CSV with header idx,x_0..x_{d-1},reward,xp_0..xp_{d-1}; values printed
/// with round-trip precision.
void write_csv(const Dataset& data, std::ostream& out);

}  // namespace kbb
