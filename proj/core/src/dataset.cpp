#include "kbb/dataset.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <utility>

namespace kbb {
namespace {

constexpr std::array<char, 4> kMagic = {'K', 'B', 'B', 'D'};
constexpr std::uint32_t kVersion = 1;

void put_u64(std::ostream& out, std::uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(buf, 8);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  char buf[4];
  for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(buf, 4);
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t get_u64(std::istream& in) {
  unsigned char buf[8];
  if (!in.read(reinterpret_cast<char*>(buf), 8)) throw std::runtime_error("read_binary: truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char buf[4];
  if (!in.read(reinterpret_cast<char*>(buf), 4)) throw std::runtime_error("read_binary: truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

std::uint8_t get_u8(std::istream& in) {
  char c;
  if (!in.get(c)) throw std::runtime_error("read_binary: truncated");
  return static_cast<std::uint8_t>(c);
}

void put_double_text(std::ostream& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.write(buf, res.ptr - buf);
}

}  // namespace

const char* to_string(DrawMode mode) {
  switch (mode) {
    case DrawMode::kExactStationary:
      return "exact_stationary";
    case DrawMode::kBurnInTrajectory:
      return "burn_in_trajectory";
  }
  return "unknown";
}

Dataset::Dataset(StateKind kind, StateMatrix states, Eigen::VectorXd rewards,
                 StateMatrix next_states, std::string env_id, std::uint64_t seed,
                 DrawMode draw_mode)
    : kind_(kind),
      states_(std::move(states)),
      rewards_(std::move(rewards)),
      next_states_(std::move(next_states)),
      env_id_(std::move(env_id)),
      seed_(seed),
      draw_mode_(draw_mode) {
  if (rewards_.size() == 0) throw std::invalid_argument("Dataset: must be nonempty");
  if (states_.rows() != rewards_.size() || next_states_.rows() != rewards_.size()) {
    throw DimensionError("Dataset: column lengths differ");
  }
  if (states_.cols() != next_states_.cols()) {
    throw DimensionError("Dataset: state and next-state dimensions differ");
  }
  if (kind_ == StateKind::kDiscrete && states_.cols() != 1) {
    throw DimensionError("Dataset: discrete states must be one-dimensional");
  }
}

TransitionSample Dataset::sample(Eigen::Index i) const {
  TransitionSample s;
  s.state.assign(states_.row(i).data(), states_.row(i).data() + dim());
  s.reward = rewards_[i];
  s.next_state.assign(next_states_.row(i).data(), next_states_.row(i).data() + dim());
  return s;
}

void write_binary(const Dataset& data, std::ostream& out) {
  out.write(kMagic.data(), kMagic.size());
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(data.env_id().size()));
  out.write(data.env_id().data(), static_cast<std::streamsize>(data.env_id().size()));
  put_u64(out, data.seed());
  put_u64(out, static_cast<std::uint64_t>(data.size()));
  put_u64(out, static_cast<std::uint64_t>(data.dim()));
  out.put(static_cast<char>(data.draw_mode()));
  out.put(static_cast<char>(data.kind() == StateKind::kDiscrete ? 0 : 1));
  for (Eigen::Index c = 0; c < data.dim(); ++c)
    for (Eigen::Index i = 0; i < data.size(); ++i) put_f64(out, data.states()(i, c));
  for (Eigen::Index i = 0; i < data.size(); ++i) put_f64(out, data.rewards()[i]);
  for (Eigen::Index c = 0; c < data.dim(); ++c)
    for (Eigen::Index i = 0; i < data.size(); ++i) put_f64(out, data.next_states()(i, c));
}

Dataset read_binary(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw std::runtime_error("read_binary: bad magic");
  }
  if (get_u32(in) != kVersion) throw std::runtime_error("read_binary: unsupported version");
  std::string env_id(get_u32(in), '\0');
  if (!in.read(env_id.data(), static_cast<std::streamsize>(env_id.size()))) {
    throw std::runtime_error("read_binary: truncated");
  }
  const std::uint64_t seed = get_u64(in);
  const auto n = static_cast<Eigen::Index>(get_u64(in));
  const auto dim = static_cast<Eigen::Index>(get_u64(in));
  const auto mode = get_u8(in);
  const auto kind_tag = get_u8(in);
  if (mode > 1 || kind_tag > 1) throw std::runtime_error("read_binary: bad header tag");
  StateMatrix states(n, dim), next(n, dim);
  Eigen::VectorXd rewards(n);
  for (Eigen::Index c = 0; c < dim; ++c)
    for (Eigen::Index i = 0; i < n; ++i) states(i, c) = get_f64(in);
  for (Eigen::Index i = 0; i < n; ++i) rewards[i] = get_f64(in);
  for (Eigen::Index c = 0; c < dim; ++c)
    for (Eigen::Index i = 0; i < n; ++i) next(i, c) = get_f64(in);
  return Dataset(kind_tag == 0 ? StateKind::kDiscrete : StateKind::kContinuous,
                 std::move(states), std::move(rewards), std::move(next), std::move(env_id),
                 seed, static_cast<DrawMode>(mode));
}

void write_csv(const Dataset& data, std::ostream& out) {
  out << "idx";
  for (Eigen::Index c = 0; c < data.dim(); ++c) out << ",x_" << c;
  out << ",reward";
  for (Eigen::Index c = 0; c < data.dim(); ++c) out << ",xp_" << c;
  out << '\n';
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    out << i;
    for (Eigen::Index c = 0; c < data.dim(); ++c) {
      out << ',';
      put_double_text(out, data.states()(i, c));
    }
    out << ',';
    put_double_text(out, data.rewards()[i]);
    for (Eigen::Index c = 0; c < data.dim(); ++c) {
      out << ',';
      put_double_text(out, data.next_states()(i, c));
    }
    out << '\n';
  }
}

}  // namespace kbb
