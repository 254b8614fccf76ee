#include "kbb/regression.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <utility>

#include "kbb/random.hpp"

namespace kbb {
namespace {

constexpr double kMinRelativeGain = 1e-12;

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
  Eigen::Index n_left = 0;
};

// Grows one tree on `residual` over the in-bag rows. Each node carries the
// in-bag rows sorted by every feature; a split partitions every list stably.
class TreeGrower {
 public:
  TreeGrower(const StateMatrix& x, const Eigen::VectorXd& residual, const RegressorConfig& cfg)
      : x_(x), residual_(residual), cfg_(cfg) {}

  RegressionTree grow(std::vector<std::vector<int>> sorted_rows) {
    tree_.nodes.clear();
    grow_node(std::move(sorted_rows), 0);
    return std::move(tree_);
  }

 private:
  int grow_node(std::vector<std::vector<int>> rows, int depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    const auto& any = rows.front();
    const auto n = static_cast<Eigen::Index>(any.size());
    double sum = 0.0, sum_sq = 0.0;
    for (int i : any) {
      sum += residual_[i];
      sum_sq += residual_[i] * residual_[i];
    }
    tree_.nodes[id].value = n > 0 ? sum / static_cast<double>(n) : 0.0;
    if (depth >= cfg_.max_depth || n < 2 * cfg_.min_leaf) return id;

    const double node_sse = sum_sq - sum * sum / static_cast<double>(n);
    const SplitChoice split = best_split(rows, sum);
    if (split.feature < 0 || node_sse <= 0.0 || !(split.gain > kMinRelativeGain * node_sse)) {
      return id;
    }

    std::vector<std::vector<int>> left(rows.size()), right(rows.size());
    for (std::size_t f = 0; f < rows.size(); ++f) {
      left[f].reserve(static_cast<std::size_t>(split.n_left));
      right[f].reserve(rows[f].size() - static_cast<std::size_t>(split.n_left));
      for (int i : rows[f]) {
        (x_(i, split.feature) <= split.threshold ? left[f] : right[f]).push_back(i);
      }
    }
    rows.clear();
    rows.shrink_to_fit();
    tree_.nodes[id].feature = split.feature;
    tree_.nodes[id].threshold = split.threshold;
    const int l = grow_node(std::move(left), depth + 1);
    tree_.nodes[id].left = l;
    const int r = grow_node(std::move(right), depth + 1);
    tree_.nodes[id].right = r;
    return id;
  }

  // Lowest feature index wins ties, then the smallest threshold.
  SplitChoice best_split(const std::vector<std::vector<int>>& rows, double total) const {
    SplitChoice best;
    const auto n = static_cast<Eigen::Index>(rows.front().size());
    const double base_term = total * total / static_cast<double>(n);
    for (std::size_t f = 0; f < rows.size(); ++f) {
      const auto& order = rows[f];
      double left_sum = 0.0;
      for (Eigen::Index k = 0; k + 1 < n; ++k) {
        left_sum += residual_[order[k]];
        const double a = x_(order[k], static_cast<Eigen::Index>(f));
        const double b = x_(order[k + 1], static_cast<Eigen::Index>(f));
        if (!(a < b)) continue;
        const Eigen::Index n_left = k + 1;
        if (n_left < cfg_.min_leaf || n - n_left < cfg_.min_leaf) continue;
        const double right_sum = total - left_sum;
        const double gain = left_sum * left_sum / static_cast<double>(n_left) +
                            right_sum * right_sum / static_cast<double>(n - n_left) - base_term;
        if (gain > best.gain) {
          double threshold = 0.5 * (a + b);
          if (threshold >= b) threshold = a;
          best = {static_cast<int>(f), threshold, gain, n_left};
        }
      }
    }
    return best;
  }

  const StateMatrix& x_;
  const Eigen::VectorXd& residual_;
  const RegressorConfig& cfg_;
  RegressionTree tree_;
};

FittedFunctionPtr fit_tabular_mean(StateKind kind, const StateMatrix& x,
                                   const Eigen::VectorXd& y) {
  if (kind != StateKind::kDiscrete || x.cols() != 1) {
    throw std::invalid_argument("fit: TabularMean requires discrete one-column states");
  }
  long max_idx = -1;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const long idx = std::lround(x(i, 0));
    if (idx < 0) throw std::invalid_argument("fit: negative tabular state index");
    max_idx = std::max(max_idx, idx);
  }
  std::vector<double> sums(static_cast<std::size_t>(max_idx + 1), 0.0);
  std::vector<long> counts(sums.size(), 0);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto idx = static_cast<std::size_t>(std::lround(x(i, 0)));
    sums[idx] += y[i];
    ++counts[idx];
  }
  for (std::size_t s = 0; s < sums.size(); ++s) {
    if (counts[s] > 0) sums[s] /= static_cast<double>(counts[s]);
  }
  return std::make_shared<TabularMeanFn>(std::move(sums));
}

FittedFunctionPtr fit_boosted(const StateMatrix& x, const Eigen::VectorXd& y,
                              const RegressorConfig& cfg, std::uint64_t seed) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<std::vector<int>> sorted(static_cast<std::size_t>(d));
  for (Eigen::Index f = 0; f < d; ++f) {
    auto& order = sorted[static_cast<std::size_t>(f)];
    order.resize(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return x(a, f) < x(b, f); });
  }

  const double base = y.mean();
  Eigen::VectorXd pred = Eigen::VectorXd::Constant(n, base);
  Eigen::VectorXd residual = y - pred;
  std::vector<double> stage_mse{residual.squaredNorm() / static_cast<double>(n)};
  std::vector<RegressionTree> trees;
  std::vector<double> weights;
  trees.reserve(static_cast<std::size_t>(cfg.n_trees));

  std::vector<char> in_bag(static_cast<std::size_t>(n), 1);
  for (int k = 0; k < cfg.n_trees; ++k) {
    std::vector<std::vector<int>> rows;
    if (cfg.subsample < 1.0) {
      std::size_t kept = 0;
      for (auto& flag : in_bag) kept += (flag = unif(rng) < cfg.subsample ? 1 : 0);
      if (kept == 0) in_bag[static_cast<std::size_t>(k) % in_bag.size()] = 1;
      rows.resize(sorted.size());
      for (std::size_t f = 0; f < sorted.size(); ++f) {
        for (int i : sorted[f]) {
          if (in_bag[static_cast<std::size_t>(i)]) rows[f].push_back(i);
        }
      }
    } else {
      rows = sorted;
    }
    TreeGrower grower(x, residual, cfg);
    RegressionTree tree = grower.grow(std::move(rows));
    for (Eigen::Index i = 0; i < n; ++i) {
      pred[i] += cfg.learning_rate * tree.evaluate(row_span(x, i));
    }
    residual = y - pred;
    stage_mse.push_back(residual.squaredNorm() / static_cast<double>(n));
    trees.push_back(std::move(tree));
    weights.push_back(cfg.learning_rate);
  }
  return std::make_shared<TreeEnsembleFn>(base, std::move(trees), std::move(weights),
                                          std::move(stage_mse));
}

// Little-endian byte writer / reader for the blob format.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}
  std::uint8_t u8() {
    need(1);
    return in_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t k) const {
    if (pos_ + k > in_.size()) throw std::runtime_error("deserialize: truncated blob");
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

constexpr std::uint32_t kBlobMagic = 0x4642424B;  // "KBBF" little-endian
constexpr std::uint32_t kBlobVersion = 1;

}  // namespace

void RegressorConfig::validate() const {
  if (n_trees < 1 || max_depth < 1 || min_leaf < 1) {
    throw std::invalid_argument("RegressorConfig: counts must be positive");
  }
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
    throw std::invalid_argument("RegressorConfig: learning_rate must lie in (0, 1]");
  }
  if (!(subsample > 0.0 && subsample <= 1.0)) {
    throw std::invalid_argument("RegressorConfig: subsample must lie in (0, 1]");
  }
}

double TabularMeanFn::evaluate(std::span<const double> x) const {
  if (x.size() != 1) throw DimensionError("TabularMeanFn: expects a tabular state");
  const long idx = std::lround(x[0]);
  if (idx < 0 || idx >= static_cast<long>(table_.size())) return 0.0;
  return table_[static_cast<std::size_t>(idx)];
}

double RegressionTree::evaluate(std::span<const double> x) const {
  int node = 0;
  while (nodes[node].feature >= 0) {
    const auto& nd = nodes[node];
    node = x[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right;
  }
  return nodes[node].value;
}

int RegressionTree::depth() const {
  std::vector<int> level(nodes.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    if (nodes[i].feature >= 0) {
      level[static_cast<std::size_t>(nodes[i].left)] = level[i] + 1;
      level[static_cast<std::size_t>(nodes[i].right)] = level[i] + 1;
    }
  }
  return deepest;
}

TreeEnsembleFn::TreeEnsembleFn(double base, std::vector<RegressionTree> trees,
                               std::vector<double> weights, std::vector<double> stage_mse)
    : base_(base),
      trees_(std::move(trees)),
      weights_(std::move(weights)),
      stage_mse_(std::move(stage_mse)) {
  if (trees_.size() != weights_.size()) {
    throw std::invalid_argument("TreeEnsembleFn: one weight per tree");
  }
}

double TreeEnsembleFn::evaluate(std::span<const double> x) const {
  double acc = base_;
  for (std::size_t k = 0; k < trees_.size(); ++k) acc += weights_[k] * trees_[k].evaluate(x);
  return acc;
}

Eigen::VectorXd TreeEnsembleFn::evaluate_batch(const StateMatrix& xs) const {
  Eigen::VectorXd out(xs.rows());
  for (Eigen::Index i = 0; i < xs.rows(); ++i) out[i] = evaluate(row_span(xs, i));
  return out;
}

FittedFunctionPtr fit(StateKind kind, const StateMatrix& x, const Eigen::VectorXd& y,
                      const RegressorConfig& config, std::uint64_t seed) {
  config.validate();
  if (x.rows() == 0) throw std::invalid_argument("fit: empty input");
  if (x.rows() != y.size()) throw DimensionError("fit: x and y lengths differ");
  if (!y.allFinite()) throw std::invalid_argument("fit: non-finite target");
  if (config.kind == RegressorKind::kTabularMean) return fit_tabular_mean(kind, x, y);
  return fit_boosted(x, y, config, seed);
}

FittedFunctionPtr fit(std::span<const RegressionPair> pairs, StateKind kind,
                      const RegressorConfig& config, std::uint64_t seed) {
  if (pairs.empty()) throw std::invalid_argument("fit: empty input");
  const std::size_t d = pairs.front().x.size();
  StateMatrix x(static_cast<Eigen::Index>(pairs.size()), static_cast<Eigen::Index>(d));
  Eigen::VectorXd y(static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].x.size() != d) throw std::invalid_argument("fit: mixed state kinds");
    for (std::size_t c = 0; c < d; ++c) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = pairs[i].x[c];
    }
    y[static_cast<Eigen::Index>(i)] = pairs[i].y;
  }
  return fit(kind, x, y, config, seed);
}

Eigen::VectorXd residual_targets(const Eigen::VectorXd& v_at_states,
                                 const Eigen::VectorXd& v_at_next, const Dataset& data,
                                 double gamma) {
  return v_at_states - backup_targets(v_at_next, data, gamma);
}

Eigen::VectorXd backup_targets(const Eigen::VectorXd& v_at_next, const Dataset& data,
                               double gamma) {
  if (v_at_next.size() != data.size()) throw DimensionError("backup_targets: length");
  return data.rewards() + gamma * v_at_next;
}

FittedFunctionPtr fit_residual(const ValueFunction& v, const Dataset& data, double gamma,
                               const RegressorConfig& config, std::uint64_t seed) {
  const Eigen::VectorXd y = residual_targets(v.evaluate_batch(data.states()),
                                             v.evaluate_batch(data.next_states()), data, gamma);
  return fit(data.kind(), data.states(), y, config, seed);
}

FittedFunctionPtr fit_backup(const ValueFunction& v, const Dataset& data, double gamma,
                             const RegressorConfig& config, std::uint64_t seed) {
  const Eigen::VectorXd y = backup_targets(v.evaluate_batch(data.next_states()), data, gamma);
  return fit(data.kind(), data.states(), y, config, seed);
}

std::vector<std::uint8_t> serialize(const FittedFunction& fn) {
  ByteWriter w;
  w.u32(kBlobMagic);
  w.u32(kBlobVersion);
  if (const auto* tab = dynamic_cast<const TabularMeanFn*>(&fn)) {
    w.u8(0);
    w.u64(tab->table().size());
    for (double v : tab->table()) w.f64(v);
  } else if (const auto* ens = dynamic_cast<const TreeEnsembleFn*>(&fn)) {
    w.u8(1);
    w.f64(ens->base());
    w.u64(ens->trees().size());
    for (std::size_t k = 0; k < ens->trees().size(); ++k) {
      w.f64(ens->weights()[k]);
      const auto& nodes = ens->trees()[k].nodes;
      w.u64(nodes.size());
      for (const auto& nd : nodes) {
        w.i32(nd.feature);
        w.f64(nd.threshold);
        w.i32(nd.left);
        w.i32(nd.right);
        w.f64(nd.value);
      }
    }
  } else {
    throw std::invalid_argument("serialize: unknown FittedFunction subtype");
  }
  return w.take();
}

FittedFunctionPtr deserialize(std::span<const std::uint8_t> blob) {
  ByteReader r(blob);
  if (r.u32() != kBlobMagic) throw std::runtime_error("deserialize: bad magic");
  if (r.u32() != kBlobVersion) throw std::runtime_error("deserialize: unsupported version");
  const auto tag = r.u8();
  FittedFunctionPtr out;
  if (tag == 0) {
    std::vector<double> table(r.u64());
    for (double& v : table) v = r.f64();
    out = std::make_shared<TabularMeanFn>(std::move(table));
  } else if (tag == 1) {
    const double base = r.f64();
    const auto n_trees = r.u64();
    std::vector<RegressionTree> trees(n_trees);
    std::vector<double> weights(n_trees);
    for (std::size_t k = 0; k < n_trees; ++k) {
      weights[k] = r.f64();
      trees[k].nodes.resize(r.u64());
      for (auto& nd : trees[k].nodes) {
        nd.feature = r.i32();
        nd.threshold = r.f64();
        nd.left = r.i32();
        nd.right = r.i32();
        nd.value = r.f64();
      }
    }
    out = std::make_shared<TreeEnsembleFn>(base, std::move(trees), std::move(weights));
  } else {
    throw std::runtime_error("deserialize: unknown kind tag");
  }
  if (!r.done()) throw std::runtime_error("deserialize: trailing bytes");
  return out;
}

}  // namespace kbb
