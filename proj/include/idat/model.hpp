#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <span>
#include <stdexcept>
#include <vector>

namespace idat {

inline bool all_finite(std::span<const double> x) {
  for (const double v : x) {
    if (!std::isfinite(v)) {
      return false;
    }
  }
  return true;
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

inline double euclidean(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_distance(a, b));
}

/// Dense square matrix over node ids. Node counts stay small (a few
/// hundred at most), so everything is stored flat and symmetric writes
/// are done explicitly at the call sites via set_symmetric().
template <typename T>
class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t n) : n_(n), cells_(n * n, T{}) {}

  std::size_t size() const { return n_; }

  T operator()(std::size_t i, std::size_t j) const { return cells_[i * n_ + j]; }
  T& operator()(std::size_t i, std::size_t j) { return cells_[i * n_ + j]; }

  void set_symmetric(std::size_t i, std::size_t j, T value) {
    cells_[i * n_ + j] = value;
    cells_[j * n_ + i] = value;
  }

  /// Appends one zero row and column.
  void grow() {
    const std::size_t m = n_ + 1;
    std::vector<T> next(m * m, T{});
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) {
        next[i * m + j] = cells_[i * n_ + j];
      }
    }
    cells_ = std::move(next);
    n_ = m;
  }

  /// Drops the given rows and columns; keep must be the sorted list of
  /// surviving indices.
  void keep_only(std::span<const std::size_t> keep) {
    const std::size_t m = keep.size();
    std::vector<T> next(m * m, T{});
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        next[i * m + j] = cells_[keep[i] * n_ + keep[j]];
      }
    }
    cells_ = std::move(next);
    n_ = m;
  }

  bool operator==(const SquareMatrix&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<T> cells_;
};

/// A learned prototype: position, update count, scaling-factor snapshot,
/// activity flag, inactivity counter and creation index (recency key for
/// maintenance-time deletion).
struct Node {
  std::vector<double> position;
  std::int64_t update_count = 1;
  double sigma = 0.0;
  bool active = false;
  std::int64_t inactivity = 0;
  std::int64_t created_at = 0;

  bool operator==(const Node&) const = default;
};

/// Edge adjacency, edge-candidate counts and the previous-interval
/// snapshots used by the activity potential. The sum and pair count of
/// the positive candidate entries are kept alongside the matrix so the
/// adaptive edge threshold stays O(1) per sample; write candidate cells
/// through set_candidate to keep them in step.
struct Topology {
  SquareMatrix<std::uint8_t> edges;
  SquareMatrix<std::int64_t> candidates;
  std::vector<std::int64_t> prev_counts;
  SquareMatrix<std::int64_t> prev_candidates;
  std::int64_t candidate_sum = 0;    // over positive pairs, i < j
  std::int64_t candidate_pairs = 0;

  void grow() {
    edges.grow();
    candidates.grow();
    prev_candidates.grow();
    prev_counts.push_back(0);
  }

  void set_candidate(std::size_t i, std::size_t j, std::int64_t value) {
    const std::int64_t before = candidates(i, j);
    if (before > 0) {
      candidate_sum -= before;
      candidate_pairs -= 1;
    }
    if (value > 0) {
      candidate_sum += value;
      candidate_pairs += 1;
    }
    candidates.set_symmetric(i, j, value);
  }

  void recount_candidates() {
    candidate_sum = 0;
    candidate_pairs = 0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      for (std::size_t j = i + 1; j < candidates.size(); ++j) {
        if (candidates(i, j) > 0) {
          candidate_sum += candidates(i, j);
          candidate_pairs += 1;
        }
      }
    }
  }

  void keep_only(std::span<const std::size_t> keep) {
    edges.keep_only(keep);
    candidates.keep_only(keep);
    prev_candidates.keep_only(keep);
    std::vector<std::int64_t> counts(keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i) {
      counts[i] = prev_counts[keep[i]];
    }
    prev_counts = std::move(counts);
    recount_candidates();
  }

  std::int64_t degree(std::size_t k) const {
    std::int64_t deg = 0;
    for (std::size_t j = 0; j < edges.size(); ++j) {
      deg += edges(k, j);
    }
    return deg;
  }

  std::int64_t candidate_row_sum(std::size_t k) const {
    std::int64_t sum = 0;
    for (std::size_t j = 0; j < candidates.size(); ++j) {
      sum += candidates(k, j);
    }
    return sum;
  }

  bool operator==(const Topology&) const = default;
};

/// Single running Welford accumulator over every training sample. The
/// node scaling factors snapshot total_variance(), the trace of the
/// population covariance (sum of per-dimension variances); sigma() is the
/// per-dimension average of the same quantity. Both are 0 until the
/// second sample arrives.
class GlobalScale {
 public:
  void update(std::span<const double> x) {
    if (count_ == 0) {
      mean_.assign(x.begin(), x.end());
      m2_.assign(x.size(), 0.0);
      count_ = 1;
      return;
    }
    if (x.size() != mean_.size()) {
      throw std::invalid_argument("GlobalScale::update: dimension mismatch");
    }
    ++count_;
    for (std::size_t d = 0; d < mean_.size(); ++d) {
      const double delta = x[d] - mean_[d];
      mean_[d] += delta / static_cast<double>(count_);
      m2_[d] += delta * (x[d] - mean_[d]);
    }
  }

  double total_variance() const {
    if (count_ == 0 || mean_.empty()) {
      return 0.0;
    }
    double sum = 0.0;
    for (const double v : m2_) {
      sum += v;
    }
    return sum / static_cast<double>(count_);
  }

  double sigma() const {
    if (count_ == 0 || mean_.empty()) {
      return 0.0;
    }
    return total_variance() / static_cast<double>(m2_.size());
  }

  std::int64_t count() const { return count_; }
  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& m2() const { return m2_; }

  void restore(std::int64_t count, std::vector<double> mean, std::vector<double> m2) {
    count_ = count;
    mean_ = std::move(mean);
    m2_ = std::move(m2);
  }

  bool operator==(const GlobalScale&) const = default;

 private:
  std::int64_t count_ = 0;
  std::vector<double> mean_;
  std::vector<double> m2_;
};

/// Recalculation interval, vigilance threshold, quantile level,
/// recomputation counter and the 2*lambda sample buffer.
struct AdaptiveState {
  std::int64_t lambda = 2;
  double v_threshold = 0.0;
  double q = 0.0;
  std::int64_t recompute_counter = 0;
  std::deque<std::vector<double>> buffer;

  bool operator==(const AdaptiveState&) const = default;
};

struct Config {
  std::int64_t lambda_init = 2;
  double eps_det = 1e-6;
  std::int64_t t_demote = 2;
  bool disable_decremental = false;
  bool disable_incremental = false;
  bool disable_all_adaptation = false;

  bool operator==(const Config&) const = default;
};

struct Model {
  std::vector<Node> nodes;
  Topology topology;
  GlobalScale scale;
  AdaptiveState adaptive;
  Config config;
  std::int64_t samples_seen = 0;

  Model() { adaptive.lambda = config.lambda_init; }
  explicit Model(const Config& cfg) : config(cfg) {
    if (cfg.lambda_init < 2) {
      throw std::invalid_argument("Config::lambda_init must be at least 2");
    }
    adaptive.lambda = cfg.lambda_init;
  }

  std::size_t node_count() const { return nodes.size(); }

  /// Feature dimension; 0 while nothing has been observed.
  std::size_t dimension() const {
    if (!nodes.empty()) {
      return nodes.front().position.size();
    }
    if (!adaptive.buffer.empty()) {
      return adaptive.buffer.front().size();
    }
    return 0;
  }

  bool operator==(const Model&) const = default;
};

struct ComponentLabels {
  std::vector<std::int32_t> labels;
  std::int32_t count = 0;
};

/// Connected components of the topological graph. Labels are contiguous
/// from 0 and ordered by the smallest node index in each component, so
/// they are deterministic across runs.
inline ComponentLabels connected_components(const Topology& topology, std::size_t node_count) {
  if (topology.edges.size() != node_count) {
    throw std::invalid_argument("connected_components: topology dimension mismatch");
  }
  ComponentLabels result;
  result.labels.assign(node_count, -1);
  std::vector<std::size_t> stack;
  for (std::size_t k = 0; k < node_count; ++k) {
    if (result.labels[k] >= 0) {
      continue;
    }
    const std::int32_t label = result.count++;
    result.labels[k] = label;
    stack.assign(1, k);
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (std::size_t v = 0; v < node_count; ++v) {
        if (topology.edges(u, v) != 0 && result.labels[v] < 0) {
          result.labels[v] = label;
          stack.push_back(v);
        }
      }
    }
  }
  return result;
}

/// Removes the given nodes and shrinks every topology matrix and
/// snapshot consistently. Surviving nodes keep their relative order.
/// Out-of-range or duplicate indices leave the model untouched.
inline void remove_nodes(Model& model, std::span<const std::size_t> indices) {
  if (indices.empty()) {
    return;
  }
  std::vector<std::size_t> sorted(indices.begin(), indices.end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted.back() >= model.node_count()) {
    throw std::invalid_argument("remove_nodes: index out of range");
  }
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw std::invalid_argument("remove_nodes: duplicate index");
  }
  std::vector<std::size_t> keep;
  keep.reserve(model.node_count() - sorted.size());
  std::size_t next_removed = 0;
  for (std::size_t k = 0; k < model.node_count(); ++k) {
    if (next_removed < sorted.size() && sorted[next_removed] == k) {
      ++next_removed;
    } else {
      keep.push_back(k);
    }
  }
  model.topology.keep_only(keep);
  std::vector<Node> survivors;
  survivors.reserve(keep.size());
  for (const std::size_t k : keep) {
    survivors.push_back(std::move(model.nodes[k]));
  }
  model.nodes = std::move(survivors);
}

/// Refreshes M^prev and the candidate-count snapshot at the end of a
/// maintenance pass.
inline void snapshot_interval_state(Model& model) {
  auto& topo = model.topology;
  for (std::size_t k = 0; k < model.node_count(); ++k) {
    topo.prev_counts[k] = model.nodes[k].update_count;
  }
  topo.prev_candidates = topo.candidates;
}

}  // namespace idat
