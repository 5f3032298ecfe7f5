#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "idat/model.hpp"
#include "idat/predict.hpp"

namespace idat {

/// Joint counts of two labelings with row/column marginals. Label values
/// are remapped by first appearance, so arbitrary integer ids are fine.
class ContingencyTable {
 public:
  ContingencyTable(std::span<const std::int32_t> truth, std::span<const std::int32_t> predicted) {
    if (truth.size() != predicted.size()) {
      throw std::invalid_argument("ContingencyTable: label vectors differ in length");
    }
    if (truth.empty()) {
      throw std::invalid_argument("ContingencyTable: empty label vectors");
    }
    std::unordered_map<std::int32_t, std::size_t> row_ids;
    std::unordered_map<std::int32_t, std::size_t> col_ids;
    std::vector<std::pair<std::size_t, std::size_t>> cells(truth.size());
    for (std::size_t t = 0; t < truth.size(); ++t) {
      const auto [row_it, row_new] = row_ids.try_emplace(truth[t], row_ids.size());
      const auto [col_it, col_new] = col_ids.try_emplace(predicted[t], col_ids.size());
      cells[t] = {row_it->second, col_it->second};
    }
    rows_ = row_ids.size();
    cols_ = col_ids.size();
    counts_.assign(rows_ * cols_, 0);
    row_sums_.assign(rows_, 0);
    col_sums_.assign(cols_, 0);
    for (const auto& [r, c] : cells) {
      counts_[r * cols_ + c] += 1;
      row_sums_[r] += 1;
      col_sums_[c] += 1;
    }
    total_ = static_cast<std::int64_t>(truth.size());
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::int64_t count(std::size_t r, std::size_t c) const { return counts_[r * cols_ + c]; }
  std::int64_t row_sum(std::size_t r) const { return row_sums_[r]; }
  std::int64_t col_sum(std::size_t c) const { return col_sums_[c]; }
  std::int64_t total() const { return total_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::int64_t> counts_;
  std::vector<std::int64_t> row_sums_;
  std::vector<std::int64_t> col_sums_;
  std::int64_t total_ = 0;
};

/// Adjusted Rand index (pair-counting, adjusted for chance). 1 iff the
/// partitions are identical; the degenerate all-agreeing cases (both
/// single-cluster, both all-singletons) are 1 by convention.
inline double ari(std::span<const std::int32_t> truth, std::span<const std::int32_t> predicted) {
  const ContingencyTable table(truth, predicted);
  const auto comb2 = [](std::int64_t m) {
    return 0.5 * static_cast<double>(m) * static_cast<double>(m - 1);
  };
  double sum_cells = 0.0;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (std::size_t c = 0; c < table.cols(); ++c) {
      sum_cells += comb2(table.count(r, c));
    }
  }
  double sum_rows = 0.0;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    sum_rows += comb2(table.row_sum(r));
  }
  double sum_cols = 0.0;
  for (std::size_t c = 0; c < table.cols(); ++c) {
    sum_cols += comb2(table.col_sum(c));
  }
  const double total_pairs = comb2(table.total());
  if (total_pairs == 0.0) {
    return 1.0;
  }
  const double expected = sum_rows * sum_cols / total_pairs;
  const double max_index = 0.5 * (sum_rows + sum_cols);
  if (max_index == expected) {
    return 1.0;
  }
  return (sum_cells - expected) / (max_index - expected);
}

/// Expected mutual information under the permutation (hypergeometric)
/// model with fixed marginals. Natural log.
inline double expected_mutual_information(const ContingencyTable& table) {
  const std::int64_t n = table.total();
  std::vector<double> log_fact(static_cast<std::size_t>(n) + 1);
  log_fact[0] = 0.0;
  for (std::int64_t k = 1; k <= n; ++k) {
    log_fact[k] = log_fact[k - 1] + std::log(static_cast<double>(k));
  }
  const double log_n = std::log(static_cast<double>(n));
  double emi = 0.0;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    const std::int64_t a = table.row_sum(r);
    for (std::size_t c = 0; c < table.cols(); ++c) {
      const std::int64_t b = table.col_sum(c);
      const std::int64_t start = std::max<std::int64_t>(1, a + b - n);
      const std::int64_t stop = std::min(a, b);
      for (std::int64_t nij = start; nij <= stop; ++nij) {
        const double log_term = std::log(static_cast<double>(nij)) + log_n -
                                std::log(static_cast<double>(a)) -
                                std::log(static_cast<double>(b));
        const double log_prob = log_fact[a] + log_fact[b] + log_fact[n - a] + log_fact[n - b] -
                                log_fact[n] - log_fact[nij] - log_fact[a - nij] -
                                log_fact[b - nij] - log_fact[n - a - b + nij];
        emi += (static_cast<double>(nij) / static_cast<double>(n)) * log_term * std::exp(log_prob);
      }
    }
  }
  return emi;
}

/// Adjusted mutual information with arithmetic-mean normalization:
/// (MI - E[MI]) / (mean(H_true, H_pred) - E[MI]). Both-single-cluster
/// inputs are 1 by convention; one-sided degenerate inputs come out 0.
inline double ami(std::span<const std::int32_t> truth, std::span<const std::int32_t> predicted) {
  const ContingencyTable table(truth, predicted);
  if (table.rows() <= 1 && table.cols() <= 1) {
    return 1.0;
  }
  const double n = static_cast<double>(table.total());
  double h_true = 0.0;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    const double p = static_cast<double>(table.row_sum(r)) / n;
    h_true -= p * std::log(p);
  }
  double h_pred = 0.0;
  for (std::size_t c = 0; c < table.cols(); ++c) {
    const double p = static_cast<double>(table.col_sum(c)) / n;
    h_pred -= p * std::log(p);
  }
  double mi = 0.0;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (std::size_t c = 0; c < table.cols(); ++c) {
      const std::int64_t nij = table.count(r, c);
      if (nij > 0) {
        const double p = static_cast<double>(nij) / n;
        mi += p * std::log(n * static_cast<double>(nij) /
                           (static_cast<double>(table.row_sum(r)) *
                            static_cast<double>(table.col_sum(c))));
      }
    }
  }
  const double emi = expected_mutual_information(table);
  const double normalizer = 0.5 * (h_true + h_pred);
  double denom = normalizer - emi;
  constexpr double kEps = 2.220446049250313e-16;
  denom = denom < 0.0 ? std::min(denom, -kEps) : std::max(denom, kEps);
  return (mi - emi) / denom;
}

inline double average_incremental(std::span<const double> stage_scores) {
  if (stage_scores.empty()) {
    throw std::invalid_argument("average_incremental: no stage scores");
  }
  double sum = 0.0;
  for (const double s : stage_scores) {
    sum += s;
  }
  return sum / static_cast<double>(stage_scores.size());
}

/// Per-stage scores M_c plus the upper-triangular performance matrix
/// R_{i,j} (performance on stage-i classes after training through
/// stage j).
struct IncrementalRecord {
  std::vector<double> stage_scores;
  std::vector<std::vector<double>> upper;  // upper[i][j - i] == R_{i,j}

  std::size_t stages() const { return stage_scores.size(); }

  double r(std::size_t i, std::size_t j) const {
    if (i >= upper.size() || j < i || j - i >= upper[i].size()) {
      throw std::out_of_range("IncrementalRecord::r: j >= i within the trained range required");
    }
    return upper[i][j - i];
  }
};

inline double backward_transfer(const IncrementalRecord& record) {
  const std::size_t stages = record.stages();
  if (stages < 2) {
    throw std::invalid_argument("backward_transfer: at least two stages required");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < stages; ++i) {
    sum += record.r(i, stages - 1) - record.r(i, i);
  }
  return sum / static_cast<double>(stages - 1);
}

inline double cluster_error(std::int64_t n_clusters, std::int64_t n_classes) {
  if (n_classes < 1) {
    throw std::invalid_argument("cluster_error: class count must be positive");
  }
  return static_cast<double>(std::llabs(n_clusters - n_classes)) /
         static_cast<double>(n_classes);
}

using MetricFn = double (*)(std::span<const std::int32_t>, std::span<const std::int32_t>);

/// Walks one class-incremental run: after each stage's snapshot, M_c is
/// the metric over everything seen so far and R_{i,j} the metric
/// restricted to stage-i class samples (true and predicted alike;
/// predicted cluster ids are used as-is since the metrics are
/// relabeling-invariant).
inline IncrementalRecord evaluate_incremental_run(std::span<const Model> snapshots,
                                                  std::span<const std::vector<double>> features,
                                                  std::span<const std::int32_t> labels,
                                                  std::span<const std::int32_t> class_order,
                                                  MetricFn metric) {
  if (snapshots.size() != class_order.size() || snapshots.empty()) {
    throw std::invalid_argument("evaluate_incremental_run: one snapshot per stage required");
  }
  if (features.size() != labels.size() || features.empty()) {
    throw std::invalid_argument("evaluate_incremental_run: bad evaluation data");
  }
  {
    std::vector<std::int32_t> order(class_order.begin(), class_order.end());
    std::sort(order.begin(), order.end());
    if (std::adjacent_find(order.begin(), order.end()) != order.end()) {
      throw std::invalid_argument("evaluate_incremental_run: duplicate class in order");
    }
  }
  const std::size_t stages = class_order.size();
  IncrementalRecord record;
  record.stage_scores.resize(stages);
  record.upper.resize(stages);
  for (std::size_t j = 0; j < stages; ++j) {
    const Model& snapshot = snapshots[j];
    const std::vector<std::int32_t> node_labels = assign_cluster_indices(snapshot);
    std::vector<std::int32_t> truth;
    std::vector<std::int32_t> predicted;
    std::vector<std::vector<std::size_t>> by_stage(j + 1);  // positions within truth/predicted
    for (std::size_t t = 0; t < features.size(); ++t) {
      for (std::size_t i = 0; i <= j; ++i) {
        if (labels[t] == class_order[i]) {
          by_stage[i].push_back(truth.size());
          truth.push_back(labels[t]);
          predicted.push_back(predict(snapshot, node_labels, features[t]).label);
          break;
        }
      }
    }
    for (std::size_t i = 0; i <= j; ++i) {
      if (by_stage[i].empty()) {
        throw std::invalid_argument("evaluate_incremental_run: a staged class has no samples");
      }
    }
    record.stage_scores[j] = metric(truth, predicted);
    for (std::size_t i = 0; i <= j; ++i) {
      std::vector<std::int32_t> truth_i;
      std::vector<std::int32_t> predicted_i;
      truth_i.reserve(by_stage[i].size());
      predicted_i.reserve(by_stage[i].size());
      for (const std::size_t pos : by_stage[i]) {
        truth_i.push_back(truth[pos]);
        predicted_i.push_back(predicted[pos]);
      }
      record.upper[i].push_back(metric(truth_i, predicted_i));
    }
  }
  return record;
}

}  // namespace idat
