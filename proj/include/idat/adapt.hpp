#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "idat/learn.hpp"
#include "idat/model.hpp"
#include "idat/quantile.hpp"

namespace idat {

struct StabilityVerdict {
  bool is_stable = false;
  /// Squared product of the Cholesky pivots; absent when the
  /// factorization fails.
  std::optional<double> det_estimate;
};

/// Pairwise inverse-distance similarity matrix of a sample window,
/// scaled by the global alpha*.
struct SimilarityWindow {
  std::vector<double> matrix;  // row-major L x L
  std::size_t length = 0;
  double alpha_star = 0.0;

  double at(std::size_t i, std::size_t j) const { return matrix[i * length + j]; }
};

inline SimilarityWindow build_similarity_matrix(std::span<const std::vector<double>> window_samples,
                                                double alpha_star) {
  if (window_samples.size() < 2) {
    throw std::invalid_argument("build_similarity_matrix: window needs at least two samples");
  }
  if (!(alpha_star > 0.0)) {
    throw std::invalid_argument("build_similarity_matrix: alpha_star must be positive");
  }
  const std::size_t length = window_samples.size();
  SimilarityWindow window;
  window.length = length;
  window.alpha_star = alpha_star;
  window.matrix.assign(length * length, 1.0);
  for (std::size_t i = 0; i < length; ++i) {
    for (std::size_t j = i + 1; j < length; ++j) {
      const double d = euclidean(window_samples[i], window_samples[j]);
      const double s = 1.0 / (1.0 + alpha_star * d);
      window.matrix[i * length + j] = s;
      window.matrix[j * length + i] = s;
    }
  }
  return window;
}

/// Cholesky-based stability test. A non-positive or non-finite pivot is a
/// factorization failure and means unstable; no regularization is applied
/// because failure itself is the signal. On success the determinant
/// estimate (product of pivots) is compared against eps_det.
inline StabilityVerdict assess_stability(const SimilarityWindow& window, double eps_det) {
  const std::size_t length = window.length;
  std::vector<double> factor(window.matrix);
  double det = 1.0;
  for (std::size_t j = 0; j < length; ++j) {
    double pivot = factor[j * length + j];
    for (std::size_t k = 0; k < j; ++k) {
      pivot -= factor[j * length + k] * factor[j * length + k];
    }
    if (!(pivot > 0.0) || !std::isfinite(pivot)) {
      return {};
    }
    det *= pivot;
    const double root = std::sqrt(pivot);
    factor[j * length + j] = root;
    for (std::size_t i = j + 1; i < length; ++i) {
      double v = factor[i * length + j];
      for (std::size_t k = 0; k < j; ++k) {
        v -= factor[i * length + k] * factor[j * length + k];
      }
      factor[i * length + j] = v / root;
    }
  }
  StabilityVerdict verdict;
  verdict.det_estimate = det;
  verdict.is_stable = det >= eps_det;
  return verdict;
}

/// Stability verdicts for every suffix window of a buffer through one
/// growing Cholesky factorization.
///
/// Samples are taken newest-first, which makes the length-L window a
/// leading principal submatrix of the length-(L+1) one; determinants and
/// positive definiteness are invariant under that reordering, so each
/// verdict matches assess_stability on the same window up to rounding at
/// the eps_det boundary. Evaluating a full [2, L] scan this way costs one
/// factorization instead of one per window.
class StabilityScanner {
 public:
  StabilityScanner(const std::deque<std::vector<double>>& buffer, std::size_t max_length,
                   double alpha_star, double eps_det)
      : alpha_star_(alpha_star), eps_det_(eps_det) {
    const std::size_t take = std::min(max_length, buffer.size());
    rows_.reserve(take);
    for (auto it = buffer.rbegin(); it != buffer.rend() && rows_.size() < take; ++it) {
      rows_.push_back(&*it);
    }
    det_by_length_.assign(1, 1.0);
  }

  std::size_t max_length() const { return rows_.size(); }

  bool stable(std::size_t window_length) {
    if (window_length > rows_.size()) {
      throw std::invalid_argument("StabilityScanner: window exceeds the buffered samples");
    }
    extend(window_length);
    if (failed_at_ != 0 && window_length >= failed_at_) {
      return false;
    }
    return det_by_length_[window_length] >= eps_det_;
  }

 private:
  void extend(std::size_t up_to) {
    while (done_ < up_to && failed_at_ == 0) {
      const std::size_t j = done_;
      const std::size_t base = j * (j + 1) / 2;
      factor_.resize(base + j + 1, 0.0);
      double pivot = 1.0;
      for (std::size_t k = 0; k < j; ++k) {
        const double d = euclidean(*rows_[j], *rows_[k]);
        double v = 1.0 / (1.0 + alpha_star_ * d);
        const std::size_t row_k = k * (k + 1) / 2;
        for (std::size_t m = 0; m < k; ++m) {
          v -= factor_[base + m] * factor_[row_k + m];
        }
        v /= factor_[row_k + k];
        factor_[base + k] = v;
        pivot -= v * v;
      }
      if (!(pivot > 0.0) || !std::isfinite(pivot)) {
        failed_at_ = j + 1;
        return;
      }
      factor_[base + j] = std::sqrt(pivot);
      det_by_length_.push_back(det_by_length_.back() * pivot);
      ++done_;
    }
  }

  std::vector<const std::vector<double>*> rows_;  // newest first
  std::vector<double> factor_;                    // packed lower triangle
  std::vector<double> det_by_length_;
  std::size_t done_ = 0;
  std::size_t failed_at_ = 0;  // 0 = no failure yet
  double alpha_star_;
  double eps_det_;
};

/// Bidirectional adjustment of the recalculation interval.
///
/// Decremental pass: scan every suffix window of length 2..lambda; the
/// new interval is the largest stable length (2 when none is). Any
/// unstable window suppresses the incremental pass. Incremental pass:
/// grow the window from lambda+1 until the first unstable length or
/// min(2*lambda, buffered); adopt the last stable length.
inline std::int64_t adjust_lambda(const std::deque<std::vector<double>>& buffer,
                                  std::int64_t lambda, double alpha_star, const Config& config) {
  if (config.disable_all_adaptation) {
    return lambda;
  }
  StabilityScanner scanner(buffer, static_cast<std::size_t>(2 * lambda), alpha_star,
                           config.eps_det);
  const auto available = static_cast<std::int64_t>(scanner.max_length());
  std::int64_t lambda_new = lambda;
  bool need_incremental = true;
  if (!config.disable_decremental) {
    std::int64_t best = 0;
    const std::int64_t top = std::min(lambda, available);
    for (std::int64_t len = top; len >= 2; --len) {
      if (scanner.stable(static_cast<std::size_t>(len))) {
        if (best == 0) {
          best = len;
        }
      } else {
        need_incremental = false;
      }
    }
    lambda_new = best > 0 ? best : 2;
  }
  if (need_incremental && !config.disable_incremental) {
    const std::int64_t l_max = std::min(2 * lambda, available);
    bool cut = false;
    for (std::int64_t len = lambda_new + 1; len <= l_max; ++len) {
      if (!scanner.stable(static_cast<std::size_t>(len))) {
        lambda_new = len - 1;
        cut = true;
        break;
      }
    }
    if (!cut && l_max >= 2) {
      lambda_new = l_max;
    }
  }
  return std::max<std::int64_t>(lambda_new, 2);
}

/// Quantile level from graph connectivity: q tracks the exponentially
/// smoothed fragmentation ratio C/K, as 1 minus it. High connectivity
/// (small C/K) drives q and thus the vigilance threshold up; a smaller
/// interval smooths faster.
inline double update_quantile_level(double q_prev, std::int64_t lambda_new,
                                    std::int64_t component_count, std::int64_t node_count) {
  if (node_count <= 0) {
    throw std::invalid_argument("update_quantile_level: node count must be positive");
  }
  if (lambda_new < 2) {
    throw std::invalid_argument("update_quantile_level: lambda must be at least 2");
  }
  const double inv = 1.0 / static_cast<double>(lambda_new);
  const double ratio = static_cast<double>(component_count) / static_cast<double>(node_count);
  const double q = (1.0 - inv) * q_prev + inv * (1.0 - ratio);
  return std::clamp(q, 0.0, 1.0);
}

/// Vigilance threshold: the q-quantile of the row-wise maximum
/// off-diagonal similarities of the window.
inline double recompute_vigilance(const SimilarityWindow& window, double q) {
  const std::size_t length = window.length;
  if (length < 2) {
    throw std::invalid_argument("recompute_vigilance: window needs at least two samples");
  }
  std::vector<double> row_max(length, 0.0);
  for (std::size_t i = 0; i < length; ++i) {
    double best = 0.0;
    for (std::size_t j = 0; j < length; ++j) {
      if (j != i && window.at(i, j) > best) {
        best = window.at(i, j);
      }
    }
    row_max[i] = best;
  }
  return quantile(std::move(row_max), q);
}

/// Per-sample history of (lambda, V_threshold), recorded after each
/// training sample.
struct TrainTrace {
  std::vector<std::int64_t> lambda;
  std::vector<double> v_threshold;
};

/// Streaming training loop: buffer the sample, run the clustering step,
/// and after every lambda samples (once the model holds more than two
/// nodes) adjust lambda and recompute the vigilance threshold from the
/// adopted window. State carries over between calls, so splitting a
/// stream across calls is equivalent to one call on the concatenation.
inline void train(Model& model, std::span<const std::vector<double>> samples,
                  TrainTrace* trace = nullptr) {
  for (const std::vector<double>& x : samples) {
    if (!all_finite(x)) {
      throw std::invalid_argument("train: non-finite sample");
    }
    const std::size_t dim = model.dimension();
    if (dim != 0 && x.size() != dim) {
      throw std::invalid_argument("train: sample dimension mismatch");
    }
    auto& state = model.adaptive;
    state.buffer.push_back(x);
    while (std::ssize(state.buffer) > 2 * state.lambda) {
      state.buffer.pop_front();
    }
    clustering_step(model, x);
    state.recompute_counter += 1;
    const auto k_count = static_cast<std::int64_t>(model.node_count());
    if (!model.config.disable_all_adaptation && state.recompute_counter >= state.lambda &&
        k_count > 2) {
      const ComponentLabels components = connected_components(model.topology, model.node_count());
      const double alpha_star = global_alpha_star(model);
      const std::int64_t lambda_new =
          adjust_lambda(state.buffer, state.lambda, alpha_star, model.config);
      const double q_new = update_quantile_level(state.q, lambda_new, components.count, k_count);
      const std::vector<std::vector<double>> window(state.buffer.end() - lambda_new,
                                                    state.buffer.end());
      const SimilarityWindow sim = build_similarity_matrix(window, alpha_star);
      state.v_threshold = recompute_vigilance(sim, q_new);
      state.lambda = lambda_new;
      state.q = q_new;
      state.recompute_counter = 0;
      while (std::ssize(state.buffer) > 2 * state.lambda) {
        state.buffer.pop_front();
      }
    }
    if (trace != nullptr) {
      trace->lambda.push_back(state.lambda);
      trace->v_threshold.push_back(state.v_threshold);
    }
  }
}

}  // namespace idat
