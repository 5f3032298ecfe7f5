#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "idat/model.hpp"
#include "idat/quantile.hpp"

namespace idat {

/// Floor applied to sigma before inversion; only matters in the
/// degenerate pre-learning regime where variances are still 0.
inline constexpr double kSigmaFloor = 1e-12;

inline double inverse_distance_similarity(double distance, double sigma) {
  const double alpha = 1.0 / std::max(sigma, kSigmaFloor);
  return 1.0 / (1.0 + alpha * distance);
}

/// Reciprocal of the largest node scale; the shared scaling factor for
/// window similarities and prediction.
inline double global_alpha_star(const Model& model) {
  double sigma_max = 0.0;
  for (const Node& node : model.nodes) {
    sigma_max = std::max(sigma_max, node.sigma);
  }
  return 1.0 / std::max(sigma_max, kSigmaFloor);
}

/// First and second nearest nodes by Euclidean distance, with their
/// inverse-distance similarities.
struct WinnerPair {
  std::size_t s1 = 0;
  std::size_t s2 = 0;
  double d1 = 0.0;
  double d2 = 0.0;
  double v1 = 0.0;
  double v2 = 0.0;
};

enum class VigilanceCase { CreateNode, UpdateWinner, UpdateBoth };

/// Appends a node at the sample position. Folds the sample into the
/// global scale first, then snapshots the resulting sigma. When the
/// second node appears, the first node's sigma is overwritten with a
/// copy of the second's.
inline void create_node(Model& model, std::span<const double> x) {
  if (!all_finite(x)) {
    throw std::invalid_argument("create_node: non-finite sample");
  }
  if (!model.nodes.empty() && x.size() != model.nodes.front().position.size()) {
    throw std::invalid_argument("create_node: sample dimension mismatch");
  }
  model.scale.update(x);
  Node node;
  node.position.assign(x.begin(), x.end());
  node.update_count = 1;
  node.sigma = model.scale.total_variance();
  node.active = false;
  node.inactivity = 0;
  node.created_at = model.samples_seen;
  model.nodes.push_back(std::move(node));
  model.topology.grow();
  if (model.node_count() == 2) {
    model.nodes[0].sigma = model.nodes[1].sigma;
  }
}

/// Nearest and second-nearest nodes. Distance ties resolve to the lowest
/// node index.
inline WinnerPair winners(const Model& model, std::span<const double> x) {
  if (model.node_count() < 2) {
    throw std::invalid_argument("winners: at least two nodes required");
  }
  std::size_t best = 0;
  std::size_t second = 0;
  double best_d = std::numeric_limits<double>::infinity();
  double second_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < model.node_count(); ++k) {
    const double d = euclidean(x, model.nodes[k].position);
    if (d < best_d) {
      second = best;
      second_d = best_d;
      best = k;
      best_d = d;
    } else if (d < second_d) {
      second = k;
      second_d = d;
    }
  }
  WinnerPair pair;
  pair.s1 = best;
  pair.s2 = second;
  pair.d1 = best_d;
  pair.d2 = second_d;
  pair.v1 = inverse_distance_similarity(best_d, model.nodes[best].sigma);
  pair.v2 = inverse_distance_similarity(second_d, model.nodes[second].sigma);
  return pair;
}

/// Vigilance test: the nearest node failing the test always means novel
/// information, regardless of the second winner.
inline VigilanceCase classify_case(double v1, double v2, double v_threshold) {
  if (v1 < v_threshold) {
    return VigilanceCase::CreateNode;
  }
  if (v2 > v_threshold) {
    return VigilanceCase::UpdateBoth;
  }
  return VigilanceCase::UpdateWinner;
}

/// Moves the winner toward the sample by 1/M and refreshes its sigma
/// snapshot from the global scale.
inline void update_winner(Model& model, std::size_t s1, std::span<const double> x) {
  Node& node = model.nodes[s1];
  node.update_count += 1;
  const double step = 1.0 / static_cast<double>(node.update_count);
  for (std::size_t d = 0; d < node.position.size(); ++d) {
    node.position[d] += step * (x[d] - node.position[d]);
  }
  model.scale.update(x);
  node.sigma = model.scale.total_variance();
}

/// Winner update plus a damped second-winner update; the second winner's
/// step uses the post-increment counts of both nodes.
inline void update_both(Model& model, std::size_t s1, std::size_t s2, std::span<const double> x) {
  if (s1 == s2) {
    throw std::invalid_argument("update_both: winners must differ");
  }
  update_winner(model, s1, x);
  Node& runner_up = model.nodes[s2];
  runner_up.update_count += 1;
  const double step =
      1.0 / static_cast<double>(model.nodes[s1].update_count + runner_up.update_count);
  for (std::size_t d = 0; d < runner_up.position.size(); ++d) {
    runner_up.position[d] += step * (x[d] - runner_up.position[d]);
  }
}

/// Promotes both winners to active when each update count exceeds the
/// mean count of nodes updated more than once. No node qualifies while
/// that conditioning set is empty.
inline void try_activate(Model& model, std::size_t s1, std::size_t s2) {
  double sum = 0.0;
  std::int64_t hits = 0;
  for (const Node& node : model.nodes) {
    if (node.update_count > 1) {
      sum += static_cast<double>(node.update_count);
      ++hits;
    }
  }
  if (hits == 0) {
    return;
  }
  const double t_active = sum / static_cast<double>(hits);
  if (static_cast<double>(model.nodes[s1].update_count) > t_active &&
      static_cast<double>(model.nodes[s2].update_count) > t_active) {
    model.nodes[s1].active = true;
    model.nodes[s2].active = true;
  }
}

/// Counts the co-selection and forms a bidirectional edge once the pair's
/// count exceeds the mean of all positive candidate counts.
inline void accumulate_edge(Model& model, std::size_t s1, std::size_t s2) {
  auto& topo = model.topology;
  const std::int64_t count = topo.candidates(s1, s2) + 1;
  topo.set_candidate(s1, s2, count);
  const double t_edge =
      static_cast<double>(topo.candidate_sum) / static_cast<double>(topo.candidate_pairs);
  if (static_cast<double>(count) > t_edge) {
    topo.edges.set_symmetric(s1, s2, 1);
  }
}

/// Per-interval activity potential: the node's update-count delta plus
/// its candidate-interaction delta since the last snapshot.
inline std::int64_t activity_potential(const Model& model, std::size_t k) {
  const auto& topo = model.topology;
  std::int64_t prev_row = 0;
  for (std::size_t j = 0; j < topo.prev_candidates.size(); ++j) {
    prev_row += topo.prev_candidates(k, j);
  }
  return (model.nodes[k].update_count - topo.prev_counts[k]) +
         (topo.candidate_row_sum(k) - prev_row);
}

/// Periodic maintenance: IQR-based edge pruning, deletion of surplus
/// never-updated nodes, and demotion of isolated low-potential nodes.
inline void maintain_topology(Model& model) {
  auto& topo = model.topology;

  // (i) Edge pruning. Quartiles are ill-defined on fewer than two edges.
  {
    struct EdgeRef {
      std::size_t i;
      std::size_t j;
      double length;
    };
    std::vector<EdgeRef> edge_list;
    const std::size_t k_count = model.node_count();
    for (std::size_t i = 0; i < k_count; ++i) {
      for (std::size_t j = i + 1; j < k_count; ++j) {
        if (topo.edges(i, j) != 0) {
          edge_list.push_back({i, j, euclidean(model.nodes[i].position, model.nodes[j].position)});
        }
      }
    }
    if (edge_list.size() >= 2) {
      std::vector<double> lengths;
      lengths.reserve(edge_list.size());
      for (const EdgeRef& e : edge_list) {
        lengths.push_back(e.length);
      }
      std::sort(lengths.begin(), lengths.end());
      const double q1 = quantile_sorted(lengths, 0.25);
      const double q3 = quantile_sorted(lengths, 0.75);
      const double upper = q3 + 1.5 * (q3 - q1);
      for (const EdgeRef& e : edge_list) {
        if (e.length > upper) {
          topo.edges.set_symmetric(e.i, e.j, 0);
          topo.set_candidate(e.i, e.j, 0);
        }
      }
    }
  }

  // (ii) Node deletion: keep only the lambda most recent single-update nodes.
  {
    std::vector<std::size_t> singles;
    for (std::size_t k = 0; k < model.node_count(); ++k) {
      if (model.nodes[k].update_count == 1) {
        singles.push_back(k);
      }
    }
    if (std::ssize(singles) > model.adaptive.lambda) {
      std::sort(singles.begin(), singles.end(), [&](std::size_t a, std::size_t b) {
        return model.nodes[a].created_at > model.nodes[b].created_at;
      });
      std::vector<std::size_t> doomed(singles.begin() + model.adaptive.lambda, singles.end());
      remove_nodes(model, doomed);
    }
  }

  // (iii) Node demotion via the activity potential. The bound is taken
  // from the positive potentials only; with none, the whole check is
  // skipped for this interval.
  {
    const std::size_t k_count = model.node_count();
    std::vector<double> potential(k_count, 0.0);
    std::vector<double> positives;
    for (std::size_t k = 0; k < k_count; ++k) {
      const std::int64_t p = activity_potential(model, k);
      potential[k] = static_cast<double>(p);
      if (p > 0) {
        positives.push_back(potential[k]);
      }
    }
    if (!positives.empty()) {
      std::sort(positives.begin(), positives.end());
      const double q1 = quantile_sorted(positives, 0.25);
      const double q3 = quantile_sorted(positives, 0.75);
      const double lower = q1 - 1.5 * (q3 - q1);
      for (std::size_t k = 0; k < k_count; ++k) {
        Node& node = model.nodes[k];
        if (!node.active) {
          continue;
        }
        if (topo.degree(k) == 0 && potential[k] < lower) {
          node.inactivity += 1;
        } else {
          node.inactivity = 0;
        }
        if (node.inactivity >= model.config.t_demote) {
          node.active = false;
        }
      }
    }
  }

  snapshot_interval_state(model);
}

/// One clustering step. The first three samples always create nodes and
/// return before maintenance; afterwards the sample is dispatched through
/// the vigilance test and maintenance runs on every lambda-th sample.
inline void clustering_step(Model& model, std::span<const double> x) {
  if (!all_finite(x)) {
    throw std::invalid_argument("clustering_step: non-finite sample");
  }
  const std::size_t dim = model.dimension();
  if (dim != 0 && x.size() != dim) {
    throw std::invalid_argument("clustering_step: sample dimension mismatch");
  }
  model.samples_seen += 1;
  if (model.node_count() < 3) {
    create_node(model, x);
    return;
  }
  const WinnerPair pair = winners(model, x);
  switch (classify_case(pair.v1, pair.v2, model.adaptive.v_threshold)) {
    case VigilanceCase::CreateNode:
      create_node(model, x);
      break;
    case VigilanceCase::UpdateWinner:
      update_winner(model, pair.s1, x);
      break;
    case VigilanceCase::UpdateBoth:
      update_both(model, pair.s1, pair.s2, x);
      try_activate(model, pair.s1, pair.s2);
      accumulate_edge(model, pair.s1, pair.s2);
      break;
  }
  if (model.samples_seen % model.adaptive.lambda == 0) {
    maintain_topology(model);
  }
}

}  // namespace idat
