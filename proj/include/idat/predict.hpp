#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "idat/learn.hpp"
#include "idat/model.hpp"

namespace idat {

struct ClusterAssignment {
  std::int32_t label = 0;
  std::size_t winner = 0;
  double similarity = 0.0;
};

/// Component label per node, over all nodes (inactive ones still carry
/// component structure).
inline std::vector<std::int32_t> assign_cluster_indices(const Model& model) {
  if (model.nodes.empty()) {
    throw std::invalid_argument("assign_cluster_indices: model has no nodes");
  }
  return connected_components(model.topology, model.node_count()).labels;
}

/// Winner search over the active nodes (all nodes when none is active),
/// against precomputed component labels. Similarities use the shared
/// global scale so the ranking is distance-monotone; per-node sigma
/// snapshots trail the growing global scale at different ages, and
/// ranking by them would let the newest nodes absorb every query in a
/// class-incremental run. Ties resolve to the lowest node index. Pure
/// read.
inline ClusterAssignment predict(const Model& model, std::span<const std::int32_t> node_labels,
                                 std::span<const double> x) {
  if (model.nodes.empty()) {
    throw std::invalid_argument("predict: model has no nodes");
  }
  if (node_labels.size() != model.node_count()) {
    throw std::invalid_argument("predict: label vector does not match node count");
  }
  if (!all_finite(x) || x.size() != model.nodes.front().position.size()) {
    throw std::invalid_argument("predict: bad query sample");
  }
  bool any_active = false;
  for (const Node& node : model.nodes) {
    if (node.active) {
      any_active = true;
      break;
    }
  }
  const double alpha_star = global_alpha_star(model);
  bool found = false;
  std::size_t best = 0;
  double best_v = 0.0;
  for (std::size_t k = 0; k < model.node_count(); ++k) {
    if (any_active && !model.nodes[k].active) {
      continue;
    }
    const double v = 1.0 / (1.0 + alpha_star * euclidean(x, model.nodes[k].position));
    if (!found || v > best_v) {
      found = true;
      best = k;
      best_v = v;
    }
  }
  ClusterAssignment assignment;
  assignment.winner = best;
  assignment.similarity = best_v;
  assignment.label = node_labels[best];
  return assignment;
}

inline ClusterAssignment predict(const Model& model, std::span<const double> x) {
  const std::vector<std::int32_t> labels = assign_cluster_indices(model);
  return predict(model, labels, x);
}

/// Size of the prediction candidate set (the active nodes; all nodes when
/// none is active) and the number of distinct cluster labels it can emit.
/// Inactive nodes are internal candidates, not part of the answerable
/// topology.
struct EffectiveTopology {
  std::int64_t nodes = 0;
  std::int64_t clusters = 0;
};

inline EffectiveTopology effective_topology(const Model& model) {
  if (model.nodes.empty()) {
    throw std::invalid_argument("effective_topology: model has no nodes");
  }
  const std::vector<std::int32_t> labels = assign_cluster_indices(model);
  bool any_active = false;
  for (const Node& node : model.nodes) {
    if (node.active) {
      any_active = true;
      break;
    }
  }
  EffectiveTopology stats;
  std::vector<bool> seen(labels.size(), false);
  for (std::size_t k = 0; k < model.node_count(); ++k) {
    if (any_active && !model.nodes[k].active) {
      continue;
    }
    stats.nodes += 1;
    if (!seen[labels[k]]) {
      seen[labels[k]] = true;
      stats.clusters += 1;
    }
  }
  return stats;
}

}  // namespace idat
