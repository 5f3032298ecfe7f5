#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "idat/adapt.hpp"
#include "idat/dataset.hpp"
#include "idat/metrics.hpp"
#include "idat/model.hpp"
#include "idat/predict.hpp"
#include "idat/rng.hpp"

namespace idat {

enum class Protocol { stationary, nonstationary };
enum class Ablation { full, no_decremental, no_incremental, no_all };

inline std::string to_string(Protocol protocol) {
  return protocol == Protocol::stationary ? "stationary" : "nonstationary";
}

inline std::string to_string(Ablation ablation) {
  switch (ablation) {
    case Ablation::full:
      return "full";
    case Ablation::no_decremental:
      return "no_dec";
    case Ablation::no_incremental:
      return "no_inc";
    case Ablation::no_all:
      return "no_all";
  }
  return "full";
}

inline Ablation ablation_from_string(const std::string& name) {
  if (name == "full") return Ablation::full;
  if (name == "no_dec") return Ablation::no_decremental;
  if (name == "no_inc") return Ablation::no_incremental;
  if (name == "no_all") return Ablation::no_all;
  throw std::invalid_argument("unknown ablation variant: " + name);
}

struct ExperimentConfig {
  Protocol protocol = Protocol::stationary;
  std::vector<std::uint64_t> seeds;
  Ablation ablation = Ablation::full;
  std::int64_t lambda_init = 2;
  bool shuffle = true;
  bool normalize = false;
  std::string output_path;

  void validate() const {
    if (seeds.empty()) {
      throw std::invalid_argument("ExperimentConfig: seeds must not be empty");
    }
    if (lambda_init < 2) {
      throw std::invalid_argument("ExperimentConfig: lambda_init must be at least 2");
    }
  }
};

inline Config make_engine_config(const ExperimentConfig& config) {
  Config engine;
  engine.lambda_init = config.lambda_init;
  engine.disable_decremental = config.ablation == Ablation::no_decremental;
  engine.disable_incremental = config.ablation == Ablation::no_incremental;
  engine.disable_all_adaptation = config.ablation == Ablation::no_all;
  return engine;
}

struct SeedResult {
  std::uint64_t seed = 0;
  double ari = 0.0;
  double ami = 0.0;
  std::int64_t node_count = 0;     // prediction candidate set
  std::int64_t cluster_count = 0;  // distinct labels it can emit
  std::int64_t total_nodes = 0;    // including inactive candidates
  std::int64_t total_clusters = 0;
  std::optional<double> ai_ari;
  std::optional<double> ai_ami;
  std::optional<double> bwt_ari;
  std::optional<double> bwt_ami;
  double wall_ms = 0.0;
};

struct Aggregate {
  double mean = 0.0;
  double stddev = 0.0;
};

inline Aggregate aggregate(std::span<const double> values) {
  Aggregate agg;
  if (values.empty()) {
    return agg;
  }
  double sum = 0.0;
  for (const double v : values) {
    sum += v;
  }
  agg.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (const double v : values) {
      ss += (v - agg.mean) * (v - agg.mean);
    }
    agg.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return agg;
}

struct RunReport {
  std::string dataset;
  Protocol protocol = Protocol::stationary;
  Ablation ablation = Ablation::full;
  std::int64_t lambda_init = 2;
  bool shuffle = true;
  bool normalize = false;
  std::vector<std::uint64_t> seeds;
  std::vector<SeedResult> per_seed;
  std::map<std::string, Aggregate> aggregates;
  std::uint64_t history_seed = 0;
  TrainTrace history;  // per-sample (lambda, V) of the median-ARI seed
};

namespace detail {

inline void finalize_report(RunReport& report, std::vector<TrainTrace> traces) {
  const std::size_t n = report.per_seed.size();
  const auto collect = [&](auto getter) {
    std::vector<double> values;
    values.reserve(n);
    for (const SeedResult& r : report.per_seed) {
      values.push_back(getter(r));
    }
    return values;
  };
  report.aggregates["ari"] = aggregate(collect([](const SeedResult& r) { return r.ari; }));
  report.aggregates["ami"] = aggregate(collect([](const SeedResult& r) { return r.ami; }));
  report.aggregates["nodes"] =
      aggregate(collect([](const SeedResult& r) { return static_cast<double>(r.node_count); }));
  report.aggregates["clusters"] =
      aggregate(collect([](const SeedResult& r) { return static_cast<double>(r.cluster_count); }));
  if (report.per_seed.front().ai_ari.has_value()) {
    report.aggregates["ai_ari"] =
        aggregate(collect([](const SeedResult& r) { return *r.ai_ari; }));
    report.aggregates["ai_ami"] =
        aggregate(collect([](const SeedResult& r) { return *r.ai_ami; }));
    report.aggregates["bwt_ari"] =
        aggregate(collect([](const SeedResult& r) { return *r.bwt_ari; }));
    report.aggregates["bwt_ami"] =
        aggregate(collect([](const SeedResult& r) { return *r.bwt_ami; }));
  }
  // History of the median-ARI seed (lower median; ties by seed order).
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) {
    order[i] = i;
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ra = report.per_seed[a];
    const auto& rb = report.per_seed[b];
    return ra.ari != rb.ari ? ra.ari < rb.ari : ra.seed < rb.seed;
  });
  const std::size_t pick = order[(n - 1) / 2];
  report.history_seed = report.per_seed[pick].seed;
  report.history = std::move(traces[pick]);
}

}  // namespace detail

/// One seed's training pass, shared by the report runners and the CLI's
/// model export so both see the identical model.
struct SeedArtifacts {
  Model model;
  std::vector<Model> snapshots;           // nonstationary: one per stage
  std::vector<std::int32_t> class_order;  // nonstationary only
  TrainTrace trace;
};

inline SeedArtifacts run_seed(const Dataset& dataset, const ExperimentConfig& config,
                              std::uint64_t seed) {
  SeedArtifacts artifacts;
  artifacts.model = Model(make_engine_config(config));
  Rng rng(seed);
  if (config.protocol == Protocol::stationary) {
    std::vector<std::size_t> order(dataset.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
      order[i] = i;
    }
    if (config.shuffle) {
      rng.shuffle(order);
    }
    std::vector<std::vector<double>> stream;
    stream.reserve(order.size());
    for (const std::size_t i : order) {
      stream.push_back(dataset.features[i]);
    }
    train(artifacts.model, stream, &artifacts.trace);
    return artifacts;
  }
  artifacts.class_order.resize(dataset.class_count);
  for (std::int32_t c = 0; c < dataset.class_count; ++c) {
    artifacts.class_order[c] = c;
  }
  rng.shuffle(artifacts.class_order);
  artifacts.snapshots.reserve(artifacts.class_order.size());
  for (const std::int32_t cls : artifacts.class_order) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      if (dataset.labels[i] == cls) {
        idx.push_back(i);
      }
    }
    if (config.shuffle) {
      rng.shuffle(idx);
    }
    std::vector<std::vector<double>> stage;
    stage.reserve(idx.size());
    for (const std::size_t i : idx) {
      stage.push_back(dataset.features[i]);
    }
    train(artifacts.model, stage, &artifacts.trace);
    artifacts.snapshots.push_back(artifacts.model);
  }
  return artifacts;
}

/// Stationary protocol: per seed, shuffle the whole dataset, train a
/// fresh model on one pass, then label every sample and score against
/// the ground truth.
inline RunReport run_stationary(const Dataset& input, const ExperimentConfig& config) {
  config.validate();
  Dataset dataset = input;
  if (config.normalize) {
    minmax_normalize(dataset);
  }
  RunReport report;
  report.dataset = dataset.name;
  report.protocol = Protocol::stationary;
  report.ablation = config.ablation;
  report.lambda_init = config.lambda_init;
  report.shuffle = config.shuffle;
  report.normalize = config.normalize;
  report.seeds = config.seeds;
  ExperimentConfig seed_config = config;
  seed_config.protocol = Protocol::stationary;
  std::vector<TrainTrace> traces;
  for (const std::uint64_t seed : config.seeds) {
    const auto t0 = std::chrono::steady_clock::now();
    SeedArtifacts artifacts = run_seed(dataset, seed_config, seed);
    Model& model = artifacts.model;
    TrainTrace& trace = artifacts.trace;
    const std::vector<std::int32_t> node_labels = assign_cluster_indices(model);
    std::vector<std::int32_t> predicted(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      predicted[i] = predict(model, node_labels, dataset.features[i]).label;
    }
    SeedResult result;
    result.seed = seed;
    result.ari = ari(dataset.labels, predicted);
    result.ami = ami(dataset.labels, predicted);
    const EffectiveTopology effective = effective_topology(model);
    result.node_count = effective.nodes;
    result.cluster_count = effective.clusters;
    result.total_nodes = static_cast<std::int64_t>(model.node_count());
    result.total_clusters = connected_components(model.topology, model.node_count()).count;
    result.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    report.per_seed.push_back(result);
    traces.push_back(std::move(trace));
  }
  detail::finalize_report(report, std::move(traces));
  return report;
}

/// Nonstationary (class-incremental) protocol: per seed, randomize the
/// class order, present each class as one stage (within-class order
/// shuffled), snapshot after every stage, and derive AI/BWT from the
/// stage snapshots.
inline RunReport run_nonstationary(const Dataset& input, const ExperimentConfig& config) {
  config.validate();
  if (input.class_count < 2) {
    throw std::invalid_argument("run_nonstationary: at least two classes required");
  }
  Dataset dataset = input;
  if (config.normalize) {
    minmax_normalize(dataset);
  }
  RunReport report;
  report.dataset = dataset.name;
  report.protocol = Protocol::nonstationary;
  report.ablation = config.ablation;
  report.lambda_init = config.lambda_init;
  report.shuffle = config.shuffle;
  report.normalize = config.normalize;
  report.seeds = config.seeds;
  ExperimentConfig seed_config = config;
  seed_config.protocol = Protocol::nonstationary;
  std::vector<TrainTrace> traces;
  for (const std::uint64_t seed : config.seeds) {
    const auto t0 = std::chrono::steady_clock::now();
    SeedArtifacts artifacts = run_seed(dataset, seed_config, seed);
    Model& model = artifacts.model;
    TrainTrace& trace = artifacts.trace;
    const IncrementalRecord ari_record = evaluate_incremental_run(
        artifacts.snapshots, dataset.features, dataset.labels, artifacts.class_order, &ari);
    const IncrementalRecord ami_record = evaluate_incremental_run(
        artifacts.snapshots, dataset.features, dataset.labels, artifacts.class_order, &ami);
    SeedResult result;
    result.seed = seed;
    result.ari = ari_record.stage_scores.back();
    result.ami = ami_record.stage_scores.back();
    const EffectiveTopology effective = effective_topology(model);
    result.node_count = effective.nodes;
    result.cluster_count = effective.clusters;
    result.total_nodes = static_cast<std::int64_t>(model.node_count());
    result.total_clusters = connected_components(model.topology, model.node_count()).count;
    result.ai_ari = average_incremental(ari_record.stage_scores);
    result.ai_ami = average_incremental(ami_record.stage_scores);
    result.bwt_ari = backward_transfer(ari_record);
    result.bwt_ami = backward_transfer(ami_record);
    result.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    report.per_seed.push_back(result);
    traces.push_back(std::move(trace));
  }
  detail::finalize_report(report, std::move(traces));
  return report;
}

/// Runs every ablation variant for each requested lambda_init with
/// shared seeds; the nonstationary protocol throughout.
inline std::vector<RunReport> run_ablation_suite(const Dataset& dataset,
                                                 const ExperimentConfig& config,
                                                 std::span<const std::int64_t> lambda_inits) {
  config.validate();
  if (lambda_inits.empty()) {
    throw std::invalid_argument("run_ablation_suite: no lambda_init values");
  }
  std::vector<RunReport> reports;
  for (const std::int64_t lambda : lambda_inits) {
    for (const Ablation variant :
         {Ablation::full, Ablation::no_decremental, Ablation::no_incremental, Ablation::no_all}) {
      ExperimentConfig variant_config = config;
      variant_config.protocol = Protocol::nonstationary;
      variant_config.ablation = variant;
      variant_config.lambda_init = lambda;
      reports.push_back(run_nonstationary(dataset, variant_config));
    }
  }
  return reports;
}

}  // namespace idat
