#pragma once

#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "idat/experiment.hpp"
#include "idat/model.hpp"

namespace idat {

using json = nlohmann::json;

inline json to_json(const Aggregate& agg) {
  return json{{"mean", agg.mean}, {"std", agg.stddev}};
}

inline json to_json(const SeedResult& result) {
  json j{{"seed", result.seed},
         {"ari", result.ari},
         {"ami", result.ami},
         {"nodes", result.node_count},
         {"clusters", result.cluster_count},
         {"total_nodes", result.total_nodes},
         {"total_clusters", result.total_clusters},
         {"wall_ms", result.wall_ms}};
  if (result.ai_ari) j["ai_ari"] = *result.ai_ari;
  if (result.ai_ami) j["ai_ami"] = *result.ai_ami;
  if (result.bwt_ari) j["bwt_ari"] = *result.bwt_ari;
  if (result.bwt_ami) j["bwt_ami"] = *result.bwt_ami;
  return j;
}

inline json to_json(const RunReport& report) {
  json per_seed = json::array();
  for (const SeedResult& r : report.per_seed) {
    per_seed.push_back(to_json(r));
  }
  json aggregates = json::object();
  for (const auto& [key, agg] : report.aggregates) {
    aggregates[key] = to_json(agg);
  }
  return json{{"config",
               {{"dataset", report.dataset},
                {"protocol", to_string(report.protocol)},
                {"ablation", to_string(report.ablation)},
                {"lambda_init", report.lambda_init},
                {"shuffle", report.shuffle},
                {"normalize", report.normalize},
                {"seeds", report.seeds}}},
              {"per_seed", per_seed},
              {"aggregates", aggregates},
              {"histories",
               {{"seed", report.history_seed},
                {"lambda", report.history.lambda},
                {"v_threshold", report.history.v_threshold}}}};
}

inline RunReport report_from_json(const json& j) {
  RunReport report;
  const json& config = j.at("config");
  report.dataset = config.at("dataset").get<std::string>();
  report.protocol = config.at("protocol").get<std::string>() == "stationary"
                        ? Protocol::stationary
                        : Protocol::nonstationary;
  report.ablation = ablation_from_string(config.at("ablation").get<std::string>());
  report.lambda_init = config.at("lambda_init").get<std::int64_t>();
  report.shuffle = config.at("shuffle").get<bool>();
  report.normalize = config.at("normalize").get<bool>();
  report.seeds = config.at("seeds").get<std::vector<std::uint64_t>>();
  for (const json& entry : j.at("per_seed")) {
    SeedResult result;
    result.seed = entry.at("seed").get<std::uint64_t>();
    result.ari = entry.at("ari").get<double>();
    result.ami = entry.at("ami").get<double>();
    result.node_count = entry.at("nodes").get<std::int64_t>();
    result.cluster_count = entry.at("clusters").get<std::int64_t>();
    result.total_nodes = entry.at("total_nodes").get<std::int64_t>();
    result.total_clusters = entry.at("total_clusters").get<std::int64_t>();
    result.wall_ms = entry.at("wall_ms").get<double>();
    if (entry.contains("ai_ari")) result.ai_ari = entry.at("ai_ari").get<double>();
    if (entry.contains("ai_ami")) result.ai_ami = entry.at("ai_ami").get<double>();
    if (entry.contains("bwt_ari")) result.bwt_ari = entry.at("bwt_ari").get<double>();
    if (entry.contains("bwt_ami")) result.bwt_ami = entry.at("bwt_ami").get<double>();
    report.per_seed.push_back(result);
  }
  for (const auto& [key, value] : j.at("aggregates").items()) {
    report.aggregates[key] =
        Aggregate{value.at("mean").get<double>(), value.at("std").get<double>()};
  }
  const json& histories = j.at("histories");
  report.history_seed = histories.at("seed").get<std::uint64_t>();
  report.history.lambda = histories.at("lambda").get<std::vector<std::int64_t>>();
  report.history.v_threshold = histories.at("v_threshold").get<std::vector<double>>();
  return report;
}

inline void write_report(const RunReport& report, const std::string& path) {
  if (report.seeds.empty() || report.per_seed.empty()) {
    throw std::invalid_argument("write_report: report carries no seed results");
  }
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("write_report: cannot open " + path);
  }
  out << to_json(report).dump(2) << '\n';
  if (!out) {
    throw std::runtime_error("write_report: write failed for " + path);
  }
}

inline RunReport read_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("read_report: cannot open " + path);
  }
  json j;
  in >> j;
  return report_from_json(j);
}

inline json to_json(const Model& model) {
  json nodes = json::array();
  for (const Node& node : model.nodes) {
    nodes.push_back(json{{"position", node.position},
                         {"count", node.update_count},
                         {"sigma", node.sigma},
                         {"active", node.active},
                         {"inactivity", node.inactivity},
                         {"created_at", node.created_at}});
  }
  const std::size_t k_count = model.node_count();
  json edges = json::array();
  json candidates = json::array();
  json prev_candidates = json::array();
  for (std::size_t i = 0; i < k_count; ++i) {
    for (std::size_t j = i + 1; j < k_count; ++j) {
      if (model.topology.edges(i, j) != 0) {
        edges.push_back(json::array({i, j}));
      }
      if (model.topology.candidates(i, j) != 0) {
        candidates.push_back(json::array({i, j, model.topology.candidates(i, j)}));
      }
      if (model.topology.prev_candidates(i, j) != 0) {
        prev_candidates.push_back(json::array({i, j, model.topology.prev_candidates(i, j)}));
      }
    }
  }
  json buffer = json::array();
  for (const auto& sample : model.adaptive.buffer) {
    buffer.push_back(sample);
  }
  return json{{"format", "idat-model"},
              {"version", 1},
              {"config",
               {{"lambda_init", model.config.lambda_init},
                {"eps_det", model.config.eps_det},
                {"t_demote", model.config.t_demote},
                {"disable_decremental", model.config.disable_decremental},
                {"disable_incremental", model.config.disable_incremental},
                {"disable_all_adaptation", model.config.disable_all_adaptation}}},
              {"samples_seen", model.samples_seen},
              {"nodes", nodes},
              {"edges", edges},
              {"candidates", candidates},
              {"prev_counts", model.topology.prev_counts},
              {"prev_candidates", prev_candidates},
              {"scale",
               {{"count", model.scale.count()},
                {"mean", model.scale.mean()},
                {"m2", model.scale.m2()}}},
              {"adaptive",
               {{"lambda", model.adaptive.lambda},
                {"v_threshold", model.adaptive.v_threshold},
                {"q", model.adaptive.q},
                {"r", model.adaptive.recompute_counter},
                {"buffer", buffer}}}};
}

inline Model model_from_json(const json& j) {
  if (j.value("format", "") != "idat-model") {
    throw std::runtime_error("model_from_json: not an idat model file");
  }
  Config config;
  const json& cfg = j.at("config");
  config.lambda_init = cfg.at("lambda_init").get<std::int64_t>();
  config.eps_det = cfg.at("eps_det").get<double>();
  config.t_demote = cfg.at("t_demote").get<std::int64_t>();
  config.disable_decremental = cfg.at("disable_decremental").get<bool>();
  config.disable_incremental = cfg.at("disable_incremental").get<bool>();
  config.disable_all_adaptation = cfg.at("disable_all_adaptation").get<bool>();
  Model model(config);
  model.samples_seen = j.at("samples_seen").get<std::int64_t>();
  for (const json& entry : j.at("nodes")) {
    Node node;
    node.position = entry.at("position").get<std::vector<double>>();
    node.update_count = entry.at("count").get<std::int64_t>();
    node.sigma = entry.at("sigma").get<double>();
    node.active = entry.at("active").get<bool>();
    node.inactivity = entry.at("inactivity").get<std::int64_t>();
    node.created_at = entry.at("created_at").get<std::int64_t>();
    model.nodes.push_back(std::move(node));
    model.topology.grow();
  }
  for (const json& pair : j.at("edges")) {
    model.topology.edges.set_symmetric(pair.at(0).get<std::size_t>(),
                                       pair.at(1).get<std::size_t>(), 1);
  }
  for (const json& triple : j.at("candidates")) {
    model.topology.set_candidate(triple.at(0).get<std::size_t>(),
                                 triple.at(1).get<std::size_t>(),
                                 triple.at(2).get<std::int64_t>());
  }
  model.topology.prev_counts = j.at("prev_counts").get<std::vector<std::int64_t>>();
  for (const json& triple : j.at("prev_candidates")) {
    model.topology.prev_candidates.set_symmetric(triple.at(0).get<std::size_t>(),
                                                 triple.at(1).get<std::size_t>(),
                                                 triple.at(2).get<std::int64_t>());
  }
  const json& scale = j.at("scale");
  model.scale.restore(scale.at("count").get<std::int64_t>(),
                      scale.at("mean").get<std::vector<double>>(),
                      scale.at("m2").get<std::vector<double>>());
  const json& adaptive = j.at("adaptive");
  model.adaptive.lambda = adaptive.at("lambda").get<std::int64_t>();
  model.adaptive.v_threshold = adaptive.at("v_threshold").get<double>();
  model.adaptive.q = adaptive.at("q").get<double>();
  model.adaptive.recompute_counter = adaptive.at("r").get<std::int64_t>();
  for (const json& sample : adaptive.at("buffer")) {
    model.adaptive.buffer.push_back(sample.get<std::vector<double>>());
  }
  return model;
}

inline void save_model(const Model& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("save_model: cannot open " + path);
  }
  out << to_json(model).dump(2) << '\n';
  if (!out) {
    throw std::runtime_error("save_model: write failed for " + path);
  }
}

inline Model load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("load_model: cannot open " + path);
  }
  json j;
  in >> j;
  return model_from_json(j);
}

}  // namespace idat
