#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <vector>

#include "idat/experiment.hpp"
#include "idat/report.hpp"
#include "idat/rng.hpp"
#include "synthetic.hpp"

using Catch::Approx;

namespace {

idat::Dataset two_blobs(std::uint64_t seed, std::size_t per_class = 100) {
  idat::Rng rng(seed);
  return synthetic::blobs(rng, {{0.0, 0.0}, {10.0, 10.0}}, 1.0, per_class);
}

idat::ExperimentConfig base_config(std::size_t seed_count) {
  idat::ExperimentConfig config;
  for (std::size_t s = 1; s <= seed_count; ++s) {
    config.seeds.push_back(s);
  }
  return config;
}

idat::json strip_wall_clock(idat::json j) {
  for (auto& entry : j["per_seed"]) {
    entry.erase("wall_ms");
  }
  return j;
}

}  // namespace

TEST_CASE("run_stationary") {
  SECTION("well-separated blobs cluster cleanly") {
    const auto dataset = two_blobs(2024);
    const auto report = idat::run_stationary(dataset, base_config(10));
    REQUIRE(report.per_seed.size() == 10);
    REQUIRE(report.aggregates.at("ari").mean >= 0.9);
  }
  SECTION("a degenerate repeated-point stream survives") {
    idat::Dataset dataset;
    dataset.name = "constant";
    dataset.class_count = 1;
    for (int i = 0; i < 50; ++i) {
      dataset.features.push_back({1.0, 1.0});
      dataset.labels.push_back(0);
    }
    const auto report = idat::run_stationary(dataset, base_config(3));
    for (const auto& seed : report.per_seed) {
      REQUIRE(seed.total_nodes == 3);
      REQUIRE(seed.node_count >= 1);
    }
  }
  SECTION("seedless configs are rejected") {
    idat::ExperimentConfig config;
    REQUIRE_THROWS_AS(idat::run_stationary(two_blobs(1), config), std::invalid_argument);
  }
  SECTION("identical configs give identical reports modulo wall clock") {
    const auto dataset = two_blobs(77, 60);
    const auto config = base_config(4);
    const auto a = strip_wall_clock(idat::to_json(idat::run_stationary(dataset, config)));
    const auto b = strip_wall_clock(idat::to_json(idat::run_stationary(dataset, config)));
    REQUIRE(a == b);
  }
  SECTION("aggregates equal recomputation from the per-seed values") {
    const auto report = idat::run_stationary(two_blobs(31, 60), base_config(6));
    std::vector<double> aris;
    for (const auto& seed : report.per_seed) {
      aris.push_back(seed.ari);
    }
    const auto agg = idat::aggregate(aris);
    REQUIRE(report.aggregates.at("ari").mean == Approx(agg.mean).margin(1e-12));
    REQUIRE(report.aggregates.at("ari").stddev == Approx(agg.stddev).margin(1e-12));
  }
}

TEST_CASE("run_nonstationary") {
  idat::Rng rng(404);
  const auto dataset =
      synthetic::blobs(rng, {{0.0, 0.0}, {12.0, 0.0}, {0.0, 12.0}}, 1.0, 60);
  SECTION("clean class-incremental streams keep BWT near zero") {
    const auto report = idat::run_nonstationary(dataset, base_config(10));
    REQUIRE(report.per_seed.front().ai_ari.has_value());
    REQUIRE(report.aggregates.at("bwt_ari").mean >= -0.05);
    REQUIRE(report.aggregates.at("ari").mean >= 0.6);
  }
  SECTION("single-class datasets are rejected") {
    idat::Dataset single;
    single.name = "single";
    single.class_count = 1;
    for (int i = 0; i < 20; ++i) {
      single.features.push_back({static_cast<double>(i)});
      single.labels.push_back(0);
    }
    REQUIRE_THROWS_AS(idat::run_nonstationary(single, base_config(2)), std::invalid_argument);
  }
  SECTION("stage snapshots are pure prefixes of one pass") {
    // Re-training a fresh model on the same prefix stream must reproduce
    // the stage snapshot exactly (protocol isolation).
    idat::ExperimentConfig config = base_config(1);
    config.seeds = {9};
    idat::Rng order_rng(9);
    std::vector<std::int32_t> class_order{0, 1, 2};
    order_rng.shuffle(class_order);
    std::vector<std::vector<double>> prefix;
    idat::Model incremental{idat::make_engine_config(config)};
    for (const std::int32_t cls : class_order) {
      std::vector<std::size_t> idx;
      for (std::size_t i = 0; i < dataset.size(); ++i) {
        if (dataset.labels[i] == cls) {
          idx.push_back(i);
        }
      }
      order_rng.shuffle(idx);
      for (const std::size_t i : idx) {
        prefix.push_back(dataset.features[i]);
      }
      idat::train(incremental, std::span(prefix).subspan(prefix.size() - idx.size()));
      idat::Model fresh{idat::make_engine_config(config)};
      idat::train(fresh, prefix);
      REQUIRE(fresh == incremental);
    }
  }
}

TEST_CASE("run_ablation_suite") {
  idat::Rng rng(505);
  const auto dataset =
      synthetic::blobs(rng, {{0.0, 0.0}, {9.0, 0.0}, {0.0, 9.0}, {9.0, 9.0}}, 1.1, 40);
  auto config = base_config(10);
  const std::vector<std::int64_t> lambdas{2};
  const auto reports = idat::run_ablation_suite(dataset, config, lambdas);
  REQUIRE(reports.size() == 4);
  double full_ari = 0.0;
  double no_all_ari = 0.0;
  for (const auto& report : reports) {
    if (report.ablation == idat::Ablation::full) {
      full_ari = report.aggregates.at("ari").mean;
    }
    if (report.ablation == idat::Ablation::no_all) {
      no_all_ari = report.aggregates.at("ari").mean;
      // constant traces when nothing adapts
      for (const auto lambda : report.history.lambda) {
        REQUIRE(lambda == 2);
      }
      for (const double v : report.history.v_threshold) {
        REQUIRE(v == 0.0);
      }
    }
    if (report.ablation == idat::Ablation::no_decremental) {
      for (std::size_t t = 1; t < report.history.lambda.size(); ++t) {
        REQUIRE(report.history.lambda[t] >= report.history.lambda[t - 1]);
      }
    }
  }
  REQUIRE(full_ari >= no_all_ari);
}

TEST_CASE("report round trip") {
  const auto dataset = two_blobs(88, 40);
  auto config = base_config(3);
  const auto report = idat::run_nonstationary(dataset, config);
  const std::string path = "idat_test_report.json";
  idat::write_report(report, path);
  const auto loaded = idat::read_report(path);
  REQUIRE(idat::to_json(loaded) == idat::to_json(report));
  std::remove(path.c_str());
  SECTION("empty reports are rejected before write") {
    idat::RunReport empty;
    REQUIRE_THROWS_AS(idat::write_report(empty, path), std::invalid_argument);
  }
}

TEST_CASE("model snapshot round trip preserves predictions") {
  const auto dataset = two_blobs(99, 60);
  idat::Model model;
  idat::train(model, dataset.features);
  const std::string path = "idat_test_model.json";
  idat::save_model(model, path);
  const auto loaded = idat::load_model(path);
  std::remove(path.c_str());
  REQUIRE(loaded == model);
  for (std::size_t i = 0; i < dataset.size(); i += 7) {
    const auto a = idat::predict(model, dataset.features[i]);
    const auto b = idat::predict(loaded, dataset.features[i]);
    REQUIRE(a.label == b.label);
    REQUIRE(a.winner == b.winner);
  }
}
