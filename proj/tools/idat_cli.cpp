// Experiment CLI: stationary / class-incremental runs, the ablation
// grid, snapshot-based prediction, and label-file metrics.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "idat/idat.hpp"

namespace {

std::vector<std::uint64_t> parse_seed_spec(const std::string& spec) {
  std::vector<std::uint64_t> seeds;
  const auto range_at = spec.find("..");
  if (range_at != std::string::npos) {
    const std::uint64_t lo = std::stoull(spec.substr(0, range_at));
    const std::uint64_t hi = std::stoull(spec.substr(range_at + 2));
    if (hi < lo) {
      throw std::invalid_argument("seed range is backwards: " + spec);
    }
    for (std::uint64_t s = lo; s <= hi; ++s) {
      seeds.push_back(s);
    }
    return seeds;
  }
  std::size_t start = 0;
  while (start <= spec.size()) {
    const auto comma = spec.find(',', start);
    const std::string token =
        spec.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!token.empty()) {
      seeds.push_back(std::stoull(token));
    }
    if (comma == std::string::npos) {
      break;
    }
    start = comma + 1;
  }
  if (seeds.empty()) {
    throw std::invalid_argument("empty seed list: " + spec);
  }
  return seeds;
}

std::vector<std::uint64_t> resolve_seeds(const std::string& seeds_spec, bool seed_given,
                                         std::uint64_t seed) {
  if (!seeds_spec.empty()) {
    return parse_seed_spec(seeds_spec);
  }
  if (seed_given) {
    return {seed};
  }
  if (const char* env = std::getenv("IDAT_SEED")) {
    return {std::stoull(env)};
  }
  std::vector<std::uint64_t> seeds(10);
  for (std::uint64_t s = 0; s < 10; ++s) {
    seeds[s] = s + 1;
  }
  return seeds;
}

void print_summary(const idat::RunReport& report) {
  const auto& agg = report.aggregates;
  std::cout << report.dataset << " " << idat::to_string(report.protocol) << " ("
            << idat::to_string(report.ablation) << ", lambda_init=" << report.lambda_init
            << ", seeds=" << report.per_seed.size() << ")\n";
  const auto line = [&](const std::string& key, const std::string& label) {
    if (agg.count(key) != 0) {
      std::cout << "  " << label << ": " << agg.at(key).mean << " (" << agg.at(key).stddev
                << ")\n";
    }
  };
  line("ari", "ARI");
  line("ami", "AMI");
  line("ai_ari", "AI-ARI");
  line("ai_ami", "AI-AMI");
  line("bwt_ari", "BWT-ARI");
  line("bwt_ami", "BWT-AMI");
  line("nodes", "#Nodes");
  line("clusters", "#Clusters");
}

std::vector<std::int32_t> read_label_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open label file " + path);
  }
  std::vector<std::int32_t> labels;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") {
      continue;
    }
    try {
      labels.push_back(static_cast<std::int32_t>(std::stol(line)));
    } catch (const std::exception&) {
      throw std::runtime_error("bad label in " + path + " line " + std::to_string(row));
    }
  }
  if (labels.empty()) {
    throw std::runtime_error("no labels in " + path);
  }
  return labels;
}

struct CommonFlags {
  std::string seeds_spec;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::int64_t lambda_init = 2;
  std::string ablation = "full";
  std::string output;
  std::int32_t label_column = -1;
  bool no_header = false;
  bool normalize = false;
  bool no_shuffle = false;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags, bool with_lambda_default = true) {
  cmd->add_option("--seeds", flags.seeds_spec, "Seed list: 'a..b' range or comma-separated");
  cmd->add_option("--seed", flags.seed, "Single seed (IDAT_SEED env is the fallback)")
      ->each([&flags](const std::string&) { flags.seed_given = true; });
  if (with_lambda_default) {
    cmd->add_option("--lambda-init", flags.lambda_init, "Initial recalculation interval")
        ->check(CLI::Range(static_cast<std::int64_t>(2), static_cast<std::int64_t>(1000000)));
  }
  cmd->add_option("--ablation", flags.ablation, "Variant: full, no_dec, no_inc, no_all")
      ->check(CLI::IsMember({"full", "no_dec", "no_inc", "no_all"}));
  cmd->add_option("--output", flags.output, "Write the JSON report here");
  cmd->add_option("--label-column", flags.label_column, "0-based label column (default: last)");
  cmd->add_flag("--no-header", flags.no_header, "The CSV has no header row");
  cmd->add_flag("--normalize", flags.normalize, "Min-max scale features to [0,1] first");
  cmd->add_flag("--no-shuffle", flags.no_shuffle, "Keep the dataset order as-is");
}

idat::ExperimentConfig make_config(const CommonFlags& flags, idat::Protocol protocol) {
  idat::ExperimentConfig config;
  config.protocol = protocol;
  config.seeds = resolve_seeds(flags.seeds_spec, flags.seed_given, flags.seed);
  config.ablation = idat::ablation_from_string(flags.ablation);
  config.lambda_init = flags.lambda_init;
  config.shuffle = !flags.no_shuffle;
  config.normalize = flags.normalize;
  config.output_path = flags.output;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"IDAT streaming topological clustering"};
  app.require_subcommand(1);

  std::string data_path;
  std::string model_path;
  std::string model_out;
  std::string queries_path;
  std::string labels_a;
  std::string labels_b;
  bool predict_no_header = false;
  std::int32_t predict_label_column = -2;  // -2: queries carry no label column
  std::string predict_output;
  CommonFlags fit_flags;
  CommonFlags inc_flags;
  CommonFlags abl_flags;
  bool ablation_lambda_given = false;

  auto* fit = app.add_subcommand("fit", "Stationary run: train and score on the whole dataset");
  fit->add_option("data", data_path, "Numeric CSV with a label column")->required();
  add_common_flags(fit, fit_flags);
  fit->add_option("--model-out", model_out, "Save the first seed's trained model as JSON");

  auto* inc = app.add_subcommand("incremental", "Class-incremental run with AI/BWT metrics");
  inc->add_option("data", data_path, "Numeric CSV with a label column")->required();
  add_common_flags(inc, inc_flags);
  inc->add_option("--model-out", model_out, "Save the first seed's trained model as JSON");

  auto* abl = app.add_subcommand("ablation", "Run the ablation grid (nonstationary)");
  abl->add_option("data", data_path, "Numeric CSV with a label column")->required();
  add_common_flags(abl, abl_flags, false);
  abl->add_option("--lambda-init", abl_flags.lambda_init,
                  "Run only this initial interval (default: the 2 and 500 grid)")
      ->each([&ablation_lambda_given](const std::string&) { ablation_lambda_given = true; })
      ->check(CLI::Range(static_cast<std::int64_t>(2), static_cast<std::int64_t>(1000000)));

  auto* pred = app.add_subcommand("predict", "Label query samples with a saved model");
  pred->add_option("model", model_path, "Model JSON written by fit/incremental")->required();
  pred->add_option("queries", queries_path, "CSV of query samples")->required();
  pred->add_flag("--no-header", predict_no_header, "Skip the first CSV row");
  pred->add_option("--label-column", predict_label_column,
                   "Drop this 0-based column before predicting (-1: last)");
  pred->add_option("--output", predict_output, "Write one label per line here");

  auto* met = app.add_subcommand("metrics", "ARI/AMI between two label files");
  met->add_option("labels_a", labels_a, "One integer label per line")->required();
  met->add_option("labels_b", labels_b, "One integer label per line")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (fit->parsed() || inc->parsed()) {
      const bool stationary = fit->parsed();
      const CommonFlags& flags = stationary ? fit_flags : inc_flags;
      const auto config = make_config(
          flags, stationary ? idat::Protocol::stationary : idat::Protocol::nonstationary);
      const auto dataset = idat::load_csv(data_path, !flags.no_header, flags.label_column);
      const auto report = stationary ? idat::run_stationary(dataset, config)
                                     : idat::run_nonstationary(dataset, config);
      print_summary(report);
      if (!flags.output.empty()) {
        idat::write_report(report, flags.output);
        std::cout << "report written to " << flags.output << "\n";
      }
      if (!model_out.empty()) {
        idat::Dataset prepared = dataset;
        if (config.normalize) {
          idat::minmax_normalize(prepared);
        }
        const auto artifacts = idat::run_seed(prepared, config, config.seeds.front());
        idat::save_model(artifacts.model, model_out);
        std::cout << "model (seed " << config.seeds.front() << ") written to " << model_out
                  << "\n";
      }
      return 0;
    }
    if (abl->parsed()) {
      const auto config = make_config(abl_flags, idat::Protocol::nonstationary);
      const auto dataset =
          idat::load_csv(data_path, !abl_flags.no_header, abl_flags.label_column);
      std::vector<std::int64_t> lambdas;
      if (ablation_lambda_given) {
        lambdas = {abl_flags.lambda_init};
      } else {
        lambdas = {2, 500};
      }
      const auto reports = idat::run_ablation_suite(dataset, config, lambdas);
      idat::json bundle;
      bundle["reports"] = idat::json::array();
      for (const auto& report : reports) {
        print_summary(report);
        bundle["reports"].push_back(idat::to_json(report));
      }
      if (!abl_flags.output.empty()) {
        std::ofstream out(abl_flags.output);
        if (!out) {
          throw std::runtime_error("cannot open " + abl_flags.output);
        }
        out << bundle.dump(2) << '\n';
        std::cout << reports.size() << " reports written to " << abl_flags.output << "\n";
      }
      return 0;
    }
    if (pred->parsed()) {
      const auto model = idat::load_model(model_path);
      std::vector<std::vector<double>> queries;
      if (predict_label_column == -2) {
        queries = idat::load_features_csv(queries_path, !predict_no_header);
      } else {
        const auto dataset =
            idat::load_csv(queries_path, !predict_no_header, predict_label_column);
        queries = dataset.features;
      }
      const auto node_labels = idat::assign_cluster_indices(model);
      std::ofstream file;
      std::ostream* out = &std::cout;
      if (!predict_output.empty()) {
        file.open(predict_output);
        if (!file) {
          throw std::runtime_error("cannot open " + predict_output);
        }
        out = &file;
      }
      for (const auto& query : queries) {
        (*out) << idat::predict(model, node_labels, query).label << '\n';
      }
      return 0;
    }
    if (met->parsed()) {
      const auto a = read_label_file(labels_a);
      const auto b = read_label_file(labels_b);
      std::cout << "ARI=" << idat::ari(a, b) << "\n";
      std::cout << "AMI=" << idat::ami(a, b) << "\n";
      return 0;
    }
  } catch (const std::exception& error) {
    std::cerr << "error: " << error.what() << "\n";
    return 1;
  }
  return 0;
}
