#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tedvae/checkpoint.hpp"
#include "tedvae/data.hpp"
#include "tedvae/estimation.hpp"
#include "tedvae/experiment.hpp"
#include "tedvae/metrics.hpp"

namespace {

using namespace tedvae;

// "synth.treated_fraction" -> "synth-treated-fraction"
std::string flag_name(const std::string& key) {
  std::string out = key;
  std::replace(out.begin(), out.end(), '.', '-');
  std::replace(out.begin(), out.end(), '_', '-');
  return out;
}

// "synth.treated_fraction" -> "synth_treated_fraction"
std::string dotless(const std::string& key) {
  std::string out = key;
  std::replace(out.begin(), out.end(), '.', '_');
  return out;
}

// Adds one string option per RunConfig key. Values are applied in key order
// after parsing, so file and command line go through the same setter.
struct RunFlags {
  // Lists so that "seeds = 1,2" in a config file arrives whole.
  std::map<std::string, std::vector<std::string>> values;

  void attach(CLI::App* app) {
    const RunConfig defaults;
    for (const auto& key : override_keys()) {
      std::string names = "--" + flag_name(key);
      if (const std::string raw = "--" + dotless(key); raw != names) names += "," + raw;
      app->add_option(names, values[key], "config key " + key)
          ->delimiter(',')
          ->default_str(config_value(defaults, key));
    }
  }

  RunConfig resolve() const {
    RunConfig cfg;
    for (const auto& key : override_keys()) {
      const auto it = values.find(key);
      if (it == values.end() || it->second.empty()) continue;
      std::string joined;
      for (const auto& v : it->second) joined += (joined.empty() ? "" : ",") + v;
      apply_override(cfg, key, joined);
    }
    return cfg;
  }
};

void print_reports(const BenchmarkResult& r) {
  for (const auto& rep : r.reports()) std::cout << rep.to_json_line() << '\n';
}

void print_summary(const std::string& label, const BenchmarkResult& r) {
  for (const auto& s : r.summary) {
    std::cerr << (label.empty() ? "" : label + " ") << s.split << ' ' << s.metric << " mean " << s.mean << " std "
              << s.stddev << " (n=" << s.count << ")\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Treatment-effect estimation with a disentangled variational autoencoder"};
  app.set_config("--config", "", "INI/TOML file supplying any flag; the command line overrides it");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);

  RunFlags run_flags;

  auto* generate = app.add_subcommand("generate", "Write a synthetic dataset");
  std::string generate_out;
  generate->add_option("-o,--output", generate_out, "Output CSV")->required();
  RunFlags synth_flags;
  synth_flags.attach(generate);

  auto* train_cmd = app.add_subcommand("train", "Train one model and write a checkpoint");
  std::string checkpoint_out;
  train_cmd->add_option("--checkpoint", checkpoint_out, "Checkpoint path")->required();
  RunFlags train_flags;
  train_flags.attach(train_cmd);

  auto* predict = app.add_subcommand("predict", "Predict potential outcomes and CATE");
  std::string predict_checkpoint, predict_data, predict_out;
  std::size_t predict_samples = kDefaultPosteriorSamples;
  std::uint64_t predict_seed = 0;
  predict->add_option("--checkpoint", predict_checkpoint)->required();
  predict->add_option("--data", predict_data, "Covariate file")->required();
  predict->add_option("-o,--output", predict_out, "Prediction CSV (id,y0_hat,y1_hat,tau_hat)")->required();
  predict->add_option("--samples", predict_samples)->capture_default_str();
  predict->add_option("--seed", predict_seed)->capture_default_str();

  auto* evaluate = app.add_subcommand("evaluate", "Score a prediction file against ground truth");
  std::string eval_predictions, eval_data, eval_split = "test";
  evaluate->add_option("--predictions", eval_predictions)->required();
  evaluate->add_option("--data", eval_data)->required();
  evaluate->add_option("--split", eval_split)->capture_default_str();

  auto* benchmark = app.add_subcommand("benchmark", "Train and evaluate over a seed list");
  run_flags.attach(benchmark);

  auto* ablate = app.add_subcommand("ablate", "Compare the model with one latent block zeroed");
  std::string ablate_block;
  ablate->add_option("--zero", ablate_block, "z_t, z_c or z_y")->required();
  RunFlags ablate_flags;
  ablate_flags.attach(ablate);

  auto* sweep = app.add_subcommand("sweep", "Cartesian sweep over config keys");
  std::vector<std::string> sweep_axes;
  sweep->add_option("--axis", sweep_axes, "key=v1,v2,... (repeatable)")->required();
  RunFlags sweep_flags;
  sweep_flags.attach(sweep);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*generate) {
      const RunConfig cfg = synth_flags.resolve();
      cfg.synth.validate();
      write_dataset(generate_synthetic(cfg.synth), generate_out);
      return 0;
    }
    if (*train_cmd) {
      RunConfig cfg = train_flags.resolve();
      cfg.validate();
      const std::uint64_t seed = cfg.seeds.front();
      const Dataset data = resolve_dataset(cfg, seed);
      const DataSplit split = split_dataset(data, cfg.splits, seed);
      TedvaeModel model(cfg.model, data.schema, seed);
      TrainConfig tc;
      tc.epochs = cfg.epochs;
      tc.batch_size = cfg.batch_size;
      tc.adam.learning_rate = cfg.learning_rate;
      tc.seed = seed;
      const TrainResult result = train(model, split.train, split.validation, tc);
      save_model(model, checkpoint_out);
      std::cout << "{\"checkpoint\":\"" << checkpoint_out << "\",\"best_epoch\":" << result.best_epoch.value_or(0)
                << ",\"config\":" << cfg.to_json(seed) << "}\n";
      return 0;
    }
    if (*predict) {
      const TedvaeModel model = load_model(std::filesystem::path(predict_checkpoint));
      const Dataset data = load_dataset(predict_data);
      write_predictions(predict_cate(model, data.x, predict_samples, predict_seed), predict_out);
      return 0;
    }
    if (*evaluate) {
      const EvalReport r = evaluate_predictions(read_predictions(eval_predictions), load_dataset(eval_data), eval_split);
      std::cout << r.to_json_line() << '\n';
      return 0;
    }
    if (*benchmark) {
      const BenchmarkResult r = run_benchmark(run_flags.resolve());
      print_reports(r);
      print_summary("", r);
      return r.all_ok() ? 0 : 1;
    }
    if (*ablate) {
      const AblationResult r = run_ablation(ablate_flags.resolve(), latent_block_from_string(ablate_block));
      print_reports(r.full);
      print_reports(r.ablated);
      print_summary("full", r.full);
      print_summary(std::string("zeroed_") + to_string(r.zeroed), r.ablated);
      return r.full.all_ok() && r.ablated.all_ok() ? 0 : 1;
    }
    if (*sweep) {
      std::vector<std::pair<std::string, std::vector<std::string>>> axes;
      for (const auto& a : sweep_axes) axes.push_back(parse_sweep_axis(a));
      bool ok = true;
      for (const RunConfig& cfg : expand_sweep(sweep_flags.resolve(), axes)) {
        const BenchmarkResult r = run_benchmark(cfg);
        print_reports(r);
        print_summary(cfg.label, r);
        ok = ok && r.all_ok();
      }
      return ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
