#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tedvae/data.hpp"
#include "tedvae/estimation.hpp"
#include "tedvae/metrics.hpp"
#include "tedvae/model.hpp"
#include "tedvae/train.hpp"

namespace tedvae {

struct RunConfig {
  // Data source: a delimited file when `dataset` is set, the generator
  // otherwise. A "{seed}" token in the path is replaced by the run seed, so
  // one file per replication can be addressed. Generated data is redrawn per
  // seed with synth.seed mixed with the run seed.
  std::string dataset;
  char delimiter = ',';
  SynthConfig synth;

  ModelConfig model;
  std::size_t epochs = 400;
  std::size_t batch_size = 128;
  double learning_rate = 1e-3;
  std::size_t posterior_samples = 100;
  SplitFractions splits;
  std::vector<std::uint64_t> seeds{0};
  std::string output_dir;  // empty: no artifacts
  std::string label;

  void validate() const;

  // Resolved configuration as a JSON object string. With `seed`, the
  // single-run form (seeds replaced by that seed) embedded in each report.
  std::string to_json(std::optional<std::uint64_t> seed = std::nullopt) const;
  static RunConfig from_json(const std::string& text);
};

// Sets one field by key (e.g. "dim_zc", "synth.treated_fraction", "seeds").
// Throws std::invalid_argument naming the key on an unknown key or bad value.
void apply_override(RunConfig& cfg, const std::string& key, const std::string& value);
// "key=value" form.
void apply_override(RunConfig& cfg, const std::string& assignment);
std::vector<std::string> override_keys();
// Current value of a key in the form apply_override accepts.
std::string config_value(const RunConfig& cfg, const std::string& key);

struct SeedOutcome {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::vector<EvalReport> reports;  // train then test when ok
  TrainResult training;
};

struct MetricSummary {
  std::string split;
  std::string metric;  // "pehe" or "ate_error"
  std::size_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 for a single value
};

struct BenchmarkResult {
  std::string config_json;
  std::vector<SeedOutcome> seeds;
  std::vector<MetricSummary> summary;

  bool all_ok() const;
  std::vector<EvalReport> reports() const;
  // nullptr if the metric was not computed.
  const MetricSummary* find(const std::string& split, const std::string& metric) const;
};

// Data for one seed: the file (with "{seed}" substituted) or a fresh draw
// from the generator.
Dataset resolve_dataset(const RunConfig& cfg, std::uint64_t seed);

// pehe against the ground-truth CATE when present; ate_error against the
// mean true CATE when present, otherwise against rct_contrast(d).
EvalReport evaluate_predictions(const CatePrediction& p, const Dataset& d, const std::string& split);

std::vector<MetricSummary> summarize(const std::vector<EvalReport>& reports);

// Per seed: split, train, predict on train and test, report. A failing seed
// is recorded with its diagnostic and the remaining seeds still run. With an
// output directory, writes per-seed checkpoint, predictions and loss trace,
// plus reports.jsonl and summary.csv.
BenchmarkResult run_benchmark(const RunConfig& cfg);

struct AblationResult {
  LatentBlock zeroed;
  BenchmarkResult full;
  BenchmarkResult ablated;
};

// The configured model and the same model with one latent block set to
// dimension 0, on identical data and seeds.
AblationResult run_ablation(const RunConfig& cfg, LatentBlock zeroed);

// Cartesian product of value lists, applied as overrides in the given key
// order. Each expanded config's label lists its assignments.
std::vector<RunConfig> expand_sweep(const RunConfig& base,
                                    const std::vector<std::pair<std::string, std::vector<std::string>>>& axes);

// Parses "key=v1,v2,..." into an axis.
std::pair<std::string, std::vector<std::string>> parse_sweep_axis(const std::string& text);

void write_summary(const std::vector<MetricSummary>& s, const std::filesystem::path& path);

}  // namespace tedvae
