#include "tedvae/experiment.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "tedvae/checkpoint.hpp"
#include "tedvae/estimation.hpp"

namespace tedvae {

namespace {

using Json = nlohmann::ordered_json;

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw std::invalid_argument("bad value '" + text + "' for " + key);
  return value;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// key -> (setter, JSON getter). Keys are also the JSON field names.
struct Field {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<Json(const RunConfig&)> get;
};

#define TEDVAE_SIZE_FIELD(key, expr)                                                                 \
  {                                                                                                  \
    key, {                                                                                           \
      [](RunConfig& c, const std::string& v) { c.expr = parse_number<std::size_t>(key, v); },        \
          [](const RunConfig& c) { return Json(c.expr); }                                           \
    }                                                                                                \
  }
#define TEDVAE_DOUBLE_FIELD(key, expr)                                                               \
  {                                                                                                  \
    key, {                                                                                           \
      [](RunConfig& c, const std::string& v) { c.expr = parse_number<double>(key, v); },             \
          [](const RunConfig& c) { return Json(c.expr); }                                           \
    }                                                                                                \
  }

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"dataset", {[](RunConfig& c, const std::string& v) { c.dataset = v; }, [](const RunConfig& c) { return Json(c.dataset); }}},
      {"delimiter",
       {[](RunConfig& c, const std::string& v) {
          if (v.size() != 1) throw std::invalid_argument("delimiter must be one character");
          c.delimiter = v[0];
        },
        [](const RunConfig& c) { return Json(std::string(1, c.delimiter)); }}},
      TEDVAE_SIZE_FIELD("synth.dim_instrumental", synth.dim_instrumental),
      TEDVAE_SIZE_FIELD("synth.dim_confounding", synth.dim_confounding),
      TEDVAE_SIZE_FIELD("synth.dim_risk", synth.dim_risk),
      TEDVAE_SIZE_FIELD("synth.proxies_per_factor", synth.proxies_per_factor),
      TEDVAE_DOUBLE_FIELD("synth.proxy_noise", synth.proxy_noise),
      TEDVAE_DOUBLE_FIELD("synth.treated_fraction", synth.treated_fraction),
      TEDVAE_DOUBLE_FIELD("synth.treatment_strength", synth.treatment_strength),
      TEDVAE_DOUBLE_FIELD("synth.outcome_scale", synth.outcome_scale),
      TEDVAE_DOUBLE_FIELD("synth.effect_scale", synth.effect_scale),
      TEDVAE_DOUBLE_FIELD("synth.effect_heterogeneity", synth.effect_heterogeneity),
      TEDVAE_DOUBLE_FIELD("synth.noise_fraction", synth.noise_fraction),
      {"synth.link",
       {[](RunConfig& c, const std::string& v) { c.synth.link = outcome_link_from_string(v); },
        [](const RunConfig& c) { return Json(to_string(c.synth.link)); }}},
      TEDVAE_SIZE_FIELD("synth.n", synth.n),
      {"synth.seed",
       {[](RunConfig& c, const std::string& v) { c.synth.seed = parse_number<std::uint64_t>("synth.seed", v); },
        [](const RunConfig& c) { return Json(c.synth.seed); }}},
      TEDVAE_SIZE_FIELD("dim_zt", model.dims.instrumental),
      TEDVAE_SIZE_FIELD("dim_zc", model.dims.confounding),
      TEDVAE_SIZE_FIELD("dim_zy", model.dims.risk),
      TEDVAE_DOUBLE_FIELD("alpha_t", model.alpha_t),
      TEDVAE_DOUBLE_FIELD("alpha_y", model.alpha_y),
      TEDVAE_SIZE_FIELD("hidden_depth", model.hidden_depth),
      TEDVAE_SIZE_FIELD("hidden_width", model.hidden_width),
      TEDVAE_DOUBLE_FIELD("variance_floor", model.variance_floor),
      {"aux_heads",
       {[](RunConfig& c, const std::string& v) { c.model.aux_heads = aux_head_mode_from_string(v); },
        [](const RunConfig& c) { return Json(to_string(c.model.aux_heads)); }}},
      TEDVAE_SIZE_FIELD("epochs", epochs),
      TEDVAE_SIZE_FIELD("batch_size", batch_size),
      TEDVAE_DOUBLE_FIELD("learning_rate", learning_rate),
      TEDVAE_SIZE_FIELD("posterior_samples", posterior_samples),
      TEDVAE_DOUBLE_FIELD("split_train", splits.train),
      TEDVAE_DOUBLE_FIELD("split_validation", splits.validation),
      TEDVAE_DOUBLE_FIELD("split_test", splits.test),
      {"seeds",
       {[](RunConfig& c, const std::string& v) {
          c.seeds.clear();
          for (const auto& s : split_list(v)) c.seeds.push_back(parse_number<std::uint64_t>("seeds", s));
        },
        [](const RunConfig& c) { return Json(c.seeds); }}},
      {"output_dir",
       {[](RunConfig& c, const std::string& v) { c.output_dir = v; }, [](const RunConfig& c) { return Json(c.output_dir); }}},
      {"label", {[](RunConfig& c, const std::string& v) { c.label = v; }, [](const RunConfig& c) { return Json(c.label); }}},
  };
  return table;
}

#undef TEDVAE_SIZE_FIELD
#undef TEDVAE_DOUBLE_FIELD

const Field& field(const std::string& key) {
  for (const auto& [k, f] : fields()) {
    if (k == key) return f;
  }
  throw std::invalid_argument("unknown config key '" + key + "'");
}

std::string substitute_seed(std::string path, std::uint64_t seed) {
  const std::string token = "{seed}";
  for (auto pos = path.find(token); pos != std::string::npos; pos = path.find(token, pos)) {
    path.replace(pos, token.size(), std::to_string(seed));
  }
  return path;
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double e : v) s += e;
  return s / static_cast<double>(v.size());
}

void write_loss_trace(const TrainResult& r, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  out << "epoch,split,recon_x,kl_t,kl_c,kl_y,aux_t,aux_y,total\n";
  for (const auto& e : r.trace) {
    for (const auto& [name, b] : {std::pair{"train", &e.train}, std::pair{"validation", &e.validation}}) {
      out << e.epoch << ',' << name << ',' << b->recon_x << ',' << b->kl_t << ',' << b->kl_c << ',' << b->kl_y << ','
          << b->aux_t << ',' << b->aux_y << ',' << b->total << '\n';
    }
  }
}

SeedOutcome run_seed(const RunConfig& cfg, std::uint64_t seed) {
  SeedOutcome out;
  out.seed = seed;
  const std::string config_json = cfg.to_json(seed);
  const std::string hash = fnv1a_hex(config_json);

  const Dataset data = resolve_dataset(cfg, seed);
  const DataSplit split = split_dataset(data, cfg.splits, seed);
  if (split.train.size() == 0 || split.validation.size() == 0 || split.test.size() == 0) {
    throw std::invalid_argument("split of " + std::to_string(data.size()) + " rows leaves an empty partition");
  }

  TedvaeModel model(cfg.model, data.schema, seed);
  TrainConfig tc;
  tc.epochs = cfg.epochs;
  tc.batch_size = cfg.batch_size;
  tc.adam.learning_rate = cfg.learning_rate;
  tc.seed = seed;
  out.training = train(model, split.train, split.validation, tc);

  std::filesystem::path dir;
  if (!cfg.output_dir.empty()) {
    dir = std::filesystem::path(cfg.output_dir) / ("seed_" + std::to_string(seed));
    std::filesystem::create_directories(dir);
    save_model(model, dir / "checkpoint.json");
    write_loss_trace(out.training, dir / "loss_trace.csv");
  }

  for (const auto& [name, part] : {std::pair<std::string, const Dataset*>{"train", &split.train},
                                   std::pair<std::string, const Dataset*>{"test", &split.test}}) {
    const CatePrediction p = predict_cate(model, part->x, cfg.posterior_samples, seed);
    EvalReport r = evaluate_predictions(p, *part, name);
    r.seed = seed;
    r.label = cfg.label;
    r.config_hash = hash;
    r.config_json = config_json;
    out.reports.push_back(std::move(r));
    if (!dir.empty()) write_predictions(p, dir / ("predictions_" + name + ".csv"));
  }
  out.ok = true;
  return out;
}

}  // namespace

void RunConfig::validate() const {
  if (model.dims.total() == 0) throw std::invalid_argument("all latent dimensions are zero");
  if (epochs == 0) throw std::invalid_argument("epochs must be positive");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (posterior_samples == 0) throw std::invalid_argument("posterior_samples must be at least 1");
  if (!(model.alpha_t >= 0.0) || !(model.alpha_y >= 0.0)) throw std::invalid_argument("alpha weights must be >= 0");
  if (!(splits.train > 0.0) || !(splits.validation > 0.0) || !(splits.test > 0.0) ||
      std::abs(splits.train + splits.validation + splits.test - 1.0) > 1e-9) {
    throw std::invalid_argument("split fractions must be positive and sum to 1");
  }
  if (seeds.empty()) throw std::invalid_argument("no seeds given");
  if (dataset.empty()) synth.validate();
}

std::string RunConfig::to_json(std::optional<std::uint64_t> seed) const {
  Json j = Json::object();
  for (const auto& [key, f] : fields()) {
    if (key == "output_dir" || key == "label") continue;
    if (key == "seeds" && seed) {
      j["seed"] = *seed;
      continue;
    }
    j[key] = f.get(*this);
  }
  return j.dump();
}

RunConfig RunConfig::from_json(const std::string& text) {
  const Json j = Json::parse(text);
  if (!j.is_object()) throw std::invalid_argument("config JSON must be an object");
  RunConfig cfg;
  for (const auto& [key, value] : j.items()) {
    if (key == "seed") {
      cfg.seeds = {value.get<std::uint64_t>()};
    } else if (key == "seeds" && value.is_array()) {
      cfg.seeds = value.get<std::vector<std::uint64_t>>();
    } else {
      apply_override(cfg, key, value.is_string() ? value.get<std::string>() : value.dump());
    }
  }
  return cfg;
}

void apply_override(RunConfig& cfg, const std::string& key, const std::string& value) { field(key).set(cfg, value); }

void apply_override(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw std::invalid_argument("expected key=value, got '" + assignment + "'");
  apply_override(cfg, assignment.substr(0, eq), assignment.substr(eq + 1));
}

std::vector<std::string> override_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, f] : fields()) keys.push_back(k);
  return keys;
}

std::string config_value(const RunConfig& cfg, const std::string& key) {
  const Json v = field(key).get(cfg);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string out;
    for (const auto& e : v) out += (out.empty() ? "" : ",") + e.dump();
    return out;
  }
  return v.dump();
}

bool BenchmarkResult::all_ok() const {
  for (const auto& s : seeds) {
    if (!s.ok) return false;
  }
  return !seeds.empty();
}

std::vector<EvalReport> BenchmarkResult::reports() const {
  std::vector<EvalReport> out;
  for (const auto& s : seeds) out.insert(out.end(), s.reports.begin(), s.reports.end());
  return out;
}

const MetricSummary* BenchmarkResult::find(const std::string& split, const std::string& metric) const {
  for (const auto& s : summary) {
    if (s.split == split && s.metric == metric) return &s;
  }
  return nullptr;
}

Dataset resolve_dataset(const RunConfig& cfg, std::uint64_t seed) {
  if (!cfg.dataset.empty()) {
    SchemaSpec spec;
    spec.delimiter = cfg.delimiter;
    return load_dataset(substitute_seed(cfg.dataset, seed), spec);
  }
  SynthConfig s = cfg.synth;
  s.seed = mix_seed(cfg.synth.seed, seed);
  return generate_synthetic(s);
}

EvalReport evaluate_predictions(const CatePrediction& p, const Dataset& d, const std::string& split) {
  if (p.size() != d.size()) {
    throw std::invalid_argument("prediction has " + std::to_string(p.size()) + " rows, dataset has " +
                                std::to_string(d.size()));
  }
  EvalReport r;
  r.split = split;
  r.n = d.size();
  const double ate_hat = average_effect(p);
  r.ate_estimate = ate_hat;
  if (d.has_cate_truth()) {
    const auto tau = d.true_cate();
    r.pehe = pehe(p.tau, tau);
    r.ate_error = std::abs(ate_hat - mean_of(tau));
    r.ate_reference = "ground_truth";
  } else {
    r.ate_error = ate_error(ate_hat, d);
    r.ate_reference = "rct_contrast";
  }
  return r;
}

std::vector<MetricSummary> summarize(const std::vector<EvalReport>& reports) {
  std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
  std::vector<std::pair<std::string, std::string>> order;
  auto add = [&](const std::string& split, const std::string& metric, double v) {
    const auto key = std::pair{split, metric};
    if (!groups.contains(key)) order.push_back(key);
    groups[key].push_back(v);
  };
  for (const auto& r : reports) {
    if (r.pehe) add(r.split, "pehe", *r.pehe);
    if (r.ate_error) add(r.split, "ate_error", *r.ate_error);
  }
  std::vector<MetricSummary> out;
  for (const auto& key : order) {
    const auto& v = groups[key];
    MetricSummary s{key.first, key.second, v.size(), mean_of(v), 0.0};
    if (v.size() > 1) {
      double ss = 0.0;
      for (double e : v) ss += (e - s.mean) * (e - s.mean);
      s.stddev = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    out.push_back(s);
  }
  return out;
}

void write_summary(const std::vector<MetricSummary>& s, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  out << "split,metric,count,mean,std\n";
  for (const auto& m : s) out << m.split << ',' << m.metric << ',' << m.count << ',' << m.mean << ',' << m.stddev << '\n';
}

BenchmarkResult run_benchmark(const RunConfig& cfg) {
  cfg.validate();
  BenchmarkResult result;
  result.config_json = cfg.to_json();
  for (std::uint64_t seed : cfg.seeds) {
    try {
      result.seeds.push_back(run_seed(cfg, seed));
    } catch (const std::exception& e) {
      SeedOutcome failed;
      failed.seed = seed;
      failed.error = e.what();
      std::cerr << "seed " << seed << " failed: " << e.what() << '\n';
      result.seeds.push_back(std::move(failed));
    }
  }
  const auto reports = result.reports();
  result.summary = summarize(reports);
  if (!cfg.output_dir.empty()) {
    std::filesystem::create_directories(cfg.output_dir);
    std::ofstream out(std::filesystem::path(cfg.output_dir) / "reports.jsonl");
    for (const auto& r : reports) out << r.to_json_line() << '\n';
    write_summary(result.summary, std::filesystem::path(cfg.output_dir) / "summary.csv");
  }
  return result;
}

AblationResult run_ablation(const RunConfig& cfg, LatentBlock zeroed) {
  auto dim_of = [](ModelConfig& m, LatentBlock b) -> std::size_t& {
    switch (b) {
      case LatentBlock::instrumental: return m.dims.instrumental;
      case LatentBlock::confounding: return m.dims.confounding;
      case LatentBlock::risk: return m.dims.risk;
    }
    throw std::logic_error("unknown latent block");
  };
  RunConfig full = cfg;
  if (dim_of(full.model, zeroed) == 0) {
    throw std::invalid_argument(std::string("cannot ablate ") + to_string(zeroed) + ": its dimension is already 0");
  }
  RunConfig ablated = cfg;
  dim_of(ablated.model, zeroed) = 0;
  const std::string prefix = cfg.label.empty() ? "" : cfg.label + "/";
  full.label = prefix + "full";
  ablated.label = prefix + "zeroed_" + to_string(zeroed);
  if (!cfg.output_dir.empty()) {
    full.output_dir = (std::filesystem::path(cfg.output_dir) / "full").string();
    ablated.output_dir = (std::filesystem::path(cfg.output_dir) / ("zeroed_" + std::string(to_string(zeroed)))).string();
  }
  return {zeroed, run_benchmark(full), run_benchmark(ablated)};
}

std::pair<std::string, std::vector<std::string>> parse_sweep_axis(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw std::invalid_argument("sweep axis must be key=v1,v2,...: '" + text + "'");
  auto values = split_list(text.substr(eq + 1));
  if (values.empty()) throw std::invalid_argument("sweep axis '" + text.substr(0, eq) + "' has no values");
  return {text.substr(0, eq), std::move(values)};
}

std::vector<RunConfig> expand_sweep(const RunConfig& base,
                                    const std::vector<std::pair<std::string, std::vector<std::string>>>& axes) {
  std::vector<RunConfig> out{base};
  std::vector<std::string> labels{""};
  for (const auto& [key, values] : axes) {
    if (key == "seeds") throw std::invalid_argument("seeds is not a sweep axis; every run uses the full seed list");
    field(key);
    std::vector<RunConfig> next;
    std::vector<std::string> next_labels;
    for (std::size_t i = 0; i < out.size(); ++i) {
      for (const auto& v : values) {
        RunConfig c = out[i];
        apply_override(c, key, v);
        next.push_back(std::move(c));
        next_labels.push_back(labels[i] + (labels[i].empty() ? "" : ",") + key + "=" + v);
      }
    }
    out = std::move(next);
    labels = std::move(next_labels);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (labels[i].empty()) continue;
    out[i].label = base.label.empty() ? labels[i] : base.label + "/" + labels[i];
    if (!base.output_dir.empty()) out[i].output_dir = (std::filesystem::path(base.output_dir) / labels[i]).string();
  }
  return out;
}

}  // namespace tedvae
