#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tedvae/matrix.hpp"
#include "tedvae/random.hpp"
#include "tedvae/schema.hpp"

namespace tedvae {

// Observational data with optional counterfactual ground truth. When y0/y1
// are present, y == (1 - t) * y0 + t * y1 row by row.
struct Dataset {
  Matrix x;
  std::vector<double> t;
  std::vector<double> y;
  std::optional<std::vector<double>> y0;
  std::optional<std::vector<double>> y1;
  std::optional<std::vector<double>> mu0;
  std::optional<std::vector<double>> mu1;
  // True P(t = 1 | z); set by the generator only and never written to disk.
  std::optional<std::vector<double>> propensity;
  std::vector<std::string> covariate_names;
  ColumnSchema schema;
  std::string provenance;
  std::vector<std::string> dropped_columns;

  std::size_t size() const { return t.size(); }
  std::size_t covariate_count() const { return x.cols(); }

  bool has_cate_truth() const { return (mu0 && mu1) || (y0 && y1); }
  // mu1 - mu0 when available, otherwise y1 - y0.
  std::vector<double> true_cate() const;

  Dataset subset(std::span<const std::size_t> rows) const;

  // Throws std::invalid_argument describing the first violated invariant.
  void validate() const;
};

// Column-role overrides for load_dataset. Reserved names t, y, y0, y1, mu0,
// mu1 are never covariates.
struct SchemaSpec {
  char delimiter = ',';
  std::map<std::string, ColumnKind> column_kinds;
  std::optional<ColumnKind> outcome_kind;
  std::vector<std::string> ignore_columns;
  bool drop_constant_columns = true;
};

// Reads a delimited file with a header row. Covariates with at most two
// distinct values are binary unless overridden; binary columns must hold
// only 0 and 1. Errors name the offending data row (1-based, header
// excluded).
Dataset load_dataset(const std::filesystem::path& path, const SchemaSpec& spec = {});
Dataset parse_dataset(std::istream& in, const SchemaSpec& spec = {}, std::string provenance = "stream");

// Writes the same format load_dataset reads, with round-trip precision.
void write_dataset(const Dataset& d, const std::filesystem::path& path, char delimiter = ',');
void write_dataset(const Dataset& d, std::ostream& out, char delimiter = ',');

struct SplitFractions {
  double train = 0.6;
  double validation = 0.3;
  double test = 0.1;
};

struct DataSplit {
  Dataset train;
  Dataset validation;
  Dataset test;
  std::array<std::vector<std::size_t>, 3> indices;
};

// Uniformly random partition; sizes are the rounded fractions with the
// remainder going to the test split.
DataSplit split_dataset(const Dataset& d, const SplitFractions& fractions, std::uint64_t seed);
std::array<std::vector<std::size_t>, 3> split_indices(std::size_t n, const SplitFractions& fractions,
                                                      std::uint64_t seed);

enum class OutcomeLink { linear, nonlinear };

const char* to_string(OutcomeLink link);
OutcomeLink outcome_link_from_string(const std::string& name);

struct SynthConfig {
  std::size_t dim_instrumental = 5;
  std::size_t dim_confounding = 5;
  std::size_t dim_risk = 5;
  std::size_t proxies_per_factor = 2;  // proxy columns per latent dimension
  double proxy_noise = 0.5;            // std of additive proxy noise
  double treated_fraction = 0.5;
  double treatment_strength = 1.5;     // norm of the propensity weight vector
  double outcome_scale = 1.0;          // s_y
  double effect_scale = 1.0;           // s_tau
  double effect_heterogeneity = 1.0;   // 0 gives a constant effect s_tau
  double noise_fraction = 0.1;         // outcome noise std as a fraction of s_y
  OutcomeLink link = OutcomeLink::linear;
  std::size_t n = 3000;
  std::uint64_t seed = 1;

  void validate() const;
};

// Samples latent factors, proxies, propensity-driven treatment, and
// potential outcomes. The result carries y0, y1, mu0, mu1.
Dataset generate_synthetic(const SynthConfig& cfg);

// Drops treated rows with probability strength * sigmoid(v . x).
Dataset biased_subsample(const Dataset& d, std::span<const double> direction, double strength, std::uint64_t seed);

}  // namespace tedvae
