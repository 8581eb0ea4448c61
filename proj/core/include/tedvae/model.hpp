#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tedvae/autodiff/ops.hpp"
#include "tedvae/distributions.hpp"
#include "tedvae/random.hpp"
#include "tedvae/schema.hpp"

namespace tedvae {

// Latent block sizes: instrumental (affects t only), confounding (t and y),
// risk (y only). Any block may be zero, but not all three.
struct LatentDims {
  std::size_t instrumental = 15;
  std::size_t confounding = 15;
  std::size_t risk = 5;

  std::size_t total() const { return instrumental + confounding + risk; }
  friend bool operator==(const LatentDims&, const LatentDims&) = default;
};

enum class LatentBlock { instrumental, confounding, risk };

const char* to_string(LatentBlock block);
LatentBlock latent_block_from_string(const std::string& name);

// `aliased`: the auxiliary classifiers are the generative heads themselves
// (q_omega_t is f1, q_omega_y is f2..f5). `separate`: they are distinct
// networks and f1..f5 receive no gradient from the objective.
enum class AuxHeadMode { aliased, separate };

const char* to_string(AuxHeadMode mode);
AuxHeadMode aux_head_mode_from_string(const std::string& name);

struct ModelConfig {
  LatentDims dims;
  std::size_t hidden_depth = 5;
  std::size_t hidden_width = 100;
  double variance_floor = 1e-6;
  double alpha_t = 100.0;
  double alpha_y = 100.0;
  AuxHeadMode aux_heads = AuxHeadMode::aliased;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Fully connected network: `depth` ELU hidden layers of `width` units and an
// identity output layer. depth == 0 is a single affine map.
class Mlp {
 public:
  Mlp() = default;
  // Kaiming-uniform weights (bound sqrt(6 / fan_in)), zero biases.
  Mlp(const std::string& name, std::size_t in_dim, std::size_t out_dim, std::size_t depth, std::size_t width,
      Rng& rng);

  std::size_t in_dim() const { return in_dim_; }
  std::size_t out_dim() const { return out_dim_; }
  std::size_t layer_count() const { return weights_.size(); }

  ad::Tensor forward(const ad::Tensor& x, ad::Graph* graph = nullptr) const;

  ad::Parameter& weight(std::size_t layer) { return weights_.at(layer); }
  ad::Parameter& bias(std::size_t layer) { return biases_.at(layer); }
  const ad::Parameter& weight(std::size_t layer) const { return weights_.at(layer); }
  const ad::Parameter& bias(std::size_t layer) const { return biases_.at(layer); }

  void append_parameters(ad::ParameterList& out);
  void append_parameters(std::vector<const ad::Parameter*>& out) const;

 private:
  std::size_t in_dim_ = 0;
  std::size_t out_dim_ = 0;
  std::vector<ad::Parameter> weights_;
  std::vector<ad::Parameter> biases_;
};

// Per-arm outcome networks; the variance heads exist only for a continuous
// outcome.
struct OutcomeHeads {
  Mlp treated_mean;
  Mlp control_mean;
  std::optional<Mlp> treated_variance;
  std::optional<Mlp> control_variance;

  void append_parameters(ad::ParameterList& out);
  void append_parameters(std::vector<const ad::Parameter*>& out) const;
};

// Standardization fitted on the training split. Binary columns keep
// mean 0 / scale 1.
struct Preprocessing {
  std::vector<double> x_mean;
  std::vector<double> x_scale;
  double y_mean = 0.0;
  double y_scale = 1.0;

  friend bool operator==(const Preprocessing&, const Preprocessing&) = default;
};

enum class ParameterGroup {
  encoder_instrumental,
  encoder_confounding,
  encoder_risk,
  decoder,
  treatment_head,       // f1
  outcome_heads,        // f2..f5
  treatment_classifier, // omega_t
  outcome_classifier,   // omega_y
};

class TedvaeModel {
 public:
  TedvaeModel(ModelConfig config, ColumnSchema schema, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const ColumnSchema& schema() const { return schema_; }
  const Preprocessing& preprocessing() const { return preprocessing_; }
  void set_preprocessing(Preprocessing p);

  // nullptr when the block has dimension 0.
  const Mlp* encoder(LatentBlock block) const;
  Mlp* encoder(LatentBlock block);
  const Mlp& decoder() const { return decoder_; }
  Mlp& decoder() { return decoder_; }
  const Mlp& treatment_head() const { return treatment_head_; }
  Mlp& treatment_head() { return treatment_head_; }
  const OutcomeHeads& outcome_heads() const { return outcome_heads_; }
  OutcomeHeads& outcome_heads() { return outcome_heads_; }

  // The networks scored by the auxiliary terms; aliases of f1 / f2..f5 in
  // aliased mode.
  const Mlp& treatment_classifier() const;
  Mlp& treatment_classifier();
  const OutcomeHeads& outcome_classifier() const;
  OutcomeHeads& outcome_classifier();

  // Distinct trainable parameters in a fixed order.
  ad::ParameterList parameters();
  std::vector<const ad::Parameter*> parameters() const;
  ad::ParameterList parameters(ParameterGroup group);

 private:
  ModelConfig config_;
  ColumnSchema schema_;
  Preprocessing preprocessing_;
  std::optional<Mlp> encoder_t_;
  std::optional<Mlp> encoder_c_;
  std::optional<Mlp> encoder_y_;
  Mlp decoder_;
  Mlp treatment_head_;
  OutcomeHeads outcome_heads_;
  std::optional<Mlp> aux_t_;
  std::optional<OutcomeHeads> aux_y_;
};

struct Posterior {
  dist::DiagGaussian instrumental;
  dist::DiagGaussian confounding;
  dist::DiagGaussian risk;

  const dist::DiagGaussian& block(LatentBlock b) const;
};

// q(z_t|x), q(z_c|x), q(z_y|x) from model-space covariates (batch x d).
// Variances are softplus(pre-activation) + variance_floor.
Posterior encode(const TedvaeModel& m, const ad::Tensor& x, ad::Graph* graph = nullptr);

// A single block of the posterior; the (batch x 0) empty Gaussian when the
// block has dimension 0.
dist::DiagGaussian encode_block(const TedvaeModel& m, LatentBlock block, const ad::Tensor& x,
                                ad::Graph* graph = nullptr);

struct DecodedCovariates {
  dist::DiagGaussian continuous;  // columns in schema order of continuous covariates
  dist::BernoulliHead binary;     // columns in schema order of binary covariates
};

DecodedCovariates decode_x(const TedvaeModel& m, const ad::Tensor& z_t, const ad::Tensor& z_c,
                           const ad::Tensor& z_y, ad::Graph* graph = nullptr);

// Per-sample log p(x | z): Gaussian terms of continuous columns plus Bernoulli
// terms of binary columns.
ad::Tensor reconstruction_log_prob(const TedvaeModel& m, const DecodedCovariates& decoded, const ad::Tensor& x);

// Outcome distribution parameters, (batch x 1) each. For a continuous outcome
// `location` is the mean and `variance` is set; for a binary outcome
// `location` holds logits.
struct OutcomeParams {
  ad::Tensor location;
  std::optional<ad::Tensor> variance;
};

// Arm-switched outcome parameters t * treated + (1 - t) * control.
OutcomeParams outcome_params(const TedvaeModel& m, const OutcomeHeads& heads, const ad::Tensor& t,
                             const ad::Tensor& z_c, const ad::Tensor& z_y, ad::Graph* graph = nullptr);

// Same, with the model's generative heads f2..f5.
OutcomeParams outcome_params(const TedvaeModel& m, const ad::Tensor& t, const ad::Tensor& z_c, const ad::Tensor& z_y,
                             ad::Graph* graph = nullptr);

// Expected outcome in model space for a forced arm: the mean for a continuous
// outcome, P(y = 1) for a binary one. Evaluated with the outcome classifier.
std::vector<double> expected_outcome(const TedvaeModel& m, int arm, const ad::Tensor& z_c, const ad::Tensor& z_y);

void require_binary(const char* what, const ad::Tensor& t);

}  // namespace tedvae
