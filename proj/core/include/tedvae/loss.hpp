#pragma once

#include "tedvae/model.hpp"

namespace tedvae {

// A minibatch in model space (covariates and outcome already standardized).
// x is (batch x d); t and y are (batch x 1).
struct Batch {
  ad::Tensor x;
  ad::Tensor t;
  ad::Tensor y;

  std::size_t size() const { return x.dim(0); }
};

// Standard-normal draws for the reparameterized latent samples.
struct LatentNoise {
  ad::Tensor instrumental;
  ad::Tensor confounding;
  ad::Tensor risk;

  static LatentNoise sample(std::size_t batch, const LatentDims& dims, Rng& rng);
  static LatentNoise zeros(std::size_t batch, const LatentDims& dims);
};

struct LossWeights {
  double alpha_t = 100.0;
  double alpha_y = 100.0;

  static LossWeights from(const ModelConfig& cfg) { return {cfg.alpha_t, cfg.alpha_y}; }
};

// Batch means of each objective term. The objective is maximized:
//   total = recon_x - kl_t - kl_c - kl_y + alpha_t * aux_t + alpha_y * aux_y
struct LossBreakdown {
  double recon_x = 0.0;
  double kl_t = 0.0;
  double kl_c = 0.0;
  double kl_y = 0.0;
  double aux_t = 0.0;
  double aux_y = 0.0;
  double total = 0.0;

  friend bool operator==(const LossBreakdown&, const LossBreakdown&) = default;
};

struct LossEvaluation {
  LossBreakdown breakdown;
  ad::Tensor objective;  // scalar `total`, tracked when a graph was supplied
};

// One reparameterized sample per datum drawn from `noise`; KL terms in closed
// form; auxiliary terms scored with the treatment and outcome classifiers.
LossEvaluation tedvae_loss(const TedvaeModel& m, const Batch& batch, const LossWeights& weights,
                           const LatentNoise& noise, ad::Graph* graph = nullptr);

// Name of the first non-finite term of `b`, or nullptr if all are finite.
const char* first_nonfinite_term(const LossBreakdown& b);

}  // namespace tedvae
