#include "tedvae/loss.hpp"

#include <cmath>

namespace tedvae {

namespace {
ad::Tensor standard_normal(std::size_t rows, std::size_t cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(rows * cols);
  for (double& x : v) x = normal(rng);
  return ad::Tensor({rows, cols}, std::move(v));
}
}  // namespace

LatentNoise LatentNoise::sample(std::size_t batch, const LatentDims& dims, Rng& rng) {
  LatentNoise n;
  n.instrumental = standard_normal(batch, dims.instrumental, rng);
  n.confounding = standard_normal(batch, dims.confounding, rng);
  n.risk = standard_normal(batch, dims.risk, rng);
  return n;
}

LatentNoise LatentNoise::zeros(std::size_t batch, const LatentDims& dims) {
  return {ad::Tensor::zeros({batch, dims.instrumental}), ad::Tensor::zeros({batch, dims.confounding}),
          ad::Tensor::zeros({batch, dims.risk})};
}

LossEvaluation tedvae_loss(const TedvaeModel& m, const Batch& batch, const LossWeights& weights,
                           const LatentNoise& noise, ad::Graph* graph) {
  if (batch.size() == 0) throw std::invalid_argument("tedvae_loss: empty batch");
  const Posterior q = encode(m, batch.x, graph);
  const ad::Tensor z_t = dist::rsample(q.instrumental, noise.instrumental);
  const ad::Tensor z_c = dist::rsample(q.confounding, noise.confounding);
  const ad::Tensor z_y = dist::rsample(q.risk, noise.risk);

  const ad::Tensor recon = ad::mean(reconstruction_log_prob(m, decode_x(m, z_t, z_c, z_y, graph), batch.x));
  const ad::Tensor kl_t = ad::mean(dist::kl_to_standard_normal(q.instrumental));
  const ad::Tensor kl_c = ad::mean(dist::kl_to_standard_normal(q.confounding));
  const ad::Tensor kl_y = ad::mean(dist::kl_to_standard_normal(q.risk));

  const ad::Tensor tc[] = {z_t, z_c};
  const ad::Tensor t_logits = m.treatment_classifier().forward(ad::concat_cols(tc), graph);
  const ad::Tensor aux_t = ad::mean(dist::bernoulli_log_prob({t_logits}, batch.t));

  const OutcomeParams y_params = outcome_params(m, m.outcome_classifier(), batch.t, z_c, z_y, graph);
  const ad::Tensor aux_y =
      ad::mean(y_params.variance ? dist::gaussian_log_prob({y_params.location, *y_params.variance}, batch.y)
                                 : dist::bernoulli_log_prob({y_params.location}, batch.y));

  const ad::Tensor elbo = ad::sub(ad::sub(ad::sub(recon, kl_t), kl_c), kl_y);
  const ad::Tensor objective =
      ad::add(ad::add(elbo, ad::scale(aux_t, weights.alpha_t)), ad::scale(aux_y, weights.alpha_y));

  LossEvaluation out;
  out.breakdown = {recon.item(), kl_t.item(), kl_c.item(), kl_y.item(), aux_t.item(), aux_y.item(), objective.item()};
  out.objective = objective;
  return out;
}

const char* first_nonfinite_term(const LossBreakdown& b) {
  if (!std::isfinite(b.recon_x)) return "recon_x";
  if (!std::isfinite(b.kl_t)) return "kl_t";
  if (!std::isfinite(b.kl_c)) return "kl_c";
  if (!std::isfinite(b.kl_y)) return "kl_y";
  if (!std::isfinite(b.aux_t)) return "aux_t";
  if (!std::isfinite(b.aux_y)) return "aux_y";
  if (!std::isfinite(b.total)) return "total";
  return nullptr;
}

}  // namespace tedvae
