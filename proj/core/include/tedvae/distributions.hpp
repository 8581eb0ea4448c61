#pragma once

#include "tedvae/autodiff/ops.hpp"

// Diagonal Gaussian and Bernoulli building blocks. Every per-sample quantity
// is returned as a length-batch vector summed over the event dimensions.
namespace tedvae::dist {

inline constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

// Batch of independent diagonal Gaussians; mean and variance are (batch x D).
// D may be zero, in which case every per-sample reduction is exactly 0.
struct DiagGaussian {
  ad::Tensor mean;
  ad::Tensor variance;

  std::size_t batch() const { return mean.dim(0); }
  std::size_t dim() const { return mean.dim(1); }
};

// Bernoulli variables parameterized by logits, (batch x k).
struct BernoulliHead {
  ad::Tensor logits;
};

// mean + sqrt(variance) * noise.
ad::Tensor rsample(const DiagGaussian& d, const ad::Tensor& noise);

// log N(x; mean, variance) summed over columns. Throws std::domain_error on a
// nonpositive variance.
ad::Tensor gaussian_log_prob(const DiagGaussian& d, const ad::Tensor& x);

// t * log sigmoid(z) + (1 - t) * log(1 - sigmoid(z)) summed over columns,
// evaluated as t * z - softplus(z). Throws std::invalid_argument when t is
// not in {0, 1}.
ad::Tensor bernoulli_log_prob(const BernoulliHead& h, const ad::Tensor& t);

// KL(N(mean, variance) || N(0, I)) in closed form.
ad::Tensor kl_to_standard_normal(const DiagGaussian& d);

}  // namespace tedvae::dist
