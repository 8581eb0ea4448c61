#include "tedvae/distributions.hpp"

#include <stdexcept>
#include <string>

namespace tedvae::dist {

namespace {

void require_congruent(const char* op, const ad::Tensor& a, const ad::Tensor& b) {
  if (a.rank() != 2 || a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(op) + ": shapes " + ad::to_string(a.shape()) + " and " +
                                ad::to_string(b.shape()) + " are not congruent");
  }
}

void require_positive_variance(const char* op, const DiagGaussian& d) {
  require_congruent(op, d.mean, d.variance);
  const auto v = d.variance.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] > 0.0)) {
      throw std::domain_error(std::string(op) + ": nonpositive variance " + std::to_string(v[i]) + " at entry " +
                              std::to_string(i));
    }
  }
}

}  // namespace

ad::Tensor rsample(const DiagGaussian& d, const ad::Tensor& noise) {
  require_congruent("rsample", d.mean, d.variance);
  require_congruent("rsample", d.mean, noise);
  return ad::add(d.mean, ad::mul(ad::sqrt(d.variance), noise));
}

ad::Tensor gaussian_log_prob(const DiagGaussian& d, const ad::Tensor& x) {
  require_positive_variance("gaussian_log_prob", d);
  require_congruent("gaussian_log_prob", d.mean, x);
  const ad::Tensor sq = ad::div(ad::square(ad::sub(x, d.mean)), d.variance);
  const ad::Tensor per_entry = ad::add_scalar(ad::add(sq, ad::log(d.variance)), kLogTwoPi);
  return ad::scale(ad::sum(per_entry, 1), -0.5);
}

ad::Tensor bernoulli_log_prob(const BernoulliHead& h, const ad::Tensor& t) {
  require_congruent("bernoulli_log_prob", h.logits, t);
  const auto tv = t.values();
  for (std::size_t i = 0; i < tv.size(); ++i) {
    if (tv[i] != 0.0 && tv[i] != 1.0) {
      throw std::invalid_argument("bernoulli_log_prob: non-binary target " + std::to_string(tv[i]) + " at entry " +
                                  std::to_string(i));
    }
  }
  return ad::sum(ad::sub(ad::mul(t, h.logits), ad::softplus(h.logits)), 1);
}

ad::Tensor kl_to_standard_normal(const DiagGaussian& d) {
  require_positive_variance("kl_to_standard_normal", d);
  // (v - 1) is exact near v = 1, which keeps the sum nonnegative.
  const ad::Tensor inner =
      ad::add(ad::square(d.mean), ad::sub(ad::add_scalar(d.variance, -1.0), ad::log(d.variance)));
  return ad::scale(ad::sum(inner, 1), 0.5);
}

}  // namespace tedvae::dist
