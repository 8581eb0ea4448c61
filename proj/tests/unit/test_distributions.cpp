#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "tedvae/autodiff/gradient_check.hpp"
#include "tedvae/distributions.hpp"

using namespace tedvae;
using ad::Tensor;

namespace {

dist::DiagGaussian gaussian(std::vector<double> mu, std::vector<double> var) {
  const std::size_t d = mu.size();
  return {Tensor({1, d}, std::move(mu)), Tensor({1, d}, std::move(var))};
}

double log_normal_pdf(double x, double mu, double var) {
  return -0.5 * ((x - mu) * (x - mu) / var + std::log(var) + std::log(2.0 * std::numbers::pi));
}

}  // namespace

TEST(Rsample, HandExamples) {
  const auto d = gaussian({2.0}, {4.0});
  EXPECT_DOUBLE_EQ(dist::rsample(d, Tensor({1, 1}, {1.5})).item(), 5.0);
  EXPECT_DOUBLE_EQ(dist::rsample(gaussian({0.0}, {1.0}), Tensor({1, 1}, {-0.37})).item(), -0.37);
  EXPECT_NEAR(dist::rsample(gaussian({0.8}, {1e-300}), Tensor({1, 1}, {3.0})).item(), 0.8, 1e-140);
  EXPECT_THROW(dist::rsample(d, Tensor({1, 2}, {0, 0})), std::invalid_argument);
}

TEST(Rsample, EmpiricalMomentsWithinThreeStandardErrors) {
  const double mu = -1.3, var = 2.5;
  const std::size_t n = 100000;
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  std::vector<double> noise(n);
  for (double& e : noise) e = normal(rng);
  const dist::DiagGaussian d{Tensor::full({n, 1}, mu), Tensor::full({n, 1}, var)};
  const Tensor s = dist::rsample(d, Tensor({n, 1}, noise));
  double m = 0.0, ss = 0.0;
  for (double v : s.values()) m += v;
  m /= n;
  for (double v : s.values()) ss += (v - m) * (v - m);
  const double sample_var = ss / (n - 1);
  EXPECT_LT(std::abs(m - mu), 3.0 * std::sqrt(var / n));
  // Var of the sample variance of a Gaussian: 2 var^2 / (n - 1).
  EXPECT_LT(std::abs(sample_var - var), 3.0 * std::sqrt(2.0 * var * var / (n - 1)));
}

TEST(GaussianLogProb, HandExamples) {
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  EXPECT_NEAR(dist::gaussian_log_prob(gaussian({0.3}, {1.0}), Tensor({1, 1}, {0.3})).item(), -half_log_2pi, 1e-15);
  EXPECT_NEAR(dist::gaussian_log_prob(gaussian({0.3}, {1.0}), Tensor({1, 1}, {1.3})).item(), -0.5 - half_log_2pi,
              1e-15);
  const double v = dist::gaussian_log_prob(gaussian({1.0}, {4.0}), Tensor({1, 1}, {0.0})).item();
  EXPECT_NEAR(v, -0.5 * (0.25 + std::log(4.0) + std::log(2.0 * std::numbers::pi)), 1e-15);
  EXPECT_NEAR(v, -1.7371, 1e-4);
}

TEST(GaussianLogProb, SumsOverColumns) {
  const auto d = gaussian({0.0, 1.0, -2.0}, {1.0, 0.5, 3.0});
  const double got = dist::gaussian_log_prob(d, Tensor({1, 3}, {0.4, 0.1, -1.0})).item();
  EXPECT_NEAR(got, log_normal_pdf(0.4, 0.0, 1.0) + log_normal_pdf(0.1, 1.0, 0.5) + log_normal_pdf(-1.0, -2.0, 3.0),
              1e-14);
}

TEST(GaussianLogProb, NonPositiveVarianceThrows) {
  EXPECT_THROW(dist::gaussian_log_prob(gaussian({0.0}, {0.0}), Tensor({1, 1}, {0.0})), std::domain_error);
  EXPECT_THROW(dist::gaussian_log_prob(gaussian({0.0}, {-1.0}), Tensor({1, 1}, {0.0})), std::domain_error);
}

TEST(GaussianLogProb, DensityIntegratesToOne) {
  const double mu = 0.7, var = 1.8;
  const double lo = mu - 12.0 * std::sqrt(var), hi = mu + 12.0 * std::sqrt(var);
  const std::size_t n = 20001;
  const double h = (hi - lo) / (n - 1);
  std::vector<double> grid(n);
  for (std::size_t i = 0; i < n; ++i) grid[i] = lo + h * i;
  const dist::DiagGaussian d{Tensor::full({n, 1}, mu), Tensor::full({n, 1}, var)};
  const Tensor lp = dist::gaussian_log_prob(d, Tensor({n, 1}, grid));
  double integral = 0.0;
  for (std::size_t i = 0; i < n; ++i) integral += (i == 0 || i + 1 == n ? 0.5 : 1.0) * std::exp(lp.values()[i]);
  EXPECT_NEAR(integral * h, 1.0, 1e-3);
}

TEST(BernoulliLogProb, HandExamples) {
  auto lp = [](double logit, double t) {
    return dist::bernoulli_log_prob({Tensor({1, 1}, {logit})}, Tensor({1, 1}, {t})).item();
  };
  EXPECT_NEAR(lp(0.0, 1.0), std::log(0.5), 1e-15);
  EXPECT_NEAR(lp(2.0, 0.0), -std::log1p(std::exp(2.0)), 1e-15);
  EXPECT_NEAR(lp(2.0, 0.0), -2.1269, 1e-4);
  EXPECT_EQ(lp(800.0, 1.0), 0.0);
  EXPECT_EQ(lp(-800.0, 0.0), 0.0);
  EXPECT_EQ(lp(800.0, 0.0), -800.0);
  EXPECT_TRUE(std::isfinite(lp(-1e6, 1.0)));
  EXPECT_THROW(lp(0.0, 0.5), std::invalid_argument);
}

TEST(Kl, HandExamples) {
  EXPECT_EQ(dist::kl_to_standard_normal(gaussian({0.0}, {1.0})).item(), 0.0);
  EXPECT_DOUBLE_EQ(dist::kl_to_standard_normal(gaussian({1.0}, {1.0})).item(), 0.5);
  EXPECT_NEAR(dist::kl_to_standard_normal(gaussian({0.0}, {4.0})).item(), 0.5 * (3.0 - std::log(4.0)), 1e-15);
  EXPECT_THROW(dist::kl_to_standard_normal(gaussian({0.0}, {0.0})), std::domain_error);
}

TEST(Kl, NonNegativeAndZeroOnlyAtPrior) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n;
  for (int i = 0; i < 1000; ++i) {
    const double mu = n(rng), var = std::exp(2.0 * n(rng));
    EXPECT_GE(dist::kl_to_standard_normal(gaussian({mu}, {var})).item(), 0.0);
  }
  EXPECT_GT(dist::kl_to_standard_normal(gaussian({1e-7}, {1.0})).item(), 0.0);
  EXPECT_GT(dist::kl_to_standard_normal(gaussian({0.0}, {1.0 + 1e-7})).item(), 0.0);
  EXPECT_LE(dist::kl_to_standard_normal(gaussian({0.0, 0.0}, {1.0, 1.0})).item(), 1e-12);
}

TEST(Kl, MonteCarloAgreementOnWorkedValue) {
  const std::size_t n = 1000000;
  std::mt19937_64 rng(99);
  std::normal_distribution<double> normal;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = 2.0 * normal(rng);
    s += log_normal_pdf(z, 0.0, 4.0) - log_normal_pdf(z, 0.0, 1.0);
  }
  EXPECT_NEAR(s / n, dist::kl_to_standard_normal(gaussian({0.0}, {4.0})).item(), 1e-2);
}

TEST(Kl, GradientMatchesFiniteDifferences) {
  ad::Parameter mu("mu", {2, 2}, {0.3, -1.2, 0.0, 2.0});
  ad::Parameter var("var", {2, 2}, {0.5, 1.0, 3.0, 1e-2});
  std::vector<ad::Parameter*> params{&mu, &var};
  const auto r = ad::gradient_check(
      [&](ad::Graph& g) {
        return ad::sum(dist::kl_to_standard_normal({g.parameter(mu), g.parameter(var)}));
      },
      params);
  EXPECT_TRUE(r.passed) << r.max_relative_error;
}
