#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "tedvae/matrix.hpp"
#include "tedvae/model.hpp"

namespace tedvae {

inline constexpr std::size_t kDefaultPosteriorSamples = 100;

// Per-subject potential-outcome predictions in the original outcome units
// (probabilities for a binary outcome). tau == y1 - y0 elementwise.
struct CatePrediction {
  std::vector<double> tau;
  std::vector<double> y0;
  std::vector<double> y1;
  std::size_t samples = 0;

  std::size_t size() const { return tau.size(); }
};

// Draws `samples` joint samples of (z_c, z_y) from q(.|x) per subject and
// averages the outcome classifier's expected outcome under t = 1 and t = 0.
// The instrumental encoder is never evaluated.
CatePrediction predict_cate(const TedvaeModel& m, const Matrix& x, std::size_t samples = kDefaultPosteriorSamples,
                            std::uint64_t seed = 0);

// Mean of predict_cate(...).tau over the batch.
double predict_ate(const TedvaeModel& m, const Matrix& x, std::size_t samples = kDefaultPosteriorSamples,
                   std::uint64_t seed = 0);

double average_effect(const CatePrediction& p);

// Delimited table with columns id,y0_hat,y1_hat,tau_hat.
void write_predictions(const CatePrediction& p, std::ostream& out);
void write_predictions(const CatePrediction& p, const std::filesystem::path& path);
CatePrediction read_predictions(const std::filesystem::path& path);

}  // namespace tedvae
