#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "tedvae/autodiff/adam.hpp"
#include "tedvae/data.hpp"
#include "tedvae/loss.hpp"

namespace tedvae {

struct TrainConfig {
  std::size_t epochs = 400;
  std::size_t batch_size = 128;
  ad::AdamConfig adam;
  std::uint64_t seed = 0;
  // Fit covariate/outcome standardization on the training split.
  bool standardize = true;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  LossBreakdown train;
  LossBreakdown validation;
};

struct TrainResult {
  std::vector<EpochRecord> trace;
  std::optional<std::size_t> best_epoch;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Means/scales of continuous covariates and of a continuous outcome.
// Zero-variance columns get scale 1.
Preprocessing fit_preprocessing(const Dataset& train, const ColumnSchema& schema);

// Selected rows in model space (preprocessing applied). Empty `rows` means
// every row.
Batch make_batch(const TedvaeModel& m, const Dataset& d, std::span<const std::size_t> rows = {});

// Model-space covariates for every row of `x`.
ad::Tensor model_covariates(const TedvaeModel& m, const Matrix& x);

// Minibatch Adam ascent on the objective. The validation objective is
// evaluated each epoch with one fixed noise draw, and the parameters of the
// best validation epoch (earliest on ties) are restored at the end.
// Throws TrainingDiverged naming the first non-finite loss term.
TrainResult train(TedvaeModel& m, const Dataset& train_set, const Dataset& validation_set, const TrainConfig& cfg);

}  // namespace tedvae
