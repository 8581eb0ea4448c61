#include "tedvae/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace tedvae {

namespace {

void require_compatible(const TedvaeModel& m, const Dataset& d, const char* which) {
  if (d.schema != m.schema()) {
    throw std::invalid_argument(std::string(which) + " set schema does not match the model schema");
  }
  if (d.size() == 0) throw std::invalid_argument(std::string(which) + " set is empty");
}

void check_finite(const LossBreakdown& b, const std::string& where) {
  if (const char* term = first_nonfinite_term(b)) {
    throw TrainingDiverged(where + ": non-finite loss term '" + term + "'");
  }
}

void add_weighted(LossBreakdown& acc, const LossBreakdown& b, double w) {
  acc.recon_x += w * b.recon_x;
  acc.kl_t += w * b.kl_t;
  acc.kl_c += w * b.kl_c;
  acc.kl_y += w * b.kl_y;
  acc.aux_t += w * b.aux_t;
  acc.aux_y += w * b.aux_y;
  acc.total += w * b.total;
}

double population_std(std::span<const double> v, double mean) {
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

}  // namespace

Preprocessing fit_preprocessing(const Dataset& train, const ColumnSchema& schema) {
  Preprocessing p;
  const std::size_t d = train.covariate_count();
  p.x_mean.assign(d, 0.0);
  p.x_scale.assign(d, 1.0);
  std::vector<double> col(train.size());
  for (std::size_t j = 0; j < d; ++j) {
    if (schema.covariates[j] != ColumnKind::continuous) continue;
    for (std::size_t i = 0; i < train.size(); ++i) col[i] = train.x(i, j);
    const double mean = std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(col.size());
    const double sd = population_std(col, mean);
    p.x_mean[j] = mean;
    p.x_scale[j] = sd > 0.0 ? sd : 1.0;
  }
  if (schema.outcome == ColumnKind::continuous) {
    const double mean = std::accumulate(train.y.begin(), train.y.end(), 0.0) / static_cast<double>(train.size());
    const double sd = population_std(train.y, mean);
    p.y_mean = mean;
    p.y_scale = sd > 0.0 ? sd : 1.0;
  }
  return p;
}

ad::Tensor model_covariates(const TedvaeModel& m, const Matrix& x) {
  const auto& p = m.preprocessing();
  if (x.cols() != p.x_mean.size()) {
    throw std::invalid_argument("covariate matrix has " + std::to_string(x.cols()) + " columns, model expects " +
                                std::to_string(p.x_mean.size()));
  }
  std::vector<double> v(x.rows() * x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) v[i * x.cols() + j] = (x(i, j) - p.x_mean[j]) / p.x_scale[j];
  return ad::Tensor({x.rows(), x.cols()}, std::move(v));
}

Batch make_batch(const TedvaeModel& m, const Dataset& d, std::span<const std::size_t> rows) {
  std::vector<std::size_t> all;
  if (rows.empty()) {
    all.resize(d.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    rows = all;
  }
  const auto& p = m.preprocessing();
  const std::size_t cols = d.covariate_count();
  std::vector<double> x(rows.size() * cols), t(rows.size()), y(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const std::size_t i = rows[k];
    for (std::size_t j = 0; j < cols; ++j) x[k * cols + j] = (d.x(i, j) - p.x_mean[j]) / p.x_scale[j];
    t[k] = d.t[i];
    y[k] = (d.y[i] - p.y_mean) / p.y_scale;
  }
  return {ad::Tensor({rows.size(), cols}, std::move(x)), ad::Tensor({rows.size(), 1}, std::move(t)),
          ad::Tensor({rows.size(), 1}, std::move(y))};
}

TrainResult train(TedvaeModel& m, const Dataset& train_set, const Dataset& validation_set, const TrainConfig& cfg) {
  TrainResult result;
  if (cfg.batch_size == 0) throw std::invalid_argument("train: batch size must be positive");
  if (!(cfg.adam.learning_rate > 0.0)) throw std::invalid_argument("train: learning rate must be positive");
  if (cfg.epochs == 0) return result;
  require_compatible(m, train_set, "training");
  require_compatible(m, validation_set, "validation");

  if (cfg.standardize) m.set_preprocessing(fit_preprocessing(train_set, m.schema()));

  const LossWeights weights = LossWeights::from(m.config());
  const auto& dims = m.config().dims;
  ad::ParameterList params = m.parameters();
  ad::AdamState adam;
  adam.config = cfg.adam;

  Rng rng(mix_seed(cfg.seed, 0x7261696eULL));
  Rng validation_rng(mix_seed(cfg.seed, 0x76616c69ULL));
  const Batch validation_batch = make_batch(m, validation_set);
  const LatentNoise validation_noise = LatentNoise::sample(validation_batch.size(), dims, validation_rng);

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::vector<double>> best_values;
  double best_total = -std::numeric_limits<double>::infinity();

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i - 1);
      std::swap(order[i - 1], order[pick(rng)]);
    }
    LossBreakdown epoch_train;
    for (std::size_t start = 0, b = 0; start < order.size(); start += cfg.batch_size, ++b) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const std::span<const std::size_t> rows(order.data() + start, stop - start);
      const Batch batch = make_batch(m, train_set, rows);
      const LatentNoise noise = LatentNoise::sample(batch.size(), dims, rng);

      ad::Graph graph;
      const LossEvaluation eval = tedvae_loss(m, batch, weights, noise, &graph);
      check_finite(eval.breakdown, "epoch " + std::to_string(epoch) + ", batch " + std::to_string(b + 1));
      ad::GradientSet grads = graph.backward(ad::neg(eval.objective), params);
      ad::adam_step(params, grads, adam);
      add_weighted(epoch_train, eval.breakdown, static_cast<double>(batch.size()) / static_cast<double>(order.size()));
    }

    const LossBreakdown validation = tedvae_loss(m, validation_batch, weights, validation_noise).breakdown;
    check_finite(validation, "epoch " + std::to_string(epoch) + ", validation");
    result.trace.push_back({epoch, epoch_train, validation});
    if (validation.total > best_total) {
      best_total = validation.total;
      result.best_epoch = epoch;
      best_values.clear();
      for (const ad::Parameter* p : params) best_values.emplace_back(p->values().begin(), p->values().end());
    }
  }

  for (std::size_t k = 0; k < params.size(); ++k) {
    std::copy(best_values[k].begin(), best_values[k].end(), params[k]->values().begin());
  }
  return result;
}

}  // namespace tedvae
