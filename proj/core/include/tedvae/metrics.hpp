#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "tedvae/data.hpp"

namespace tedvae {

// sqrt(mean((tau_hat - tau_true)^2)).
double pehe(std::span<const double> tau_hat, std::span<const double> tau_true);

// (1/N) * sum_i [t_i * y_i - (1 - t_i) * y_i] over randomized data, exactly as
// the evaluation protocol writes it. For balanced arms this is half the
// difference in group means; see difference_in_means.
double rct_contrast(const Dataset& rct);

// |ate_hat - rct_contrast(rct)|.
double ate_error(double ate_hat, const Dataset& rct);

// mean(y | t = 1) - mean(y | t = 0). Diagnostic only.
double difference_in_means(const Dataset& d);

struct EvalReport {
  std::optional<double> pehe;
  std::optional<double> ate_error;
  std::optional<double> ate_estimate;
  // What ate_error was measured against: "ground_truth" (mean of the true
  // CATE) or "rct_contrast".
  std::string ate_reference;
  std::string split;  // "train" or "test"
  std::size_t n = 0;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string label;        // free-form run label (e.g. ablation arm)
  std::string config_json;  // full resolved configuration

  // Throws std::invalid_argument when no metric is present or one is negative.
  void validate() const;
  std::string to_json_line() const;
  static EvalReport from_json_line(const std::string& line);

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

// 64-bit FNV-1a, hex encoded.
std::string fnv1a_hex(std::string_view text);

}  // namespace tedvae
