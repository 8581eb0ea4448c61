#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tedvae/autodiff/tensor.hpp"

namespace tedvae::ad {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Moment accumulators are indexed by position in the parameter list passed to
// adam_step, so the same list (same order) must be used for every step.
struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

// One bias-corrected Adam descent step over `params`, then clears `grads`.
// Throws std::invalid_argument if any parameter lacks a gradient or the
// parameter list does not match the state's accumulators.
void adam_step(std::span<Parameter* const> params, GradientSet& grads, AdamState& state);

}  // namespace tedvae::ad
