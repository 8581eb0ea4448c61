#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tedvae/autodiff/tensor.hpp"

namespace tedvae::ad {

struct GradientCheckOptions {
  double step = 1e-5;
  double relative_tolerance = 1e-4;
  // Denominator floor for the relative error |a - n| / max(|a|, |n|, floor),
  // so near-zero gradients are compared on an absolute scale.
  double magnitude_floor = 1e-3;
};

struct ParameterDeviation {
  std::string name;
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

struct GradientCheckReport {
  std::vector<ParameterDeviation> parameters;
  double max_relative_error = 0.0;
  bool passed = true;
};

// Builds the loss with `loss_fn` on a fresh graph, differentiates it, and
// compares every parameter entry against a central difference. `loss_fn`
// must be deterministic given the parameter values.
GradientCheckReport gradient_check(const std::function<Tensor(Graph&)>& loss_fn,
                                   std::span<Parameter* const> params, const GradientCheckOptions& options = {});

}  // namespace tedvae::ad
