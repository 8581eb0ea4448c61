#include "tedvae/autodiff/gradient_check.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tedvae::ad {

namespace {
double evaluate(const std::function<Tensor(Graph&)>& loss_fn) {
  Graph g;
  return loss_fn(g).item();
}
}  // namespace

GradientCheckReport gradient_check(const std::function<Tensor(Graph&)>& loss_fn,
                                   std::span<Parameter* const> params, const GradientCheckOptions& options) {
  GradientSet analytic;
  {
    Graph g;
    const Tensor loss = loss_fn(g);
    analytic = g.backward(loss, params);
  }

  GradientCheckReport report;
  for (Parameter* p : params) {
    ParameterDeviation dev;
    dev.name = p->name();
    const auto grad = analytic.of(*p);
    auto w = p->values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double saved = w[i];
      w[i] = saved + options.step;
      const double up = evaluate(loss_fn);
      w[i] = saved - options.step;
      const double down = evaluate(loss_fn);
      w[i] = saved;
      const double numeric = (up - down) / (2.0 * options.step);
      const double denom = std::max({std::abs(grad[i]), std::abs(numeric), options.magnitude_floor});
      double rel = std::abs(grad[i] - numeric) / denom;
      if (!std::isfinite(rel)) rel = std::numeric_limits<double>::infinity();
      if (rel > dev.max_relative_error || (i == 0 && rel == 0.0)) {
        dev.max_relative_error = rel;
        dev.worst_index = i;
        dev.analytic = grad[i];
        dev.numeric = numeric;
      }
    }
    report.max_relative_error = std::max(report.max_relative_error, dev.max_relative_error);
    if (!(dev.max_relative_error <= options.relative_tolerance)) report.passed = false;
    report.parameters.push_back(std::move(dev));
  }
  return report;
}

}  // namespace tedvae::ad
