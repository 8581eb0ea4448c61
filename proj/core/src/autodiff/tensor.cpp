#include "tedvae/autodiff/tensor.hpp"

#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace tedvae::ad {

namespace {
constexpr std::size_t kNoParent = std::numeric_limits<std::size_t>::max();
}

std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Parameter::Parameter(std::string name, Shape shape)
    : name_(std::move(name)), shape_(std::move(shape)), values_(numel(shape_), 0.0) {}

Parameter::Parameter(std::string name, Shape shape, std::vector<double> values)
    : name_(std::move(name)), shape_(std::move(shape)), values_(std::move(values)) {
  if (values_.size() != numel(shape_)) {
    throw std::invalid_argument("parameter '" + name_ + "': " + std::to_string(values_.size()) +
                                " values do not fill shape " + to_string(shape_));
  }
}

std::span<const double> GradientSet::of(const Parameter& p) const {
  auto it = grads_.find(&p);
  if (it == grads_.end()) throw std::out_of_range("no gradient recorded for parameter '" + p.name() + "'");
  return it->second;
}

std::span<double> GradientSet::mutable_of(const Parameter& p) {
  auto it = grads_.find(&p);
  if (it == grads_.end()) throw std::out_of_range("no gradient recorded for parameter '" + p.name() + "'");
  return it->second;
}

void GradientSet::ensure(const Parameter& p) {
  auto& slot = grads_[&p];
  if (slot.size() != p.size()) slot.assign(p.size(), 0.0);
}

void GradientSet::accumulate(const Parameter& p, std::span<const double> g) {
  if (g.size() != p.size()) {
    throw std::invalid_argument("gradient for '" + p.name() + "' has " + std::to_string(g.size()) +
                                " entries, expected " + std::to_string(p.size()));
  }
  ensure(p);
  auto& slot = grads_[&p];
  for (std::size_t i = 0; i < g.size(); ++i) slot[i] += g[i];
}

Tensor::Tensor() : shape_{}, values_(std::make_shared<const std::vector<double>>(1, 0.0)) {}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::make_shared<const std::vector<double>>(std::move(values))) {
  if (values_->size() != numel(shape_)) {
    throw std::invalid_argument("tensor: " + std::to_string(values_->size()) + " values do not fill shape " +
                                to_string(shape_));
  }
}

Tensor Tensor::scalar(double v) { return Tensor({}, {v}); }

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), 0.0); }

Tensor Tensor::full(Shape shape, double v) {
  const auto n = numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, v));
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw std::out_of_range("axis " + std::to_string(axis) + " out of range for shape " + to_string(shape_));
  }
  return shape_[axis];
}

double Tensor::item() const {
  if (values_->size() != 1) throw std::logic_error("item() on tensor of shape " + to_string(shape_));
  return (*values_)[0];
}

double Tensor::at(std::size_t row, std::size_t col) const {
  if (shape_.size() != 2) throw std::logic_error("at(row, col) on tensor of shape " + to_string(shape_));
  return (*values_)[row * shape_[1] + col];
}

const char* op_name(OpKind kind) {
  switch (kind) {
    case OpKind::leaf_parameter: return "parameter";
    case OpKind::elu: return "elu";
    case OpKind::softplus: return "softplus";
    case OpKind::sigmoid: return "sigmoid";
    case OpKind::exp: return "exp";
    case OpKind::log: return "log";
    case OpKind::neg: return "neg";
    case OpKind::square: return "square";
    case OpKind::sqrt: return "sqrt";
    case OpKind::custom_unary: return "custom_unary";
    case OpKind::add: return "add";
    case OpKind::sub: return "sub";
    case OpKind::mul: return "mul";
    case OpKind::div: return "div";
    case OpKind::matmul: return "matmul";
    case OpKind::broadcast_add: return "broadcast_add";
    case OpKind::scale: return "scale";
    case OpKind::add_scalar: return "add_scalar";
    case OpKind::sum: return "sum";
    case OpKind::mean: return "mean";
    case OpKind::slice_cols: return "slice_cols";
    case OpKind::concat_cols: return "concat_cols";
  }
  return "unknown";
}

Tensor Graph::parameter(const Parameter& p) {
  if (auto it = bound_.find(&p); it != bound_.end()) {
    Tensor t;
    const Node& n = nodes_[it->second];
    t.shape_ = n.shape;
    t.values_ = n.values;
    t.graph_ = this;
    t.node_ = it->second;
    return t;
  }
  Node n{OpKind::leaf_parameter, {}, p.shape(),
         std::make_shared<const std::vector<double>>(p.values().begin(), p.values().end()), &p, {}};
  nodes_.push_back(std::move(n));
  const std::size_t id = nodes_.size() - 1;
  bound_.emplace(&p, id);
  Tensor t;
  t.shape_ = p.shape();
  t.values_ = nodes_.back().values;
  t.graph_ = this;
  t.node_ = id;
  return t;
}

Tensor Graph::record(OpKind kind, std::vector<Tensor const*> inputs, Shape shape, std::vector<double> values,
                     BackwardFn backward) {
  Node n;
  n.kind = kind;
  n.parents.reserve(inputs.size());
  for (const Tensor* in : inputs) {
    if (in->graph_ == nullptr) {
      n.parents.push_back(kNoParent);
    } else if (in->graph_ != this) {
      throw std::logic_error(std::string("op '") + op_name(kind) + "' mixes tensors from different graphs");
    } else {
      n.parents.push_back(in->node_);
    }
  }
  n.shape = shape;
  n.values = std::make_shared<const std::vector<double>>(std::move(values));
  n.backward = std::move(backward);
  nodes_.push_back(std::move(n));

  Tensor t;
  t.shape_ = std::move(shape);
  t.values_ = nodes_.back().values;
  t.graph_ = this;
  t.node_ = nodes_.size() - 1;
  return t;
}

GradientSet Graph::backward(const Tensor& loss, std::span<Parameter* const> also_zero) const {
  if (loss.size() != 1) {
    throw std::invalid_argument("backward requires a scalar loss, got shape " + to_string(loss.shape()));
  }
  GradientSet result;
  for (const auto& [param, id] : bound_) result.ensure(*param);
  for (Parameter* p : also_zero) result.ensure(*p);
  if (!loss.tracked()) return result;
  if (loss.graph() != this) throw std::logic_error("backward: loss was produced by a different graph");

  std::vector<std::vector<double>> grads(nodes_.size());
  std::vector<bool> reached(nodes_.size(), false);
  grads[loss.node()].assign(1, 1.0);
  reached[loss.node()] = true;

  std::vector<std::span<double>> parent_spans;
  for (std::size_t k = loss.node() + 1; k-- > 0;) {
    if (!reached[k]) continue;
    const Node& n = nodes_[k];
    if (n.kind == OpKind::leaf_parameter) {
      result.accumulate(*n.parameter, grads[k]);
      grads[k] = {};
      continue;
    }
    parent_spans.assign(n.parents.size(), std::span<double>{});
    for (std::size_t i = 0; i < n.parents.size(); ++i) {
      const std::size_t p = n.parents[i];
      if (p == kNoParent) continue;
      if (!reached[p]) {
        grads[p].assign(numel(nodes_[p].shape), 0.0);
        reached[p] = true;
      }
      parent_spans[i] = grads[p];
    }
    n.backward(grads[k], parent_spans);
    grads[k] = {};
  }
  return result;
}

}  // namespace tedvae::ad
