#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace tedvae::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

// A named, persistent block of trainable values. Gradients never live here;
// Graph::backward returns them in a GradientSet keyed by parameter address.
class Parameter {
 public:
  Parameter() = default;
  Parameter(std::string name, Shape shape);
  Parameter(std::string name, Shape shape, std::vector<double> values);

  const std::string& name() const { return name_; }
  const Shape& shape() const { return shape_; }
  std::size_t size() const { return values_.size(); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

 private:
  std::string name_;
  Shape shape_;
  std::vector<double> values_;
};

using ParameterList = std::vector<Parameter*>;

class GradientSet {
 public:
  bool contains(const Parameter& p) const { return grads_.contains(&p); }
  // Throws std::out_of_range when the parameter has no recorded gradient.
  std::span<const double> of(const Parameter& p) const;
  std::span<double> mutable_of(const Parameter& p);
  // Adds `g` into the slot for `p`, allocating a zero slot first if needed.
  void accumulate(const Parameter& p, std::span<const double> g);
  void ensure(const Parameter& p);
  void clear() { grads_.clear(); }
  std::size_t size() const { return grads_.size(); }

 private:
  std::unordered_map<const Parameter*, std::vector<double>> grads_;
};

class Graph;

// Dense row-major float64 array. A Tensor with no graph is a constant; one
// produced inside a Graph carries the id of the node that created it.
class Tensor {
 public:
  Tensor();
  Tensor(Shape shape, std::vector<double> values);

  static Tensor scalar(double v);
  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double v);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const { return values_->size(); }

  std::span<const double> values() const { return *values_; }
  double item() const;
  // Row-major access for rank-2 tensors.
  double at(std::size_t row, std::size_t col) const;

  Graph* graph() const { return graph_; }
  std::size_t node() const { return node_; }
  bool tracked() const { return graph_ != nullptr; }

 private:
  friend class Graph;
  Shape shape_;
  std::shared_ptr<const std::vector<double>> values_;
  Graph* graph_ = nullptr;
  std::size_t node_ = 0;
};

enum class OpKind {
  leaf_parameter,
  elu,
  softplus,
  sigmoid,
  exp,
  log,
  neg,
  square,
  sqrt,
  custom_unary,
  add,
  sub,
  mul,
  div,
  matmul,
  broadcast_add,
  scale,
  add_scalar,
  sum,
  mean,
  slice_cols,
  concat_cols,
};

const char* op_name(OpKind kind);

// Receives the gradient flowing into a node and one writable buffer per
// parent. Buffers of parents that do not need a gradient are empty.
using BackwardFn =
    std::function<void(std::span<const double> upstream, std::span<const std::span<double>> parent_grads)>;

// Define-by-run tape. Nodes are appended in creation order, so the node list
// is already topologically sorted and backward is a single reverse sweep.
class Graph {
 public:
  struct Node {
    OpKind kind;
    std::vector<std::size_t> parents;
    Shape shape;
    std::shared_ptr<const std::vector<double>> values;
    const Parameter* parameter = nullptr;
    BackwardFn backward;
  };

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Binds a parameter as a leaf. Binding the same parameter twice returns the
  // same node, so shared weights accumulate into one gradient.
  Tensor parameter(const Parameter& p);

  Tensor record(OpKind kind, std::vector<Tensor const*> inputs, Shape shape, std::vector<double> values,
                BackwardFn backward);

  // Reverse-mode sweep from a scalar loss. Every parameter bound into this
  // graph, plus every entry of `also_zero`, is present in the result; the
  // ones the loss does not reach hold exact zeros.
  GradientSet backward(const Tensor& loss, std::span<Parameter* const> also_zero = {}) const;

  std::size_t size() const { return nodes_.size(); }
  const Node& node(std::size_t id) const { return nodes_.at(id); }

 private:
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::size_t> bound_;
};

}  // namespace tedvae::ad
