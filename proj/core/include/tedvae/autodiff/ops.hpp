#pragma once

#include <functional>
#include <optional>
#include <span>

#include "tedvae/autodiff/tensor.hpp"

// Differentiable operations. Each op evaluates eagerly; when any input is
// tracked by a Graph the result is recorded there with its local derivative,
// otherwise the result is a constant.
//
// Shape rules:
//   * add/sub/mul/div need identical shapes.
//   * matmul takes (m x k) and (k x n), rank 2 only.
//   * broadcast_add takes (batch x d) and a bias of shape (d) or (1 x d).
//   * slice_cols/concat_cols operate on rank-2 tensors along axis 1.
namespace tedvae::ad {

enum class UnaryKind { elu, softplus, sigmoid, exp, log, neg, square, sqrt };
enum class BinaryKind { add, sub, mul, div, matmul, broadcast_add };
enum class ReduceKind { sum, mean };

// log and sqrt throw std::domain_error on inputs outside their domain
// (log: x <= 0, sqrt: x < 0). elu uses alpha = 1.
Tensor apply_unary(UnaryKind kind, const Tensor& x);

// Shape mismatches throw std::invalid_argument naming both shapes.
Tensor apply_binary(BinaryKind kind, const Tensor& a, const Tensor& b);

// Without an axis the result is a rank-0 scalar.
Tensor reduce(ReduceKind kind, const Tensor& x, std::optional<std::size_t> axis = std::nullopt);

// Elementwise op with caller-supplied value and derivative.
Tensor map_unary(const Tensor& x, std::function<double(double)> f, std::function<double(double)> df);

Tensor scale(const Tensor& x, double factor);
Tensor add_scalar(const Tensor& x, double offset);
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end);
Tensor concat_cols(std::span<const Tensor> parts);

inline Tensor elu(const Tensor& x) { return apply_unary(UnaryKind::elu, x); }
inline Tensor softplus(const Tensor& x) { return apply_unary(UnaryKind::softplus, x); }
inline Tensor sigmoid(const Tensor& x) { return apply_unary(UnaryKind::sigmoid, x); }
inline Tensor exp(const Tensor& x) { return apply_unary(UnaryKind::exp, x); }
inline Tensor log(const Tensor& x) { return apply_unary(UnaryKind::log, x); }
inline Tensor neg(const Tensor& x) { return apply_unary(UnaryKind::neg, x); }
inline Tensor square(const Tensor& x) { return apply_unary(UnaryKind::square, x); }
inline Tensor sqrt(const Tensor& x) { return apply_unary(UnaryKind::sqrt, x); }

inline Tensor add(const Tensor& a, const Tensor& b) { return apply_binary(BinaryKind::add, a, b); }
inline Tensor sub(const Tensor& a, const Tensor& b) { return apply_binary(BinaryKind::sub, a, b); }
inline Tensor mul(const Tensor& a, const Tensor& b) { return apply_binary(BinaryKind::mul, a, b); }
inline Tensor div(const Tensor& a, const Tensor& b) { return apply_binary(BinaryKind::div, a, b); }
inline Tensor matmul(const Tensor& a, const Tensor& b) { return apply_binary(BinaryKind::matmul, a, b); }
inline Tensor broadcast_add(const Tensor& a, const Tensor& b) { return apply_binary(BinaryKind::broadcast_add, a, b); }

inline Tensor sum(const Tensor& x, std::optional<std::size_t> axis = std::nullopt) {
  return reduce(ReduceKind::sum, x, axis);
}
inline Tensor mean(const Tensor& x, std::optional<std::size_t> axis = std::nullopt) {
  return reduce(ReduceKind::mean, x, axis);
}

// Numerically stable scalar helpers shared with the distributions code.
double stable_softplus(double x);
double stable_sigmoid(double x);

}  // namespace tedvae::ad
