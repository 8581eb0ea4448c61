#include "tedvae/autodiff/ops.hpp"

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tedvae::ad {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

Graph* common_graph(std::initializer_list<const Tensor*> inputs) {
  Graph* g = nullptr;
  for (const Tensor* t : inputs) {
    if (!t->tracked()) continue;
    if (g != nullptr && g != t->graph()) throw std::logic_error("op mixes tensors from different graphs");
    g = t->graph();
  }
  return g;
}

Tensor emit(OpKind kind, std::initializer_list<const Tensor*> inputs, Shape shape, std::vector<double> values,
            BackwardFn backward) {
  Graph* g = common_graph(inputs);
  if (g == nullptr) return Tensor(std::move(shape), std::move(values));
  return g->record(kind, std::vector<const Tensor*>(inputs), std::move(shape), std::move(values), std::move(backward));
}

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(std::string(op) + ": incompatible shapes " + to_string(a.shape()) + " and " +
                              to_string(b.shape()));
}

void require_rank2(const char* op, const Tensor& x) {
  if (x.rank() != 2) throw std::invalid_argument(std::string(op) + ": expected rank-2 tensor, got " + to_string(x.shape()));
}

OpKind unary_op_kind(UnaryKind kind) {
  switch (kind) {
    case UnaryKind::elu: return OpKind::elu;
    case UnaryKind::softplus: return OpKind::softplus;
    case UnaryKind::sigmoid: return OpKind::sigmoid;
    case UnaryKind::exp: return OpKind::exp;
    case UnaryKind::log: return OpKind::log;
    case UnaryKind::neg: return OpKind::neg;
    case UnaryKind::square: return OpKind::square;
    case UnaryKind::sqrt: return OpKind::sqrt;
  }
  throw std::logic_error("unknown unary kind");
}

// Local derivative dy/dx given the input and the output.
double unary_derivative(UnaryKind kind, double x, double y) {
  switch (kind) {
    case UnaryKind::elu: return x > 0.0 ? 1.0 : y + 1.0;
    case UnaryKind::softplus: return stable_sigmoid(x);
    case UnaryKind::sigmoid: return y * (1.0 - y);
    case UnaryKind::exp: return y;
    case UnaryKind::log: return 1.0 / x;
    case UnaryKind::neg: return -1.0;
    case UnaryKind::square: return 2.0 * x;
    case UnaryKind::sqrt: return 0.5 / y;
  }
  return 0.0;
}

double unary_value(UnaryKind kind, double x) {
  switch (kind) {
    case UnaryKind::elu: return x > 0.0 ? x : std::expm1(x);
    case UnaryKind::softplus: return stable_softplus(x);
    case UnaryKind::sigmoid: return stable_sigmoid(x);
    case UnaryKind::exp: return std::exp(x);
    case UnaryKind::log:
      if (!(x > 0.0)) throw std::domain_error("log of nonpositive value " + std::to_string(x));
      return std::log(x);
    case UnaryKind::neg: return -x;
    case UnaryKind::square: return x * x;
    case UnaryKind::sqrt:
      if (!(x >= 0.0)) throw std::domain_error("sqrt of negative value " + std::to_string(x));
      return std::sqrt(x);
  }
  return 0.0;
}

Tensor elementwise(BinaryKind kind, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    const char* names[] = {"add", "sub", "mul", "div"};
    shape_error(names[static_cast<int>(kind)], a, b);
  }
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<double> out(av.size());
  OpKind op = OpKind::add;
  switch (kind) {
    case BinaryKind::add:
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
      op = OpKind::add;
      break;
    case BinaryKind::sub:
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
      op = OpKind::sub;
      break;
    case BinaryKind::mul:
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
      op = OpKind::mul;
      break;
    case BinaryKind::div:
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] / bv[i];
      op = OpKind::div;
      break;
    default: throw std::logic_error("elementwise: unexpected kind");
  }
  return emit(op, {&a, &b}, a.shape(), std::move(out),
              [kind, a, b](std::span<const double> g, std::span<const std::span<double>> pg) {
                const auto av = a.values();
                const auto bv = b.values();
                auto ga = pg[0];
                auto gb = pg[1];
                switch (kind) {
                  case BinaryKind::add:
                    if (!ga.empty()) for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                    if (!gb.empty()) for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
                    break;
                  case BinaryKind::sub:
                    if (!ga.empty()) for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                    if (!gb.empty()) for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
                    break;
                  case BinaryKind::mul:
                    if (!ga.empty()) for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
                    if (!gb.empty()) for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
                    break;
                  case BinaryKind::div:
                    if (!ga.empty()) for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / bv[i];
                    if (!gb.empty())
                      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i] * av[i] / (bv[i] * bv[i]);
                    break;
                  default: break;
                }
              });
}

Tensor matmul_impl(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) shape_error("matmul", a, b);
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(m * n, 0.0);
  if (k > 0 && m > 0 && n > 0) {
    MutMap(out.data(), m, n).noalias() = ConstMap(a.values().data(), m, k) * ConstMap(b.values().data(), k, n);
  }
  return emit(OpKind::matmul, {&a, &b}, {m, n}, std::move(out),
              [a, b, m, k, n](std::span<const double> g, std::span<const std::span<double>> pg) {
                if (m == 0 || k == 0 || n == 0) return;
                ConstMap gm(g.data(), m, n);
                if (!pg[0].empty()) MutMap(pg[0].data(), m, k).noalias() += gm * ConstMap(b.values().data(), k, n).transpose();
                if (!pg[1].empty()) MutMap(pg[1].data(), k, n).noalias() += ConstMap(a.values().data(), m, k).transpose() * gm;
              });
}

Tensor broadcast_add_impl(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2) shape_error("broadcast_add", a, b);
  const std::size_t rows = a.dim(0), cols = a.dim(1);
  const bool bias_ok = (b.rank() == 1 && b.dim(0) == cols) || (b.rank() == 2 && b.dim(0) == 1 && b.dim(1) == cols);
  if (!bias_ok) shape_error("broadcast_add", a, b);
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = av[r * cols + c] + bv[c];
  return emit(OpKind::broadcast_add, {&a, &b}, a.shape(), std::move(out),
              [rows, cols](std::span<const double> g, std::span<const std::span<double>> pg) {
                if (!pg[0].empty()) for (std::size_t i = 0; i < g.size(); ++i) pg[0][i] += g[i];
                if (!pg[1].empty())
                  for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t c = 0; c < cols; ++c) pg[1][c] += g[r * cols + c];
              });
}

}  // namespace

double stable_softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor apply_unary(UnaryKind kind, const Tensor& x) {
  const auto xv = x.values();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = unary_value(kind, xv[i]);
  auto y = std::make_shared<const std::vector<double>>(out);
  return emit(unary_op_kind(kind), {&x}, x.shape(), std::move(out),
              [kind, x, y](std::span<const double> g, std::span<const std::span<double>> pg) {
                if (pg[0].empty()) return;
                const auto xv = x.values();
                for (std::size_t i = 0; i < g.size(); ++i) pg[0][i] += g[i] * unary_derivative(kind, xv[i], (*y)[i]);
              });
}

Tensor map_unary(const Tensor& x, std::function<double(double)> f, std::function<double(double)> df) {
  const auto xv = x.values();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
  return emit(OpKind::custom_unary, {&x}, x.shape(), std::move(out),
              [x, df = std::move(df)](std::span<const double> g, std::span<const std::span<double>> pg) {
                if (pg[0].empty()) return;
                const auto xv = x.values();
                for (std::size_t i = 0; i < g.size(); ++i) pg[0][i] += g[i] * df(xv[i]);
              });
}

Tensor apply_binary(BinaryKind kind, const Tensor& a, const Tensor& b) {
  switch (kind) {
    case BinaryKind::matmul: return matmul_impl(a, b);
    case BinaryKind::broadcast_add: return broadcast_add_impl(a, b);
    default: return elementwise(kind, a, b);
  }
}

Tensor reduce(ReduceKind kind, const Tensor& x, std::optional<std::size_t> axis) {
  const auto xv = x.values();
  const OpKind op = kind == ReduceKind::sum ? OpKind::sum : OpKind::mean;
  if (!axis) {
    double total = 0.0;
    for (double v : xv) total += v;
    const double n = static_cast<double>(xv.size());
    const double factor = kind == ReduceKind::mean ? 1.0 / n : 1.0;
    if (kind == ReduceKind::mean) {
      if (xv.empty()) throw std::invalid_argument("mean of empty tensor");
      total /= n;
    }
    return emit(op, {&x}, {}, {total}, [factor](std::span<const double> g, std::span<const std::span<double>> pg) {
      if (pg[0].empty()) return;
      for (double& v : pg[0]) v += g[0] * factor;
    });
  }
  if (*axis >= x.rank()) {
    throw std::invalid_argument("reduce: axis " + std::to_string(*axis) + " is invalid for shape " +
                                to_string(x.shape()));
  }
  std::size_t outer = 1, inner = 1;
  const std::size_t len = x.dim(*axis);
  for (std::size_t d = 0; d < *axis; ++d) outer *= x.dim(d);
  for (std::size_t d = *axis + 1; d < x.rank(); ++d) inner *= x.dim(d);
  if (kind == ReduceKind::mean && len == 0) throw std::invalid_argument("mean over an empty axis");
  const double factor = kind == ReduceKind::mean ? 1.0 / static_cast<double>(len) : 1.0;

  Shape out_shape;
  for (std::size_t d = 0; d < x.rank(); ++d)
    if (d != *axis) out_shape.push_back(x.dim(d));
  std::vector<double> out(outer * inner, 0.0);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t l = 0; l < len; ++l)
      for (std::size_t i = 0; i < inner; ++i) out[o * inner + i] += xv[(o * len + l) * inner + i];
  if (factor != 1.0)
    for (double& v : out) v *= factor;
  return emit(op, {&x}, std::move(out_shape), std::move(out),
              [outer, len, inner, factor](std::span<const double> g, std::span<const std::span<double>> pg) {
                if (pg[0].empty()) return;
                for (std::size_t o = 0; o < outer; ++o)
                  for (std::size_t l = 0; l < len; ++l)
                    for (std::size_t i = 0; i < inner; ++i) pg[0][(o * len + l) * inner + i] += g[o * inner + i] * factor;
              });
}

Tensor scale(const Tensor& x, double factor) {
  const auto xv = x.values();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] * factor;
  return emit(OpKind::scale, {&x}, x.shape(), std::move(out),
              [factor](std::span<const double> g, std::span<const std::span<double>> pg) {
                if (pg[0].empty()) return;
                for (std::size_t i = 0; i < g.size(); ++i) pg[0][i] += g[i] * factor;
              });
}

Tensor add_scalar(const Tensor& x, double offset) {
  const auto xv = x.values();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] + offset;
  return emit(OpKind::add_scalar, {&x}, x.shape(), std::move(out),
              [](std::span<const double> g, std::span<const std::span<double>> pg) {
                if (pg[0].empty()) return;
                for (std::size_t i = 0; i < g.size(); ++i) pg[0][i] += g[i];
              });
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end) {
  require_rank2("slice_cols", x);
  const std::size_t rows = x.dim(0), cols = x.dim(1);
  if (begin > end || end > cols) {
    throw std::invalid_argument("slice_cols: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                                ") invalid for shape " + to_string(x.shape()));
  }
  const std::size_t width = end - begin;
  const auto xv = x.values();
  std::vector<double> out(rows * width);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < width; ++c) out[r * width + c] = xv[r * cols + begin + c];
  return emit(OpKind::slice_cols, {&x}, {rows, width}, std::move(out),
              [rows, cols, begin, width](std::span<const double> g, std::span<const std::span<double>> pg) {
                if (pg[0].empty()) return;
                for (std::size_t r = 0; r < rows; ++r)
                  for (std::size_t c = 0; c < width; ++c) pg[0][r * cols + begin + c] += g[r * width + c];
              });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  for (const Tensor& p : parts) require_rank2("concat_cols", p);
  const std::size_t rows = parts[0].dim(0);
  std::size_t total = 0;
  std::vector<std::size_t> offsets;
  for (const Tensor& p : parts) {
    if (p.dim(0) != rows) shape_error("concat_cols", parts[0], p);
    offsets.push_back(total);
    total += p.dim(1);
  }
  std::vector<double> out(rows * total);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto pv = parts[k].values();
    const std::size_t w = parts[k].dim(1);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < w; ++c) out[r * total + offsets[k] + c] = pv[r * w + c];
  }

  std::vector<std::size_t> widths;
  for (const Tensor& p : parts) widths.push_back(p.dim(1));
  BackwardFn backward = [rows, total, offsets, widths](std::span<const double> g, std::span<const std::span<double>> pg) {
    for (std::size_t k = 0; k < pg.size(); ++k) {
      if (pg[k].empty()) continue;
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < widths[k]; ++c) pg[k][r * widths[k] + c] += g[r * total + offsets[k] + c];
    }
  };

  Graph* g = nullptr;
  for (const Tensor& p : parts) {
    if (!p.tracked()) continue;
    if (g != nullptr && g != p.graph()) throw std::logic_error("concat_cols mixes tensors from different graphs");
    g = p.graph();
  }
  if (g == nullptr) return Tensor({rows, total}, std::move(out));
  std::vector<const Tensor*> inputs;
  for (const Tensor& p : parts) inputs.push_back(&p);
  return g->record(OpKind::concat_cols, std::move(inputs), {rows, total}, std::move(out), std::move(backward));
}

}  // namespace tedvae::ad
