#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "tedvae/autodiff/adam.hpp"
#include "tedvae/autodiff/gradient_check.hpp"
#include "tedvae/autodiff/ops.hpp"

using namespace tedvae::ad;

namespace {

std::vector<double> values_of(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

double central_difference(const std::function<double(double)>& f, double x, double h = 1e-5) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace

TEST(Unary, KnownValues) {
  EXPECT_EQ(elu(Tensor::scalar(0.0)).item(), 0.0);
  EXPECT_EQ(sigmoid(Tensor::scalar(0.0)).item(), 0.5);
  EXPECT_NEAR(elu(Tensor::scalar(-1.0)).item(), std::exp(-1.0) - 1.0, 1e-15);
  EXPECT_NEAR(elu(Tensor::scalar(-1.0)).item(), -0.6321, 1e-4);
}

TEST(Unary, EluDerivativeAtMinusOneMatchesFiniteDifference) {
  Parameter w("w", {}, {-1.0});
  Graph g;
  const GradientSet grads = g.backward(elu(g.parameter(w)));
  const double numeric = central_difference([](double x) { return x > 0 ? x : std::exp(x) - 1.0; }, -1.0);
  EXPECT_NEAR(grads.of(w)[0], numeric, 1e-9);
  EXPECT_NEAR(grads.of(w)[0], 0.3679, 1e-4);
}

TEST(Unary, DomainErrorsAreExplicit) {
  EXPECT_THROW(log(Tensor({2}, {1.0, 0.0})), std::domain_error);
  EXPECT_THROW(log(Tensor::scalar(-3.0)), std::domain_error);
  EXPECT_THROW(sqrt(Tensor::scalar(-1e-300)), std::domain_error);
  EXPECT_NO_THROW(sqrt(Tensor::scalar(0.0)));
}

TEST(Unary, SoftplusAndSigmoidStayFiniteForLargeInputs) {
  const Tensor x({4}, {-800.0, -40.0, 40.0, 800.0});
  for (double v : softplus(x).values()) EXPECT_TRUE(std::isfinite(v));
  for (double v : sigmoid(x).values()) EXPECT_TRUE(std::isfinite(v));
  EXPECT_EQ(softplus(x).values()[3], 800.0);
}

TEST(Binary, HandExamples) {
  EXPECT_EQ(values_of(add(Tensor({2}, {1, 2}), Tensor({2}, {3, 4}))), (std::vector<double>{4, 6}));
  const Tensor p = matmul(Tensor({2, 2}, {1, 2, 3, 4}), Tensor({2, 1}, {5, 6}));
  EXPECT_EQ(p.shape(), (Shape{2, 1}));
  EXPECT_EQ(values_of(p), (std::vector<double>{17, 39}));
}

TEST(Binary, IdentityMatmul) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  std::vector<double> a(9);
  for (double& v : a) v = n(rng);
  const Tensor eye({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  EXPECT_EQ(values_of(matmul(eye, Tensor({3, 3}, a))), a);
}

TEST(Binary, ShapeMismatchNamesBothShapes) {
  try {
    matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3}));
    FAIL() << "expected a shape error";
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find(to_string(Shape{2, 3})), std::string::npos) << msg;
  }
  EXPECT_THROW(add(Tensor::zeros({2}), Tensor::zeros({3})), std::invalid_argument);
  EXPECT_THROW(broadcast_add(Tensor::zeros({2, 3}), Tensor::zeros({2})), std::invalid_argument);
}

TEST(Binary, BroadcastAddAcceptsVectorAndRowBias) {
  const Tensor x({2, 2}, {1, 2, 3, 4});
  EXPECT_EQ(values_of(broadcast_add(x, Tensor({2}, {10, 20}))), (std::vector<double>{11, 22, 13, 24}));
  EXPECT_EQ(values_of(broadcast_add(x, Tensor({1, 2}, {10, 20}))), (std::vector<double>{11, 22, 13, 24}));
}

TEST(Binary, ZeroSizedMatmul) {
  const Tensor p = matmul(Tensor::zeros({3, 0}), Tensor::zeros({0, 2}));
  EXPECT_EQ(p.shape(), (Shape{3, 2}));
  for (double v : p.values()) EXPECT_EQ(v, 0.0);
}

TEST(Reduce, HandExamples) {
  EXPECT_EQ(sum(Tensor({3}, {1, 2, 3})).item(), 6.0);
  EXPECT_EQ(mean(Tensor({2}, {2, 4})).item(), 3.0);
  const Tensor m = mean(Tensor({2, 2}, {1, 2, 3, 4}), 0);
  EXPECT_EQ(values_of(m), (std::vector<double>{2, 3}));
  EXPECT_EQ(values_of(sum(Tensor({2, 2}, {1, 2, 3, 4}), 1)), (std::vector<double>{3, 7}));
  EXPECT_THROW(sum(Tensor::zeros({2, 2}), 2), std::invalid_argument);
}

TEST(Backward, SumOfSquares) {
  Parameter w("w", {2}, {1.0, 2.0});
  Graph g;
  const GradientSet grads = g.backward(sum(square(g.parameter(w))));
  EXPECT_EQ(std::vector<double>(grads.of(w).begin(), grads.of(w).end()), (std::vector<double>{2.0, 4.0}));
}

TEST(Backward, SigmoidTimesConstant) {
  Parameter w("w", {1}, {0.0});
  Graph g;
  const GradientSet grads = g.backward(sum(mul(sigmoid(g.parameter(w)), Tensor({1}, {1.0}))));
  EXPECT_DOUBLE_EQ(grads.of(w)[0], 0.25);
}

TEST(Backward, NonScalarLossIsRejected) {
  Parameter w("w", {2}, {1.0, 2.0});
  Graph g;
  const Tensor y = square(g.parameter(w));
  EXPECT_THROW(g.backward(y), std::invalid_argument);
}

TEST(Backward, UnreachedParameterGetsExactZero) {
  Parameter used("used", {2}, {1.0, -1.0});
  Parameter bound("bound", {2}, {3.0, 4.0});
  Parameter absent("absent", {3}, {1.0, 2.0, 3.0});
  Graph g;
  const Tensor u = g.parameter(used);
  const Tensor b = g.parameter(bound);
  (void)square(b);
  std::vector<Parameter*> extra{&absent};
  const GradientSet grads = g.backward(sum(exp(u)), extra);
  for (double v : grads.of(bound)) EXPECT_EQ(v, 0.0);
  ASSERT_TRUE(grads.contains(absent));
  for (double v : grads.of(absent)) EXPECT_EQ(v, 0.0);
}

TEST(Backward, SharedParameterAccumulates) {
  Parameter w("w", {1}, {3.0});
  Graph g;
  const Tensor a = g.parameter(w);
  const Tensor b = g.parameter(w);
  EXPECT_EQ(a.node(), b.node());
  const GradientSet grads = g.backward(sum(mul(a, b)));
  EXPECT_DOUBLE_EQ(grads.of(w)[0], 6.0);
}

TEST(Backward, ConstantsAreNotTracked) {
  const Tensor c = exp(Tensor({2}, {0.0, 1.0}));
  EXPECT_FALSE(c.tracked());
}

TEST(Backward, ForwardIsDeterministic) {
  Parameter w("w", {3, 2}, {0.1, -0.2, 0.3, 0.4, -0.5, 0.6});
  auto run = [&] {
    Graph g;
    return values_of(elu(matmul(Tensor({1, 3}, {1.0, 2.0, 3.0}), g.parameter(w))));
  };
  EXPECT_EQ(run(), run());
}

TEST(GradientCheck, TwoLayerEluMlp) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 0.7);
  auto random = [&](std::string name, Shape s) {
    std::vector<double> v(numel(s));
    for (double& e : v) e = n(rng);
    return Parameter(std::move(name), std::move(s), std::move(v));
  };
  Parameter w0 = random("w0", {3, 5}), b0 = random("b0", {5}), w1 = random("w1", {5, 2}), b1 = random("b1", {2});
  std::vector<double> xv(12);
  for (double& e : xv) e = n(rng);
  const Tensor x({4, 3}, xv);
  auto loss = [&](Graph& g) {
    const Tensor h = elu(broadcast_add(matmul(x, g.parameter(w0)), g.parameter(b0)));
    const Tensor o = broadcast_add(matmul(h, g.parameter(w1)), g.parameter(b1));
    return mean(square(o));
  };
  std::vector<Parameter*> params{&w0, &b0, &w1, &b1};
  const GradientCheckReport r = gradient_check(loss, params);
  EXPECT_TRUE(r.passed) << r.max_relative_error;
  EXPECT_LE(r.max_relative_error, 1e-4);
}

TEST(GradientCheck, LinearMseIsTight) {
  Parameter w("w", {2, 1}, {0.3, -0.7});
  const Tensor x({3, 2}, {1, 2, -1, 0.5, 2, 2});
  const Tensor y({3, 1}, {1, 0, -1});
  std::vector<Parameter*> params{&w};
  GradientCheckOptions opt;
  opt.relative_tolerance = 1e-6;
  const auto r = gradient_check([&](Graph& g) { return mean(square(sub(matmul(x, g.parameter(w)), y))); }, params, opt);
  EXPECT_TRUE(r.passed) << r.max_relative_error;
}

TEST(GradientCheck, CorruptedDerivativeFails) {
  Parameter w("w", {3}, {0.2, -0.4, 1.1});
  std::vector<Parameter*> params{&w};
  const auto r = gradient_check(
      [&](Graph& g) {
        return sum(map_unary(g.parameter(w), [](double v) { return std::sin(v); },
                             [](double v) { return std::cos(v) * 1.01; }));
      },
      params);
  EXPECT_FALSE(r.passed);
}

// Every op over random shapes and values.
TEST(GradientCheck, EveryOpOnRandomInputs) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> dim(1, 4);
  std::normal_distribution<double> n;
  std::uniform_real_distribution<double> pos(0.5, 2.0);
  int checked = 0;
  for (int trial = 0; trial < 120; ++trial) {
    const std::size_t r = dim(rng), c = dim(rng), k = dim(rng);
    auto fill = [&](Shape s, bool positive = false) {
      std::vector<double> v(numel(s));
      for (double& e : v) e = positive ? pos(rng) : n(rng);
      return v;
    };
    Parameter a("a", {r, c}, fill({r, c}));
    Parameter b("b", {r, c}, fill({r, c}, true));
    Parameter m("m", {c, k}, fill({c, k}));
    Parameter bias("bias", {c}, fill({c}));
    const Tensor weights({r, k}, fill({r, k}));
    const int op = trial % 12;
    auto loss = [&](Graph& g) {
      const Tensor A = g.parameter(a), B = g.parameter(b);
      Tensor out;
      switch (op) {
        case 0: out = elu(A); break;
        case 1: out = softplus(A); break;
        case 2: out = sigmoid(A); break;
        case 3: out = mul(exp(A), log(B)); break;
        case 4: out = add(neg(A), sqrt(B)); break;
        case 5: out = div(A, B); break;
        case 6: out = sub(square(A), B); break;
        case 7: return sum(mul(matmul(A, g.parameter(m)), weights));
        case 8: out = broadcast_add(A, g.parameter(bias)); break;
        case 9: out = scale(add_scalar(A, 0.3), -1.7); break;
        case 10: return sum(mul(mean(A, 0), sum(B, 0)));
        default: {
          const std::array<Tensor, 2> parts{slice_cols(A, 0, (c + 1) / 2), B};
          out = concat_cols(parts);
          return sum(square(out));
        }
      }
      return sum(mul(square(out), Tensor(out.shape(), std::vector<double>(out.size(), 0.5))));
    };
    std::vector<Parameter*> params{&a, &b};
    if (op == 7) params.push_back(&m);
    if (op == 8) params.push_back(&bias);
    const auto report = gradient_check(loss, params);
    EXPECT_TRUE(report.passed) << "op " << op << " trial " << trial << " err " << report.max_relative_error;
    ++checked;
  }
  EXPECT_GE(checked, 100);
}

TEST(Adam, ZeroGradientIsAFixedPoint) {
  Parameter w("w", {2}, {1.5, -2.0});
  std::vector<Parameter*> params{&w};
  AdamState state;
  GradientSet grads;
  grads.ensure(w);
  adam_step(params, grads, state);
  EXPECT_EQ(state.step, 1u);
  EXPECT_EQ(w.values()[0], 1.5);
  EXPECT_EQ(w.values()[1], -2.0);
}

TEST(Adam, FirstStepHandTrace) {
  Parameter w("w", {1}, {0.0});
  std::vector<Parameter*> params{&w};
  AdamState state;
  state.config.learning_rate = 0.1;
  GradientSet grads;
  const double g1 = 1.0;
  grads.accumulate(w, std::span<const double>(&g1, 1));
  adam_step(params, grads, state);
  // m = 0.1, v = 0.001; m_hat = 1, v_hat = 1; step = 0.1 / (1 + 1e-8).
  EXPECT_NEAR(w.values()[0], -0.1 / (1.0 + 1e-8), 1e-15);
  EXPECT_EQ(grads.size(), 0u);

  const double g2 = -2.0;
  grads.accumulate(w, std::span<const double>(&g2, 1));
  adam_step(params, grads, state);
  const double m = 0.9 * 0.1 + 0.1 * g2;
  const double v = 0.999 * 0.001 + 0.001 * g2 * g2;
  const double expected = -0.1 / (1.0 + 1e-8) - 0.1 * (m / (1 - 0.81)) / (std::sqrt(v / (1 - 0.999 * 0.999)) + 1e-8);
  EXPECT_NEAR(w.values()[0], expected, 1e-15);
}

TEST(Adam, MissingGradientThrows) {
  Parameter w("w", {1}, {0.0});
  std::vector<Parameter*> params{&w};
  AdamState state;
  GradientSet grads;
  EXPECT_THROW(adam_step(params, grads, state), std::invalid_argument);
}

TEST(Adam, ConvergesOnScalarQuadratic) {
  Parameter w("w", {1}, {0.0});
  std::vector<Parameter*> params{&w};
  AdamState state;
  state.config.learning_rate = 0.1;
  for (int i = 0; i < 100; ++i) {
    Graph g;
    GradientSet grads = g.backward(sum(square(add_scalar(g.parameter(w), -3.0))));
    adam_step(params, grads, state);
  }
  EXPECT_LT(std::abs(w.values()[0] - 3.0), 0.1);
}
