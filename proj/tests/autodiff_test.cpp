// Copyright 2026 The molddpm Authors
// SPDX-License-Identifier: Apache-2.0

#include "molddpm/autodiff.hpp"
#include "molddpm/random.hpp"

#include <gtest/gtest.h>

#include <functional>

namespace molddpm::ad {
namespace {

using Build = std::function<Var(Tape&, const std::vector<Var>&)>;

// Compares reverse-mode gradients of sum(w .* f(inputs)) against central
// differences, with a fixed random weighting w so every output entry counts.
void expect_gradients(const std::vector<Matrix>& inputs, const Build& f, double tol = 1e-7) {
  Rng rng = make_rng(99);
  std::vector<Parameter> params;
  for (const Matrix& m : inputs) params.push_back({m});
  Matrix weights;
  const auto evaluate = [&](Tape& tape, Gradients* grads) {
    std::vector<Var> vars;
    for (const Parameter& p : params) vars.push_back(tape.parameter(p));
    const Var out = f(tape, vars);
    if (weights.size() == 0) weights = standard_normal(out.rows(), out.cols(), rng);
    const Var loss = sum(mul(out, tape.constant(weights)));
    if (grads) *grads = tape.backward(loss);
    return loss.scalar();
  };
  Tape tape;
  Gradients grads;
  evaluate(tape, &grads);
  constexpr double h = 1e-6;
  for (Parameter& p : params) {
    Matrix numeric(p.value.rows(), p.value.cols());
    for (Eigen::Index k = 0; k < p.value.size(); ++k) {
      const double saved = p.value(k);
      p.value(k) = saved + h;
      Tape plus;
      const double up = evaluate(plus, nullptr);
      p.value(k) = saved - h;
      Tape minus;
      const double down = evaluate(minus, nullptr);
      p.value(k) = saved;
      numeric(k) = (up - down) / (2 * h);
    }
    ASSERT_TRUE(grads.count(&p));
    const Matrix& analytic = grads.at(&p);
    const double scale = std::max({1.0, analytic.norm(), numeric.norm()});
    EXPECT_LT((analytic - numeric).norm() / scale, tol);
  }
}

Matrix randn(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  return standard_normal(r, c, rng);
}

TEST(Autodiff, Elementwise) {
  const Matrix a = randn(3, 4, 1), b = randn(3, 4, 2);
  expect_gradients({a, b}, [](Tape&, const auto& v) { return add(v[0], v[1]); });
  expect_gradients({a, b}, [](Tape&, const auto& v) { return sub(v[0], v[1]); });
  expect_gradients({a, b}, [](Tape&, const auto& v) { return mul(v[0], v[1]); });
  expect_gradients({a}, [](Tape&, const auto& v) { return scale(v[0], -2.5); });
  expect_gradients({a}, [](Tape&, const auto& v) { return gelu(v[0]); });
}

TEST(Autodiff, LinearAlgebra) {
  expect_gradients({randn(3, 4, 1), randn(4, 2, 2)},
                   [](Tape&, const auto& v) { return matmul(v[0], v[1]); });
  expect_gradients({randn(3, 4, 1)}, [](Tape&, const auto& v) { return transpose(v[0]); });
  expect_gradients({randn(3, 4, 1), randn(1, 4, 2)},
                   [](Tape&, const auto& v) { return add_row(v[0], v[1]); });
  expect_gradients({randn(1, 4, 1)}, [](Tape&, const auto& v) { return repeat_rows(v[0], 3); });
}

TEST(Autodiff, Normalizations) {
  const Matrix x = randn(3, 5, 1);
  expect_gradients({x}, [](Tape&, const auto& v) { return softmax_rows(v[0]); });
  expect_gradients({x}, [](Tape&, const auto& v) { return log_softmax_rows(v[0]); });
  expect_gradients({x, randn(1, 5, 2), randn(1, 5, 3)}, [](Tape&, const auto& v) {
    return layer_norm_rows(v[0], v[1], v[2]);
  });
}

TEST(Autodiff, Reductions) {
  const Matrix x = randn(3, 5, 1);
  expect_gradients({x}, [](Tape&, const auto& v) { return sum(v[0]); });
  expect_gradients({x}, [](Tape&, const auto& v) { return mean_rows(v[0]); });
  expect_gradients({x}, [](Tape&, const auto& v) { return squared_norm(v[0]); });
  expect_gradients({x}, [](Tape&, const auto& v) { return pick_sum(v[0], {4, 0, 2}); });
}

TEST(Autodiff, Reshaping) {
  const Matrix x = randn(4, 5, 1);
  expect_gradients({x}, [](Tape&, const auto& v) { return slice_rows(v[0], 1, 2); });
  expect_gradients({x}, [](Tape&, const auto& v) { return slice_cols(v[0], 2, 3); });
  expect_gradients({x, randn(4, 2, 2)},
                   [](Tape&, const auto& v) { return concat_cols({v[0], v[1]}); });
  expect_gradients({x, randn(1, 5, 2)},
                   [](Tape&, const auto& v) { return concat_rows({v[0], v[1]}); });
  expect_gradients({x}, [](Tape&, const auto& v) { return gather_rows(v[0], {3, 0, 3}); });
  Eigen::MatrixXi cats(2, 2);
  cats << 0, 2, 1, 0;
  expect_gradients({randn(3, 2, 3)},
                   [cats](Tape&, const auto& v) { return gather_grid(v[0], cats, 1); });
}

TEST(Autodiff, SharedSubexpressionAccumulates) {
  Parameter p{Matrix::Constant(1, 1, 3.0)};
  Tape tape;
  const Var x = tape.parameter(p);
  const Gradients g = tape.backward(sum(mul(x, x) + x));
  EXPECT_DOUBLE_EQ(g.at(&p)(0, 0), 7.0);
}

TEST(Autodiff, ConstantsGetNoGradient) {
  Parameter p{Matrix::Ones(2, 2)};
  Tape tape;
  const Var c = tape.constant(Matrix::Ones(2, 2));
  const Gradients g = tape.backward(sum(tape.parameter(p) + c));
  EXPECT_EQ(g.size(), 1u);
  EXPECT_TRUE(g.at(&p).isOnes());
}

TEST(Autodiff, ParameterSet) {
  ParameterSet set;
  set.add("a", Matrix::Zero(2, 3));
  set.add("b", Matrix::Zero(1, 4));
  EXPECT_EQ(set.scalar_count(), 10u);
  EXPECT_TRUE(set.contains("a"));
  EXPECT_TRUE(set.all_finite());
  set.at("b").value(0, 0) = NAN;
  EXPECT_FALSE(set.all_finite());
}

}  // namespace
}  // namespace molddpm::ad
