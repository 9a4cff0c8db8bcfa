#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "topicpara/error.hpp"
#include "topicpara/parameter.hpp"
#include "topicpara/tape.hpp"
#include "topicpara/tensor.hpp"

using namespace topicpara;

TEST(Tensor, DataLengthMatchesShape) {
  const Tensor t({2, 3, 4});
  EXPECT_EQ(t.size(), 24u);
  EXPECT_EQ(element_count({2, 3, 4}), 24u);
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
  EXPECT_THROW(Tensor(Shape{}), ShapeError);
}

TEST(Tensor, RowMajorLayout) {
  const Tensor m = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
  EXPECT_EQ(m.rows(), 2u);
  EXPECT_EQ(m.cols(), 3u);
  EXPECT_EQ(m[4], 5.0);
  EXPECT_EQ(m.at(1, 2), 6.0);
  EXPECT_EQ(m.row(1)[0], 4.0);
  EXPECT_THROW(Tensor::matrix({{1, 2}, {3}}), ShapeError);
}

TEST(Tensor, ReshapeKeepsValues) {
  const Tensor m = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
  const Tensor r = m.reshaped({3, 2});
  EXPECT_EQ(r.at(2, 1), 6.0);
  EXPECT_EQ(r.data(), m.data());
  EXPECT_THROW(m.reshaped({4, 2}), ShapeError);
}

TEST(Tensor, FinitenessAndItem) {
  Tensor t = Tensor::vector({1, 2});
  EXPECT_TRUE(t.all_finite());
  t[1] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_FALSE(t.all_finite());
  EXPECT_THROW(t.item(), ShapeError);
  EXPECT_EQ(Tensor::scalar(3.5).item(), 3.5);
}

TEST(Tensor, ShapeHelpers) {
  EXPECT_EQ(to_string({6, 500}), "[6x500]");
  EXPECT_THROW(Tensor::vector({1, 2}).rows(), ShapeError);
  EXPECT_THROW(Tensor::vector({1, 2}).dim(1), ShapeError);
  EXPECT_THROW(require_same_shape(Tensor({2}), Tensor({3}), "op"), ShapeError);
  const std::vector<double> a = {1, 2, 3}, b = {4, 5, 6};
  EXPECT_EQ(dot(a, b), 32.0);
}

TEST(Tensor, EqualityIsBitwise) {
  EXPECT_EQ(Tensor::vector({1, 2}), Tensor::vector({1, 2}));
  EXPECT_NE(Tensor::vector({1, 2}), Tensor::vector({1, 2 + 1e-15}));
  EXPECT_NE(Tensor({2, 1}), Tensor({1, 2}));
}

TEST(Parameter, GradMatchesValueShape) {
  Parameter p("w", Tensor({3, 2}, 1.0));
  EXPECT_EQ(p.grad.shape(), p.value.shape());
  p.grad[0] = 5;
  p.zero_grad();
  EXPECT_EQ(p.grad, Tensor({3, 2}));
}

TEST(Parameter, UniformInitWithinFanInBound) {
  RngStream rng(1);
  Parameter p("w", Tensor({50, 40}));
  init_uniform(p, 25, rng);
  double lo = 1, hi = -1;
  for (double v : p.value.values()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  EXPECT_GE(lo, -0.2);
  EXPECT_LE(hi, 0.2);
  EXPECT_LT(lo, -0.19);
  EXPECT_GT(hi, 0.19);
}

TEST(Parameter, DuplicateNamesRejected) {
  Parameter a("x", Tensor({1})), b("x", Tensor({1})), c("y", Tensor({1}));
  EXPECT_THROW(require_unique_names({&a, &b}), Error);
  EXPECT_NO_THROW(require_unique_names({&a, &c}));
}

TEST(Tape, NonFiniteValuesAreErrors) {
  Tape tape;
  EXPECT_THROW(tape.constant(Tensor::vector({1, std::numeric_limits<double>::infinity()})), NumericError);
  Parameter p("p", Tensor::vector({std::nan("")}));
  EXPECT_THROW(tape.param(p), NumericError);
  Var x = tape.constant(Tensor::vector({1}));
  EXPECT_THROW(tape.record("bad", Tensor::vector({std::nan("")}), {x}, nullptr), NumericError);
}

TEST(Tape, BackwardNeedsScalarRoot) {
  Tape tape;
  Var x = tape.constant(Tensor::vector({1, 2}));
  EXPECT_THROW(tape.backward(x), ShapeError);
}

TEST(Tape, ForeignVarRejected) {
  Tape a, b;
  Var x = a.constant(Tensor::vector({1}));
  EXPECT_THROW(b.grad(x), Error);
  EXPECT_THROW(Var().value(), Error);
}

TEST(Tape, ConstParameterReceivesNoGradient) {
  Parameter p("p", Tensor::vector({2.0}));
  Tape tape;
  const Parameter& frozen = p;
  Var x = tape.param(frozen);
  EXPECT_FALSE(tape.requires_grad(x));
}
