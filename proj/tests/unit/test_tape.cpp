#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "huihen/grad_check.hpp"
#include "huihen/rng.hpp"
#include "huihen/tape.hpp"

using namespace huihen;

TEST(Tape, SigmoidOfZeroIsHalf) {
  Tape<double> t;
  Var x = t.scalar_constant(0.0);
  EXPECT_EQ(t.scalar(t.sigmoid(x)), 0.5);
}

TEST(Tape, ConcatJoinsValuesAndShape) {
  Tape<double> t;
  const std::vector<double> a{1, 2}, b{3};
  Var c = t.concat({t.constant(a), t.constant(b)});
  EXPECT_EQ(t.shape(c), Shape::vec(3));
  const auto v = t.value(c);
  EXPECT_EQ(std::vector<double>(v.begin(), v.end()), (std::vector<double>{1, 2, 3}));
}

TEST(Tape, IdentityMatmulReturnsVector) {
  Tape<double> t;
  const std::vector<double> eye{1, 0, 0, 0, 1, 0, 0, 0, 1}, x{0.3, -2.0, 7.5};
  Var y = t.matmul(t.constant(eye, Shape::mat(3, 3)), t.constant(x));
  const auto v = t.value(y);
  EXPECT_EQ(std::vector<double>(v.begin(), v.end()), x);
}

TEST(Tape, MatmulShapeMismatchThrows) {
  Tape<double> t;
  const std::vector<double> m(6, 1.0), x(4, 1.0);
  EXPECT_THROW(t.matmul(t.constant(m, Shape::mat(2, 3)), t.constant(x)), ShapeError);
}

TEST(Tape, GradOfSumIsOnes) {
  Tape<double> t;
  const std::vector<double> theta{0.1, -3, 2, 5, 9};
  Var p = t.parameter(theta, Shape::vec(5));
  Var loss = t.sum(p);
  t.backward(loss);
  for (double g : t.grad(p)) EXPECT_EQ(g, 1.0);
}

TEST(Tape, GradOfSigmoidAtZero) {
  Tape<double> t;
  const std::vector<double> theta{0.0};
  Var p = t.parameter(theta, Shape::scalar());
  t.backward(t.sigmoid(p));
  EXPECT_DOUBLE_EQ(t.grad(p)[0], 0.25);
}

TEST(Tape, NonFiniteValueRaises) {
  Tape<double> t;
  const std::vector<double> theta{-1.0};
  Var p = t.parameter(theta, Shape::scalar());
  EXPECT_THROW(t.log(p), NonFiniteError);
}

TEST(Tape, ClearKeepsNothing) {
  Tape<double> t;
  t.scalar_constant(1.0);
  t.clear();
  EXPECT_EQ(t.size(), 0u);
}

TEST(Tape, ReluSubgradientAtZeroIsZero) {
  Tape<double> t;
  const std::vector<double> theta{0.0};
  Var p = t.parameter(theta, Shape::scalar());
  t.backward(t.relu(p));
  EXPECT_EQ(t.grad(p)[0], 0.0);
}

TEST(Tape, PreluSubgradientAtZeroIsAlpha) {
  Tape<double> t;
  const std::vector<double> x{0.0}, a{0.3};
  Var px = t.parameter(x, Shape::scalar());
  Var pa = t.parameter(a, Shape::scalar());
  t.backward(t.prelu(px, pa));
  EXPECT_DOUBLE_EQ(t.grad(px)[0], 0.3);
}

TEST(Tape, RandomCompositeMatchesFiniteDifferences) {
  Rng rng(11);
  GradCheckOptions opts;
  opts.tolerance = 1e-5;
  std::size_t checked = 0;
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<ParamArray> theta;
    auto arr = [&](const char* n, Shape s) {
      ParamArray p{n, s, std::vector<double>(s.size())};
      for (auto& v : p.data) v = rng.normal(0.0, 0.7);
      theta.push_back(p);
    };
    arr("w1", Shape::mat(4, 3));
    arr("w2", Shape::mat(3, 4));
    arr("w3", Shape::mat(1, 3));
    arr("x", Shape::vec(3));
    auto rep = grad_check(
        [](Tape<double>& t, const std::vector<Var>& v) {
          Var h1 = t.tanh(t.matmul(v[0], v[3]));
          Var h2 = t.softplus(t.matmul(v[1], h1));
          Var h3 = t.sigmoid(t.matmul(v[2], h2));
          return t.sum(t.mul(h3, h3));
        },
        theta, opts);
    ASSERT_FALSE(rep.skipped);
    EXPECT_LT(rep.max_rel_error, 1e-5) << "trial " << trial;
    checked += rep.checked;
  }
  EXPECT_GT(checked, 0u);
}

TEST(GradCheck, LinearFunctionIsNearlyExact) {
  std::vector<ParamArray> theta{{"x", Shape::vec(4), {1.0, -2.0, 0.5, 3.0}}};
  const std::vector<double> c{2.0, 3.0, -1.0, 0.25};
  auto rep = grad_check(
      [&](Tape<double>& t, const std::vector<Var>& v) { return t.sum(t.mul(v[0], t.constant(c))); }, theta);
  EXPECT_LT(rep.max_rel_error, 1e-9);
}

TEST(GradCheck, PointAtPreluKinkIsSkipped) {
  std::vector<ParamArray> theta{{"x", Shape::scalar(), {0.0}}, {"a", Shape::scalar(), {0.5}}};
  auto rep = grad_check([](Tape<double>& t, const std::vector<Var>& v) { return t.prelu(v[0], v[1]); }, theta);
  EXPECT_TRUE(rep.skipped);
}

TEST(Tape, FloatTapeRunsSameGraph) {
  Tape<float> t;
  const std::vector<float> theta{0.0f, 1.0f};
  Var p = t.parameter(theta, Shape::vec(2));
  t.backward(t.sum(t.sigmoid(p)));
  EXPECT_FLOAT_EQ(t.grad(p)[0], 0.25f);
}
