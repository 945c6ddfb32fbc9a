// Copyright 2026 The tprcap Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_util.h"
#include "tprcap/autodiff.h"
#include "tprcap/error.h"
#include "tprcap/tensor.h"

namespace tprcap {
namespace {

using testing::OpGradError;
using testing::RandomTensor;

TEST(TensorTest, ShapeAndDataAgree) {
  Tensor t({2, 3, 4});
  EXPECT_EQ(t.size(), 24u);
  EXPECT_EQ(ShapeSize(t.shape()), t.size());
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>{1, 2, 3}), Error);
}

TEST(TensorTest, MatmulIdentity) {
  std::mt19937_64 rng(1);
  const Tensor x = RandomTensor({3, 5}, rng);
  EXPECT_EQ(Matmul(Tensor::Identity(3), x), x);
}

TEST(TensorTest, MatmulHandArithmetic) {
  const Tensor a = Tensor::Matrix({{1, 2}, {3, 4}});
  const Tensor b = Tensor::Matrix({{1}, {1}});
  EXPECT_EQ(Matmul(a, b), Tensor::Matrix({{3}, {7}}));
}

TEST(TensorTest, MatmulRejectsMismatchedExtents) {
  try {
    Matmul(Tensor({2, 3}), Tensor({2, 3}));
    FAIL() << "expected a dimension error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDimension);
  }
  try {
    Matmul(Tensor({2}), Tensor({2, 3}));
    FAIL() << "expected a rank error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kRank);
  }
}

TEST(TensorTest, OuterOfBasisVectors) {
  const Tensor e1 = Tensor::Vector({1, 0, 0});
  const Tensor e2 = Tensor::Vector({0, 1, 0});
  const Tensor m = Outer(e1, e2);
  for (size_t i = 0; i < 3; ++i) {
    for (size_t j = 0; j < 3; ++j) {
      EXPECT_EQ(m.at(i, j), (i == 0 && j == 1) ? 1.0 : 0.0);
    }
  }
}

TEST(TensorTest, OuterThenUnitVectorRecoversFiller) {
  std::mt19937_64 rng(2);
  const Tensor a = RandomTensor({4}, rng);
  Tensor b = RandomTensor({6}, rng);
  b = Scale(b, 1.0 / Norm(b));
  EXPECT_LT(MaxAbsDiff(MatVec(Outer(a, b), b), a), 1e-15);
}

TEST(TensorTest, ElementwiseIdentities) {
  std::mt19937_64 rng(3);
  const Tensor x = RandomTensor({7}, rng);
  EXPECT_EQ(Mul(x, Tensor({7}, 1.0)), x);
  EXPECT_EQ(Mul(x, Tensor({7}, 0.0)), Tensor({7}, 0.0));
  EXPECT_THROW(Add(x, Tensor({6})), Error);
}

TEST(TensorTest, Activations) {
  EXPECT_EQ(Sigmoid(Tensor::Vector({0.0}))[0], 0.5);
  const Tensor s = Softmax(Tensor({5}, 3.7));
  for (double p : s.data()) EXPECT_NEAR(p, 0.2, 1e-15);
  // Large logits must not overflow.
  const Tensor big = Softmax(Tensor::Vector({1000.0, 999.0, -1000.0}));
  EXPECT_TRUE(AllFinite(big));
  EXPECT_TRUE(AllFinite(Sigmoid(Tensor::Vector({-800.0, 800.0}))));
}

TEST(TensorTest, SoftmaxRowsSumToOne) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor s = Softmax(RandomTensor({17}, rng, -20, 20));
    EXPECT_NEAR(Sum(s), 1.0, 1e-12);
    for (double p : s.data()) EXPECT_GT(p, 0.0);
  }
}

TEST(TensorTest, Contract3Examples) {
  Tensor c({2, 3, 4});
  for (size_t i = 0; i < 2; ++i) {
    for (size_t j = 0; j < 3; ++j) c.at(i, j, 0) = 1.0;
  }
  const Tensor m = Contract3(c, Tensor::Vector({2.5, 0, 0, 0}));
  for (double x : m.data()) EXPECT_EQ(x, 2.5);
  std::mt19937_64 rng(5);
  EXPECT_EQ(Contract3(RandomTensor({2, 3, 4}, rng), Tensor({4})),
            Tensor({2, 3}));
}

TEST(TensorTest, VecStacksColumns) {
  const Tensor v = Vec(Tensor::Matrix({{1, 2}, {3, 4}}));
  EXPECT_EQ(v, Tensor::Vector({1, 3, 2, 4}));
  std::mt19937_64 rng(6);
  const Tensor m = RandomTensor({5, 5}, rng);
  EXPECT_EQ(Unvec(Vec(m), 5, 5), m);
  EXPECT_EQ(Transpose(Transpose(m)), m);
  EXPECT_EQ(m.Reshaped({25}).Reshaped({5, 5}), m);
}

TEST(AutodiffTest, MatmulGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(7);
  const double err =
      OpGradError([](const std::vector<Var>& v) { return MatMul(v[0], v[1]); },
                  {RandomTensor({5, 4}, rng), RandomTensor({4, 3}, rng)});
  EXPECT_LT(err, 1e-6);
}

TEST(AutodiffTest, OpGradients) {
  std::mt19937_64 rng(8);
  using Op = std::function<Var(const std::vector<Var>&)>;
  struct Case {
    const char* name;
    Op op;
    std::vector<Tensor> inputs;
  };
  const std::vector<Case> cases = {
      {"matvec",
       [](auto& v) { return MatVec(v[0], v[1]); },
       {RandomTensor({4, 6}, rng), RandomTensor({6}, rng)}},
      {"outer",
       [](auto& v) { return Outer(v[0], v[1]); },
       {RandomTensor({3}, rng), RandomTensor({5}, rng)}},
      {"add",
       [](auto& v) { return Add(v[0], v[1]); },
       {RandomTensor({2, 3}, rng), RandomTensor({2, 3}, rng)}},
      {"sub",
       [](auto& v) { return Sub(v[0], v[1]); },
       {RandomTensor({4}, rng), RandomTensor({4}, rng)}},
      {"mul",
       [](auto& v) { return Mul(v[0], v[1]); },
       {RandomTensor({3, 2}, rng), RandomTensor({3, 2}, rng)}},
      {"scale",
       [](auto& v) { return Scale(v[0], -1.7); },
       {RandomTensor({5}, rng)}},
      {"sigmoid",
       [](auto& v) { return Sigmoid(v[0]); },
       {RandomTensor({6}, rng)}},
      {"tanh", [](auto& v) { return Tanh(v[0]); }, {RandomTensor({6}, rng)}},
      {"softmax",
       [](auto& v) { return Softmax(v[0]); },
       {RandomTensor({6}, rng)}},
      {"log_softmax",
       [](auto& v) { return LogSoftmax(v[0]); },
       {RandomTensor({6}, rng)}},
      {"contract3",
       [](auto& v) { return Contract3(v[0], v[1]); },
       {RandomTensor({3, 4, 5}, rng), RandomTensor({5}, rng)}},
      {"vec", [](auto& v) { return Vec(v[0]); }, {RandomTensor({3, 4}, rng)}},
      {"reshape",
       [](auto& v) { return Reshape(v[0], {12}); },
       {RandomTensor({3, 4}, rng)}},
      {"transpose",
       [](auto& v) { return Transpose(v[0]); },
       {RandomTensor({3, 4}, rng)}},
      {"slice",
       [](auto& v) { return Slice(v[0], 2, 3); },
       {RandomTensor({8}, rng)}},
      {"pick", [](auto& v) { return Pick(v[0], 3); }, {RandomTensor({8}, rng)}},
      {"column",
       [](auto& v) { return Column(v[0], 1); },
       {RandomTensor({4, 3}, rng)}},
      {"sum_all",
       [](auto& v) { return SumAll(v[0]); },
       {RandomTensor({2, 5}, rng)}},
      {"add_n",
       [](auto& v) { return AddN({v[0], v[1], v[0]}); },
       {RandomTensor({4}, rng), RandomTensor({4}, rng)}},
  };
  for (const Case& c : cases) {
    EXPECT_LT(OpGradError(c.op, c.inputs), 1e-4) << c.name;
  }
}

TEST(AutodiffTest, SumGradientIsOnes) {
  Graph g;
  Tensor x = Tensor::Vector({0.3, -2, 5});
  Var p = g.Parameter("x", &x);
  g.Backward(SumAll(p));
  EXPECT_EQ(*g.grad(p), Tensor({3}, 1.0));
}

TEST(AutodiffTest, HalfSquaredNormGradientIsInput) {
  Graph g;
  Tensor x = Tensor::Vector({0.3, -2, 5});
  Var p = g.Parameter("x", &x);
  g.Backward(Scale(SumAll(Mul(p, p)), 0.5));
  EXPECT_EQ(*g.grad(p), x);
}

TEST(AutodiffTest, RootGradientIsOne) {
  Graph g;
  Tensor x = Tensor::Vector({1, 2});
  Var root = SumAll(g.Parameter("x", &x));
  g.Backward(root);
  EXPECT_EQ(g.grad(root)->item(), 1.0);
}

TEST(AutodiffTest, SharedParameterGradientsAccumulate) {
  Graph g;
  Tensor x = Tensor::Vector({1.5, -0.5});
  Var a = g.Parameter("x", &x);
  Var b = g.Parameter("x", &x);
  g.Backward(SumAll(Add(Scale(a, 2.0), Scale(b, 3.0))));
  EXPECT_EQ(g.ParameterGradients().at("x"), Tensor({2}, 5.0));
}

TEST(AutodiffTest, ChainVisitsEveryNodeOnce) {
  for (size_t k : {1u, 5u, 40u}) {
    Graph g;
    Tensor x = Tensor::Vector({0.1, 0.2});
    Var v = g.Parameter("x", &x);
    for (size_t i = 0; i < k; ++i) v = Tanh(v);
    g.Backward(SumAll(v));
    // k tanh nodes, the sum, and the parameter leaf.
    EXPECT_EQ(g.backward_visits(), k + 1);
  }
}

TEST(AutodiffTest, SecondBackwardNeedsReset) {
  Graph g;
  Tensor x = Tensor::Vector({1, 2});
  Var root = SumAll(g.Parameter("x", &x));
  g.Backward(root);
  try {
    g.Backward(root);
    FAIL() << "expected a contract error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kContract);
  }
  g.ResetGradients();
  g.Backward(root);
  EXPECT_EQ(g.grad(root)->item(), 1.0);
}

TEST(AutodiffTest, BackwardNeedsScalarRoot) {
  Graph g;
  Tensor x = Tensor::Vector({1, 2});
  Var p = g.Parameter("x", &x);
  EXPECT_THROW(g.Backward(Tanh(p)), Error);
}

TEST(FiniteDiffTest, QuadraticAndLinear) {
  double p = 3.0;
  EXPECT_NEAR(CentralDifference([&] { return p * p; }, p, 1e-5), 6.0, 1e-8);
  EXPECT_EQ(p, 3.0);
  const Tensor g = FiniteDiff([](const Tensor& t) { return 5.0 * t[0]; },
                              Tensor::Vector({2.0}), 1e-5);
  EXPECT_NEAR(g[0], 5.0, 1e-9);
}

}  // namespace
}  // namespace tprcap
