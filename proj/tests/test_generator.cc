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
#include <vector>

#include "test_util.h"
#include "tprcap/autodiff.h"
#include "tprcap/error.h"
#include "tprcap/generator.h"
#include "tprcap/tpr.h"

namespace tprcap {
namespace {

using testing::RandomTensor;

constexpr size_t kD = 8;   // role dim, also embedding dim
constexpr size_t kM = 6;   // hidden
constexpr size_t kKv = 5;  // feature

struct Params {
  std::vector<Tensor> tensors;  // order matches Vars()

  static Params Random(std::mt19937_64& rng, double scale = 0.5) {
    Params p;
    for (const Shape& s : Shapes()) {
      p.tensors.push_back(RandomTensor(s, rng, -scale, scale));
    }
    return p;
  }
  static Params Zero() {
    Params p;
    for (const Shape& s : Shapes()) p.tensors.emplace_back(s);
    return p;
  }
  static std::vector<Shape> Shapes() {
    return {{kD, kM},       {kD, kD * kD}, {kD},          {kKv, kM},
            {kKv, kD * kD}, {kKv},         {kD, kD, kKv}, {kD, kD}};
  }
};

GeneratorVars MakeVars(Graph& g, const std::vector<Var>& v) {
  GeneratorVars p;
  p.w_a_u = v[0];
  p.w_s_u = v[1];
  p.b_a_u = v[2];
  p.w_a_v = v[3];
  p.w_s_v = v[4];
  p.b_a_v = v[5];
  p.c_s = v[6];
  p.b_s = v[7];
  p.basis = g.Constant(RoleBasis::OfDimension(kD).matrix());
  p.role_dim = kD;
  return p;
}

GeneratorVars Bind(Graph& g, Params& params) {
  std::vector<Var> vars;
  for (Tensor& t : params.tensors) vars.push_back(g.Parameter("p", &t));
  return MakeVars(g, vars);
}

TEST(GeneratorTest, ZeroParametersGiveHalfAttentionAndZeroFiller) {
  std::mt19937_64 rng(1);
  Params params = Params::Zero();
  Graph g;
  const GeneratorVars p = Bind(g, params);
  const GeneratorState s = InitialGeneratorState(p, kD);
  const auto out = GeneratorStep(p, g.Constant(RandomTensor({kM}, rng)),
                                 g.Constant(RandomTensor({kKv}, rng)), s);
  for (double a : out.a_u.value().data()) EXPECT_EQ(a, 0.5);
  for (double a : out.a_v.value().data()) EXPECT_EQ(a, 0.5);
  EXPECT_EQ(out.tpr.value(), Tensor({kD, kD}));
  EXPECT_EQ(out.filler.value(), Tensor({kD}));
}

TEST(GeneratorTest, BoundsHold) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    Params params = Params::Random(rng, 2.0);
    Graph g;
    const GeneratorVars p = Bind(g, params);
    GeneratorState s = InitialGeneratorState(p, kD);
    for (size_t t = 0; t < 3; ++t) {
      s = AppendWord(p, s, g.Constant(RandomTensor({kD}, rng)));
    }
    const Tensor v = RandomTensor({kKv}, rng, -3.0, 3.0);
    const auto out =
        GeneratorStep(p, g.Constant(RandomTensor({kM}, rng)), g.Constant(v), s);
    for (size_t k = 0; k < kKv; ++k) {
      EXPECT_GT(out.a_v.value()[k], 0.0);
      EXPECT_LT(out.a_v.value()[k], 1.0);
      EXPECT_LE(std::abs(out.q.value()[k]), std::abs(v[k]));
    }
    for (double x : out.tpr.value().data()) EXPECT_LT(std::abs(x), 1.0);
    const double u_norm = Norm(out.u.value());
    EXPECT_NEAR(u_norm, Norm(out.a_u.value()), 1e-12);
    EXPECT_LE(u_norm, std::sqrt(static_cast<double>(kD)));
    EXPECT_LE(Norm(out.filler.value()), Norm(out.tpr.value()) * u_norm + 1e-12);
  }
}

TEST(GeneratorTest, OneHotAttentionSelectsRole) {
  Params params = Params::Zero();
  Graph g;
  const GeneratorVars p = Bind(g, params);
  const RoleBasis basis = RoleBasis::OfDimension(kD);
  for (size_t j = 0; j < kD; ++j) {
    Tensor e({kD});
    e[j] = 1.0;
    const Tensor u = UnbindingVector(p, g.Constant(e)).value();
    EXPECT_LT(MaxAbsDiff(u, basis.Role(j)), 1e-15);
  }
}

TEST(GeneratorTest, FillerUnbindsTheGeneratedTpr) {
  std::mt19937_64 rng(3);
  Graph g;
  const Tensor s = RandomTensor({kD, kD}, rng);
  const Tensor u = RandomTensor({kD}, rng);
  EXPECT_LT(
      MaxAbsDiff(Filler(g.Constant(s), g.Constant(u)).value(), MatVec(s, u)),
      1e-15);
}

TEST(GeneratorTest, AppendWordMatchesAccumulate) {
  std::mt19937_64 rng(4);
  Params params = Params::Random(rng);
  Graph g;
  const GeneratorVars p = Bind(g, params);
  const RoleBasis basis = RoleBasis::OfDimension(kD);
  GeneratorState s = InitialGeneratorState(p, kD);
  Tpr reference = Tpr::Zero(kD, kD);
  for (size_t t = 0; t < kD; ++t) {
    const Tensor x = RandomTensor({kD}, rng);
    s = AppendWord(p, s, g.Constant(x));
    reference = Accumulate(reference, x, t, basis);
    EXPECT_EQ(s.t, t + 1);
    EXPECT_LT(MaxAbsDiff(s.s_tilde.value(), reference.matrix()), 1e-14);
  }
  EXPECT_THROW(AppendWord(p, s, g.Constant(Tensor({kD}))), Error);
  try {
    GeneratorStep(p, g.Constant(Tensor({kM})), g.Constant(Tensor({kKv})), s);
    FAIL() << "expected capacity error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kCapacity);
  }
}

TEST(GeneratorTest, EmbeddingDimensionMustMatch) {
  Params params = Params::Zero();
  Graph g;
  const GeneratorVars p = Bind(g, params);
  EXPECT_THROW(InitialGeneratorState(p, kD + 1), Error);
}

TEST(GeneratorTest, TwoStepsMatchPlainTensorComposition) {
  std::mt19937_64 rng(6);
  Params params = Params::Random(rng);
  const std::vector<Tensor>& w = params.tensors;
  const Tensor u_basis = RoleBasis::OfDimension(kD).matrix();
  const Tensor v = RandomTensor({kKv}, rng);
  Graph g;
  const GeneratorVars p = Bind(g, params);
  GeneratorState s = InitialGeneratorState(p, kD);
  Tensor s_tilde({kD, kD});
  for (size_t t = 0; t < 2; ++t) {
    const Tensor h = RandomTensor({kM}, rng);
    const auto out = GeneratorStep(p, g.Constant(h), g.Constant(v), s);
    // Column-major vec of the accumulator.
    const Tensor vec_s = Vec(s_tilde);
    const Tensor a_u =
        Sigmoid(Add(Add(MatVec(w[0], h), MatVec(w[1], vec_s)), w[2]));
    const Tensor a_v =
        Sigmoid(Add(Add(MatVec(w[3], h), MatVec(w[4], vec_s)), w[5]));
    Tensor pre = w[7];
    for (size_t i = 0; i < kD; ++i) {
      for (size_t j = 0; j < kD; ++j) {
        for (size_t k = 0; k < kKv; ++k) {
          pre.at(i, j) += w[6].at(i, j, k) * v[k] * a_v[k];
        }
      }
    }
    const Tensor f = MatVec(Tanh(pre), MatVec(u_basis, a_u));
    EXPECT_LT(MaxAbsDiff(out.filler.value(), f), 1e-12) << t;

    const Tensor x = RandomTensor({kD}, rng);
    s = AppendWord(p, s, g.Constant(x));
    for (size_t i = 0; i < kD; ++i) {
      for (size_t j = 0; j < kD; ++j)
        s_tilde.at(i, j) += x[i] * u_basis.at(j, t);
    }
  }
}

TEST(GeneratorTest, EverySubOpHasTrivialCases) {
  std::mt19937_64 rng(7);
  Graph g;
  const Tensor v = RandomTensor({kKv}, rng);
  EXPECT_EQ(GateFeatures(g.Constant(v), g.Constant(Tensor({kKv}, 1.0))).value(),
            v);
  EXPECT_EQ(GateFeatures(g.Constant(Tensor({kKv})), g.Constant(v)).value(),
            Tensor({kKv}));
  const Tensor u = RandomTensor({kD}, rng);
  EXPECT_EQ(Filler(g.Constant(Tensor::Identity(kD)), g.Constant(u)).value(), u);
  Params params = Params::Random(rng);
  params.tensors[7].Fill(0.0);
  const GeneratorVars p = Bind(g, params);
  EXPECT_EQ(MakeTpr(p, g.Constant(Tensor({kKv}))).value(), Tensor({kD, kD}));
}

TEST(GeneratorTest, EveryParameterReceivesGradient) {
  std::mt19937_64 rng(8);
  Params params = Params::Random(rng);
  Graph g;
  const GeneratorVars p = Bind(g, params);
  GeneratorState s = InitialGeneratorState(p, kD);
  s = AppendWord(p, s, g.Constant(RandomTensor({kD}, rng)));
  const auto out = GeneratorStep(p, g.Constant(RandomTensor({kM}, rng)),
                                 g.Constant(RandomTensor({kKv}, rng)), s);
  Var loss = SumAll(Mul(out.filler, g.Constant(RandomTensor({kD}, rng))));
  g.Backward(loss);
  for (Var v :
       {p.w_a_u, p.w_s_u, p.b_a_u, p.w_a_v, p.w_s_v, p.b_a_v, p.c_s, p.b_s}) {
    ASSERT_NE(g.grad(v), nullptr);
    EXPECT_TRUE(AllFinite(*g.grad(v)));
    EXPECT_GT(Norm(*g.grad(v)), 0.0);
  }
}

TEST(GeneratorTest, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(5);
  Params params = Params::Random(rng);
  std::vector<Tensor> inputs = params.tensors;
  inputs.push_back(RandomTensor({kM}, rng));   // h
  inputs.push_back(RandomTensor({kKv}, rng));  // v
  inputs.push_back(RandomTensor({kD}, rng));   // first bound word
  inputs.push_back(RandomTensor({kD}, rng));   // second bound word
  const double err = testing::OpGradError(
      [](const std::vector<Var>& v) {
        Graph& g = *v[0].graph();
        const GeneratorVars p = MakeVars(g, v);
        GeneratorState s = InitialGeneratorState(p, kD);
        s = AppendWord(p, s, v[10]);
        s = AppendWord(p, s, v[11]);
        return GeneratorStep(p, v[8], v[9], s).filler;
      },
      inputs);
  EXPECT_LT(err, 1e-4);
}

}  // namespace
}  // namespace tprcap
