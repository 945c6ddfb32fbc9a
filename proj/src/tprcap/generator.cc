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

#include "tprcap/generator.h"

#include <string>

#include "tprcap/error.h"

namespace tprcap {

GeneratorState InitialGeneratorState(const GeneratorVars& p,
                                     size_t embedding_dim) {
  Require(p.w_s_u.valid(), ErrorKind::kContract, "generator vars not bound");
  const size_t cols = p.w_s_u.value().dim(1);
  Require(cols == embedding_dim * p.role_dim, ErrorKind::kDimension,
          "W_s_u has " + std::to_string(cols) +
              " columns, expected d_emb*d = " +
              std::to_string(embedding_dim * p.role_dim));
  Graph& g = *p.w_s_u.graph();
  return {g.Constant(Tensor({embedding_dim, p.role_dim})), 0};
}

Var AttentionU(const GeneratorVars& p, Var h_prev, const GeneratorState& s) {
  return Sigmoid(Add(
      Add(MatVec(p.w_a_u, h_prev), MatVec(p.w_s_u, Vec(s.s_tilde))), p.b_a_u));
}

Var AttentionV(const GeneratorVars& p, Var h_prev, const GeneratorState& s) {
  return Sigmoid(Add(
      Add(MatVec(p.w_a_v, h_prev), MatVec(p.w_s_v, Vec(s.s_tilde))), p.b_a_v));
}

Var GateFeatures(Var v, Var a_v) { return Mul(v, a_v); }

Var MakeTpr(const GeneratorVars& p, Var q) {
  return Tanh(Add(Contract3(p.c_s, q), p.b_s));
}

Var UnbindingVector(const GeneratorVars& p, Var a_u) {
  return MatVec(p.basis, a_u);
}

Var Filler(Var s_t, Var u_t) { return MatVec(s_t, u_t); }

GeneratorOutput GeneratorStep(const GeneratorVars& p, Var h_prev, Var v,
                              const GeneratorState& s) {
  if (s.t >= p.role_dim) {
    Fail(ErrorKind::kCapacity, "generator step " + std::to_string(s.t) +
                                   " exceeds role capacity " +
                                   std::to_string(p.role_dim));
  }
  GeneratorOutput out;
  out.a_u = AttentionU(p, h_prev, s);
  out.a_v = AttentionV(p, h_prev, s);
  out.q = GateFeatures(v, out.a_v);
  out.tpr = MakeTpr(p, out.q);
  out.u = UnbindingVector(p, out.a_u);
  out.filler = Filler(out.tpr, out.u);
  return out;
}

GeneratorState AppendWord(const GeneratorVars& p, const GeneratorState& s,
                          Var x) {
  if (s.t >= p.role_dim) {
    Fail(ErrorKind::kCapacity, "cannot bind word " + std::to_string(s.t) +
                                   " with role capacity " +
                                   std::to_string(p.role_dim));
  }
  Var role = Column(p.basis, s.t);
  return {Add(s.s_tilde, Outer(x, role)), s.t + 1};
}

}  // namespace tprcap
