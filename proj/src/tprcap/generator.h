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

// Filler generation network. Per step, given the previous hidden state h,
// the image feature v and the TPR of the words emitted so far (S~):
//
//   a_u = sigmoid(W_a_u h + W_s_u vec(S~) + b_a_u)        [d]
//   a_v = sigmoid(W_a_v h + W_s_v vec(S~) + b_a_v)        [k_v]
//   q   = v (.) a_v
//   S   = tanh(C_s q + B_s)                               [d x d]
//   u   = U a_u                                           (U: Hadamard basis)
//   f   = S u                                             filler, [d]
//
// After a word x is emitted at position t, S~ += x u_t^T.

#ifndef TPRCAP_GENERATOR_H_
#define TPRCAP_GENERATOR_H_

#include <cstddef>

#include "tprcap/autodiff.h"

namespace tprcap {

class Model;

struct GeneratorVars {
  Var w_a_u, w_s_u, b_a_u;
  Var w_a_v, w_s_v, b_a_v;
  Var c_s, b_s;
  Var basis;  // U, constant
  size_t role_dim = 0;
};

struct GeneratorState {
  Var s_tilde;   // [d_emb x d], sum of x_i u_i^T over emitted words
  size_t t = 0;  // number of words bound so far
};

GeneratorState InitialGeneratorState(const GeneratorVars& p,
                                     size_t embedding_dim);

Var AttentionU(const GeneratorVars& p, Var h_prev, const GeneratorState& s);
Var AttentionV(const GeneratorVars& p, Var h_prev, const GeneratorState& s);
Var GateFeatures(Var v, Var a_v);
Var MakeTpr(const GeneratorVars& p, Var q);
Var UnbindingVector(const GeneratorVars& p, Var a_u);
Var Filler(Var s_t, Var u_t);

struct GeneratorOutput {
  Var filler;
  Var a_u, a_v, q, tpr, u;
};

// One full step. Requires s.t < d (otherwise a capacity error).
GeneratorOutput GeneratorStep(const GeneratorVars& p, Var h_prev, Var v,
                              const GeneratorState& s);

// Binds the emitted embedding x to role s.t.
GeneratorState AppendWord(const GeneratorVars& p, const GeneratorState& s,
                          Var x);

}  // namespace tprcap

#endif  // TPRCAP_GENERATOR_H_
