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

#include "tprcap/scn_cell.h"

#include <cmath>

#include "tprcap/error.h"

namespace tprcap {

namespace {

Var Factorized(Var w_tag, Var w_in, Var input, Var tags) {
  return Mul(MatVec(w_tag, tags), MatVec(w_in, input));
}

}  // namespace

Var DecomposeEmbedding(const CellVars& p, Var x_prev, Var tags) {
  return Factorized(p.w_xm, p.w_xn, x_prev, tags);
}

Var DecomposeHidden(const CellVars& p, Var h_prev, Var tags) {
  return Factorized(p.w_hm, p.w_hn, h_prev, tags);
}

Var DecomposeTpr(const CellVars& p, Var filler, Var tags) {
  return Factorized(p.p_m, p.p_n, filler, tags);
}

Var GateSlice(Var stacked, Gate gate, size_t hidden_dim) {
  return Slice(stacked, static_cast<size_t>(gate) * hidden_dim, hidden_dim);
}

CellState CombineGates(Var i, Var f, Var g, Var o, Var c_prev) {
  Var c = Add(Mul(f, c_prev), Mul(i, g));
  Var h = Mul(o, Tanh(c));
  return {h, c};
}

CellOutput CellStep(const CellVars& p, Var x_prev, const CellState& prev,
                    Var filler, Var tags) {
  const VariantConfig& v = p.variant;
  Var x_term = v.decompose_embedding ? DecomposeEmbedding(p, x_prev, tags)
                                     : MatVec(p.w_x, x_prev);
  Var h_term = v.decompose_hidden ? DecomposeHidden(p, prev.h, tags)
                                  : MatVec(p.w_h, prev.h);
  Var t_term =
      v.decompose_tpr ? DecomposeTpr(p, filler, tags) : MatVec(p.w_t, filler);
  Var pre = AddN({x_term, h_term, t_term, p.bias});

  const size_t m = p.hidden_dim;
  CellOutput out;
  out.input_gate = Sigmoid(GateSlice(pre, Gate::kInput, m));
  out.forget_gate = Sigmoid(GateSlice(pre, Gate::kForget, m));
  Var g_pre = GateSlice(pre, Gate::kCandidate, m);
  out.candidate =
      p.g_activation == GateActivation::kTanh ? Tanh(g_pre) : Sigmoid(g_pre);
  out.output_gate = Sigmoid(GateSlice(pre, Gate::kOutput, m));
  out.state = CombineGates(out.input_gate, out.forget_gate, out.candidate,
                           out.output_gate, prev.c);
  if (!AllFinite(out.state.c.value()) || !AllFinite(out.state.h.value())) {
    Fail(ErrorKind::kNumeric, "non-finite LSTM state");
  }
  // Gates and candidate lie in (-1, 1), so each step grows |c| by < 1.
  const Tensor& c = out.state.c.value();
  const Tensor& c_prev = prev.c.value();
  for (size_t k = 0; k < c.size(); ++k) {
    if (std::abs(c[k]) > std::abs(c_prev[k]) + 1.0) {
      Fail(ErrorKind::kNumeric, "cell state grew by more than one per step");
    }
  }
  return out;
}

}  // namespace tprcap
