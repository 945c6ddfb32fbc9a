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

// Tag-factorized LSTM cell.
//
// Each gate * in {i, f, g, o} sums three input terms and a bias. An input z
// (previous embedding x, previous hidden h, or the filler T) contributes
// either its plain projection W_z* z or, when decomposed, the tag-modulated
// product (W_z*m S) (.) (W_z*n z). Then
//
//   c_t = f (.) c_{t-1} + i (.) g,   h_t = o (.) tanh(c_t)
//
// with sigmoid on i, f, o and a configurable activation on g (sigmoid by
// default). All four gates are computed at once from row-stacked weights.

#ifndef TPRCAP_SCN_CELL_H_
#define TPRCAP_SCN_CELL_H_

#include <cstddef>

#include "tprcap/autodiff.h"
#include "tprcap/model.h"

namespace tprcap {

struct CellVars {
  Var bias;             // [4m]
  Var w_x, w_xm, w_xn;  // embedding: plain or decomposed pair
  Var w_h, w_hm, w_hn;  // hidden
  Var w_t, p_m, p_n;    // filler
  size_t hidden_dim = 0;
  VariantConfig variant;
  GateActivation g_activation = GateActivation::kSigmoid;
};

struct CellState {
  Var h;
  Var c;
};

// (W_xm S) (.) (W_xn x_prev), all four gates stacked: [4m].
Var DecomposeEmbedding(const CellVars& p, Var x_prev, Var tags);
Var DecomposeHidden(const CellVars& p, Var h_prev, Var tags);
Var DecomposeTpr(const CellVars& p, Var filler, Var tags);
// The m-row block of a stacked [4m] vector belonging to `gate`.
Var GateSlice(Var stacked, Gate gate, size_t hidden_dim);

// c = f (.) c_prev + i (.) g; h = o (.) tanh(c). Exposed separately so the
// recurrence can be checked with injected gate values.
CellState CombineGates(Var i, Var f, Var g, Var o, Var c_prev);

struct CellOutput {
  CellState state;
  Var input_gate, forget_gate, candidate, output_gate;
};

// Throws kNumeric if the new state contains NaN/Inf.
CellOutput CellStep(const CellVars& p, Var x_prev, const CellState& prev,
                    Var filler, Var tags);

}  // namespace tprcap

#endif  // TPRCAP_SCN_CELL_H_
