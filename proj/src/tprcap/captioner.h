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

// End-to-end caption decoder: MLP state initialization from the image
// feature, generator + cell per step, softmax over the vocabulary, and
// teacher-forced, greedy, beam and sampled decoding.
//
// A caption is <s> y_1 ... y_n </s>. Predicting y_t consumes the embedding of
// y_{t-1} and a TPR holding y_1 .. y_{t-1} bound to roles 0 .. t-2, so a
// caption of length L (markers included) needs L - 2 < d roles.

#ifndef TPRCAP_CAPTIONER_H_
#define TPRCAP_CAPTIONER_H_

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "tprcap/autodiff.h"
#include "tprcap/generator.h"
#include "tprcap/model.h"
#include "tprcap/scn_cell.h"
#include "tprcap/vocab.h"

namespace tprcap {

struct MlpVars {
  Var w1, b1, w2, b2;
};

struct ModelVars {
  Var embedding;
  Var out;
  GeneratorVars gen;
  CellVars cell;
  MlpVars init_c, init_h;
};

enum class BindMode { kConstant, kTrainable };

// Exposes the model tensors on `graph` without copying them. In trainable
// mode every tensor becomes a named parameter, except the embedding when
// `freeze_embedding` is set.
ModelVars BindModel(Graph& graph, const Model& model, BindMode mode,
                    bool freeze_embedding = false);

// tanh(W2 tanh(W1 v + b1) + b2)
Var RunMlp(const MlpVars& mlp, Var v);

struct DecoderState {
  CellState cell;
  GeneratorState gen;
};

class DecoderSession {
 public:
  DecoderSession(Graph& graph, const Model& model, const Tensor& feature,
                 const Tensor& tags, BindMode mode = BindMode::kConstant,
                 bool freeze_embedding = false);

  Graph& graph() { return graph_; }
  const ModelVars& vars() const { return vars_; }

  // c_0 = f_c(v), h_0 = f_h(v), empty TPR.
  DecoderState Initial();

  struct Step {
    Var log_probs;      // [V]
    DecoderState next;  // cell advanced; word not yet bound
  };
  Step Advance(const DecoderState& state, TokenId prev);
  // Binds the embedding of `token` into the TPR accumulator.
  DecoderState Emit(const DecoderState& state, TokenId token);

 private:
  Graph& graph_;
  const Model& model_;
  ModelVars vars_;
  Var feature_;
  Var tags_;
};

// softmax(W_x h).
Var DecodeStep(const ModelVars& vars, Var h);

struct TeacherForced {
  Var nll;                     // scalar, -sum log p(y_t)
  std::vector<Var> log_probs;  // one per predicted token
  size_t predicted_tokens = 0;
};

// `caption` includes the <s> and </s> markers.
TeacherForced TeacherForcedLoss(DecoderSession& session,
                                std::span<const TokenId> caption);

struct ForwardResult {
  std::vector<Tensor> distributions;
  double nll = 0.0;
};
ForwardResult ForwardTeacher(const Model& model, const Tensor& feature,
                             const Tensor& tags,
                             std::span<const TokenId> caption);

enum class DecodeMode { kGreedy, kBeam };

struct DecodeOptions {
  DecodeMode mode = DecodeMode::kGreedy;
  size_t beam_width = 1;
  size_t max_len = 20;  // markers included; at most d

  static DecodeOptions Defaults(const Model& model);
  void Validate(const Model& model) const;
};

struct Generation {
  std::vector<TokenId> tokens;  // without <s> and </s>
  double logprob = 0.0;         // summed over emitted tokens, </s> included
  bool finished = false;        // false when cut off at max_len
};

Generation Generate(const Model& model, const Tensor& feature,
                    const Tensor& tags, const DecodeOptions& options);

// Multinomial sample at temperature 1 over the non-marker tokens.
Generation SampleCaption(const Model& model, const Tensor& feature,
                         const Tensor& tags, size_t max_len,
                         std::mt19937_64& rng);

// <s> tokens </s>
std::vector<TokenId> WrapCaption(std::span<const TokenId> body);

}  // namespace tprcap

#endif  // TPRCAP_CAPTIONER_H_
