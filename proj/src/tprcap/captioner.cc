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

#include "tprcap/captioner.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <tuple>

#include "tprcap/error.h"

namespace tprcap {

namespace {

bool Selectable(TokenId id) { return id != kPadId && id != kBosId; }

}  // namespace

ModelVars BindModel(Graph& graph, const Model& model, BindMode mode,
                    bool freeze_embedding) {
  auto bind = [&](const std::string& name) -> Var {
    if (!model.has(name)) return Var();
    const Tensor* t = &model.param(name);
    const bool frozen = name == pname::kEmbedding && freeze_embedding;
    if (mode == BindMode::kTrainable && !frozen)
      return graph.Parameter(name, t);
    return graph.Input(t);
  };
  ModelVars v;
  v.embedding = bind(pname::kEmbedding);
  v.out = bind(pname::kOut);

  v.gen.w_a_u = bind("gen.W_a_u");
  v.gen.w_s_u = bind("gen.W_s_u");
  v.gen.b_a_u = bind("gen.b_a_u");
  v.gen.w_a_v = bind("gen.W_a_v");
  v.gen.w_s_v = bind("gen.W_s_v");
  v.gen.b_a_v = bind("gen.b_a_v");
  v.gen.c_s = bind("gen.C_s");
  v.gen.b_s = bind("gen.B_s");
  v.gen.basis = graph.Input(&model.basis().matrix());
  v.gen.role_dim = model.dims().role_dim;

  v.cell.bias = bind("cell.b");
  v.cell.w_x = bind("cell.W_x");
  v.cell.w_xm = bind("cell.W_xm");
  v.cell.w_xn = bind("cell.W_xn");
  v.cell.w_h = bind("cell.W_h");
  v.cell.w_hm = bind("cell.W_hm");
  v.cell.w_hn = bind("cell.W_hn");
  v.cell.w_t = bind("cell.W_T");
  v.cell.p_m = bind("cell.P_m");
  v.cell.p_n = bind("cell.P_n");
  v.cell.hidden_dim = model.dims().hidden_dim;
  v.cell.variant = model.config().variant;
  v.cell.g_activation = model.config().g_activation;

  v.init_c = {bind("init_c.W1"), bind("init_c.b1"), bind("init_c.W2"),
              bind("init_c.b2")};
  v.init_h = {bind("init_h.W1"), bind("init_h.b1"), bind("init_h.W2"),
              bind("init_h.b2")};
  return v;
}

Var RunMlp(const MlpVars& mlp, Var v) {
  Var hidden = Tanh(Add(MatVec(mlp.w1, v), mlp.b1));
  return Tanh(Add(MatVec(mlp.w2, hidden), mlp.b2));
}

DecoderSession::DecoderSession(Graph& graph, const Model& model,
                               const Tensor& feature, const Tensor& tags,
                               BindMode mode, bool freeze_embedding)
    : graph_(graph),
      model_(model),
      vars_(BindModel(graph, model, mode, freeze_embedding)) {
  const ModelDims& d = model.dims();
  Require(feature.rank() == 1 && feature.size() == d.feature_dim,
          ErrorKind::kDimension,
          "image feature has shape " + ShapeString(feature.shape()) +
              ", model expects [" + std::to_string(d.feature_dim) + "]");
  Require(tags.rank() == 1 && tags.size() == d.tag_dim, ErrorKind::kDimension,
          "tag vector has shape " + ShapeString(tags.shape()) +
              ", model expects [" + std::to_string(d.tag_dim) + "]");
  feature_ = graph.Input(&feature);
  tags_ = graph.Input(&tags);
}

DecoderState DecoderSession::Initial() {
  DecoderState s;
  s.cell.c = RunMlp(vars_.init_c, feature_);
  s.cell.h = RunMlp(vars_.init_h, feature_);
  s.gen = InitialGeneratorState(vars_.gen, model_.dims().embedding_dim);
  return s;
}

DecoderSession::Step DecoderSession::Advance(const DecoderState& state,
                                             TokenId prev) {
  Require(prev < model_.dims().vocab_size, ErrorKind::kRange,
          "token id " + std::to_string(prev) + " out of range for vocabulary " +
              std::to_string(model_.dims().vocab_size));
  GeneratorOutput gen =
      GeneratorStep(vars_.gen, state.cell.h, feature_, state.gen);
  Var x_prev = Column(vars_.embedding, prev);
  CellOutput cell = CellStep(vars_.cell, x_prev, state.cell, gen.filler, tags_);
  Step step;
  step.log_probs = LogSoftmax(MatVec(vars_.out, cell.state.h));
  step.next = {cell.state, state.gen};
  return step;
}

DecoderState DecoderSession::Emit(const DecoderState& state, TokenId token) {
  Require(token < model_.dims().vocab_size, ErrorKind::kRange,
          "token id " + std::to_string(token) +
              " out of range for vocabulary " +
              std::to_string(model_.dims().vocab_size));
  DecoderState next = state;
  next.gen = AppendWord(vars_.gen, state.gen, Column(vars_.embedding, token));
  return next;
}

Var DecodeStep(const ModelVars& vars, Var h) {
  return Softmax(MatVec(vars.out, h));
}

TeacherForced TeacherForcedLoss(DecoderSession& session,
                                std::span<const TokenId> caption) {
  const size_t d = session.vars().gen.role_dim;
  Require(caption.size() >= 2, ErrorKind::kValidation,
          "caption needs at least <s> and one target token");
  Require(caption.front() == kBosId, ErrorKind::kValidation,
          "caption must start with <s>");
  if (caption.size() > d) {
    Fail(ErrorKind::kCapacity,
         "caption of length " + std::to_string(caption.size()) +
             " exceeds role capacity " + std::to_string(d));
  }
  TeacherForced out;
  DecoderState state = session.Initial();
  std::vector<Var> terms;
  for (size_t t = 1; t < caption.size(); ++t) {
    DecoderSession::Step step = session.Advance(state, caption[t - 1]);
    terms.push_back(Pick(step.log_probs, caption[t]));
    out.log_probs.push_back(step.log_probs);
    state = step.next;
    if (t + 1 < caption.size()) state = session.Emit(state, caption[t]);
  }
  out.nll = Scale(AddN(terms), -1.0);
  out.predicted_tokens = terms.size();
  return out;
}

ForwardResult ForwardTeacher(const Model& model, const Tensor& feature,
                             const Tensor& tags,
                             std::span<const TokenId> caption) {
  Graph graph;
  DecoderSession session(graph, model, feature, tags);
  TeacherForced tf = TeacherForcedLoss(session, caption);
  ForwardResult out;
  for (Var lp : tf.log_probs) {
    Tensor p = lp.value();
    for (double& x : p.data()) x = std::exp(x);
    out.distributions.push_back(std::move(p));
  }
  out.nll = tf.nll.value().item();
  return out;
}

DecodeOptions DecodeOptions::Defaults(const Model& model) {
  DecodeOptions o;
  o.max_len = std::min<size_t>(model.dims().role_dim, 20);
  return o;
}

void DecodeOptions::Validate(const Model& model) const {
  Require(beam_width >= 1, ErrorKind::kValidation, "beam width must be >= 1");
  Require(max_len >= 2, ErrorKind::kValidation, "max_len must be >= 2");
  Require(max_len <= model.dims().role_dim, ErrorKind::kValidation,
          "max_len " + std::to_string(max_len) + " exceeds role capacity " +
              std::to_string(model.dims().role_dim));
}

std::vector<TokenId> WrapCaption(std::span<const TokenId> body) {
  std::vector<TokenId> out;
  out.reserve(body.size() + 2);
  out.push_back(kBosId);
  out.insert(out.end(), body.begin(), body.end());
  out.push_back(kEosId);
  return out;
}

namespace {

TokenId ArgmaxSelectable(const Tensor& log_probs) {
  TokenId best = kEosId;
  double best_lp = -std::numeric_limits<double>::infinity();
  for (TokenId id = 0; id < log_probs.size(); ++id) {
    if (!Selectable(id)) continue;
    if (log_probs[id] > best_lp) {
      best_lp = log_probs[id];
      best = id;
    }
  }
  return best;
}

// Shared loop for greedy and sampled decoding.
template <typename Choose>
Generation DecodeOne(const Model& model, const Tensor& feature,
                     const Tensor& tags, size_t max_len, Choose choose) {
  Graph graph;
  DecoderSession session(graph, model, feature, tags);
  DecoderState state = session.Initial();
  TokenId prev = kBosId;
  Generation gen;
  // Positions 1 .. max_len - 1 can be emitted.
  for (size_t pos = 1; pos < max_len; ++pos) {
    DecoderSession::Step step = session.Advance(state, prev);
    const Tensor& lp = step.log_probs.value();
    const TokenId tok = choose(lp);
    gen.logprob += lp[tok];
    if (tok == kEosId) {
      gen.finished = true;
      break;
    }
    gen.tokens.push_back(tok);
    if (pos + 1 == max_len) break;
    state = session.Emit(step.next, tok);
    prev = tok;
  }
  return gen;
}

double Normalized(const Generation& g) {
  const size_t len = g.tokens.size() + (g.finished ? 1 : 0);
  return len ? g.logprob / static_cast<double>(len) : 0.0;
}

Generation Greedy(const Model& model, const Tensor& feature, const Tensor& tags,
                  size_t max_len) {
  return DecodeOne(model, feature, tags, max_len, ArgmaxSelectable);
}

Generation Beam(const Model& model, const Tensor& feature, const Tensor& tags,
                const DecodeOptions& options) {
  std::vector<Generation> pool;
  // Seeding the pool with the greedy path guarantees the beam never returns
  // something that scores worse than greedy.
  pool.push_back(Greedy(model, feature, tags, options.max_len));

  struct Hyp {
    DecoderState state;
    TokenId last;
    std::vector<TokenId> tokens;
    double logprob;
  };
  Graph graph;
  DecoderSession session(graph, model, feature, tags);
  std::vector<Hyp> live{{session.Initial(), kBosId, {}, 0.0}};
  const size_t width = options.beam_width;

  for (size_t pos = 1; pos < options.max_len && !live.empty(); ++pos) {
    std::vector<DecoderSession::Step> steps;
    // (score, hyp, token)
    std::vector<std::tuple<double, size_t, TokenId>> cand;
    for (size_t h = 0; h < live.size(); ++h) {
      steps.push_back(session.Advance(live[h].state, live[h].last));
      const Tensor& lp = steps.back().log_probs.value();
      for (TokenId id = 0; id < lp.size(); ++id) {
        if (Selectable(id)) cand.emplace_back(live[h].logprob + lp[id], h, id);
      }
    }
    const size_t keep = std::min(width, cand.size());
    std::partial_sort(cand.begin(), cand.begin() + keep, cand.end(),
                      [](const auto& a, const auto& b) {
                        if (std::get<0>(a) != std::get<0>(b)) {
                          return std::get<0>(a) > std::get<0>(b);
                        }
                        if (std::get<1>(a) != std::get<1>(b)) {
                          return std::get<1>(a) < std::get<1>(b);
                        }
                        return std::get<2>(a) < std::get<2>(b);
                      });
    std::vector<Hyp> next;
    for (size_t c = 0; c < keep; ++c) {
      const auto [score, h, tok] = cand[c];
      if (tok == kEosId) {
        pool.push_back({live[h].tokens, score, true});
        continue;
      }
      std::vector<TokenId> tokens = live[h].tokens;
      tokens.push_back(tok);
      if (pos + 1 == options.max_len) {
        pool.push_back({std::move(tokens), score, false});
        continue;
      }
      next.push_back(
          {session.Emit(steps[h].next, tok), tok, std::move(tokens), score});
    }
    live = std::move(next);
  }

  size_t best = 0;
  for (size_t i = 1; i < pool.size(); ++i) {
    if (Normalized(pool[i]) > Normalized(pool[best])) best = i;
  }
  return pool[best];
}

}  // namespace

Generation Generate(const Model& model, const Tensor& feature,
                    const Tensor& tags, const DecodeOptions& options) {
  options.Validate(model);
  if (options.mode == DecodeMode::kGreedy || options.beam_width == 1) {
    return Greedy(model, feature, tags, options.max_len);
  }
  return Beam(model, feature, tags, options);
}

Generation SampleCaption(const Model& model, const Tensor& feature,
                         const Tensor& tags, size_t max_len,
                         std::mt19937_64& rng) {
  Require(max_len >= 2 && max_len <= model.dims().role_dim,
          ErrorKind::kValidation, "invalid max_len for sampling");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  return DecodeOne(model, feature, tags, max_len, [&](const Tensor& lp) {
    double total = 0.0;
    for (TokenId id = 0; id < lp.size(); ++id) {
      if (Selectable(id)) total += std::exp(lp[id]);
    }
    double r = unit(rng) * total;
    TokenId last = kEosId;
    for (TokenId id = 0; id < lp.size(); ++id) {
      if (!Selectable(id)) continue;
      last = id;
      r -= std::exp(lp[id]);
      if (r < 0.0) return id;
    }
    return last;
  });
}

}  // namespace tprcap
