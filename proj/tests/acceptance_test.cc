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

// End-to-end acceptance checks. Prints one PASS/FAIL line per check and exits
// non-zero when any check fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "tprcap/captioner.h"
#include "tprcap/checkpoint.h"
#include "tprcap/dataset.h"
#include "tprcap/error.h"
#include "tprcap/metrics.h"
#include "tprcap/model.h"
#include "tprcap/tpr.h"
#include "tprcap/trainer.h"

namespace tprcap {
namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Timer {
 public:
  double Seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ =
      std::chrono::steady_clock::now();
};

std::string Format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}

// Exact nearest-neighbour retrieval from Hadamard-bound sequences.
Outcome Retrieval() {
  Timer timer;
  bool ok = true;
  std::string detail;
  for (size_t d : {8u, 16u, 32u, 64u}) {
    const double acc = RetrievalAccuracy(d, 1000, d, 1000, 1000 + d);
    ok = ok && acc == 1.0;
    detail += Format("d=%zu acc=%.6f ", d, acc);
  }
  const double t = timer.Seconds();
  return {ok && t < 10.0, detail + Format("time=%.2fs (limit 10s)", t)};
}

// Sylvester-Hadamard orthogonality and the normalized basis.
Outcome Hadamard() {
  bool exact = true;
  double worst = 0.0;
  for (size_t k = 0; k <= 7; ++k) {
    const Tensor h = SylvesterHadamard(k);
    const size_t d = size_t{1} << k;
    const Tensor hht = Matmul(h, Transpose(h));
    exact = exact && hht == Scale(Tensor::Identity(d), static_cast<double>(d));
    if (k >= 1) {
      const RoleBasis basis = RoleBasis::OfDimension(d);
      const Tensor& u = basis.matrix();
      worst = std::max(
          worst, MaxAbsDiff(Matmul(Transpose(u), u), Tensor::Identity(d)));
    }
  }
  return {exact && worst <= 1e-10,
          Format("H H^T == 2^k I exact for k<=7: %s; max |U^T U - I| = %.3g "
                 "(limit 1e-10)",
                 exact ? "yes" : "no", worst)};
}

ModelConfig DeskConfig(VariantConfig variant) {
  ModelConfig c;
  c.dims = {.role_dim = 32,
            .hidden_dim = 64,
            .feature_dim = 64,
            .tag_dim = 16,
            .vocab_size = 64,
            .embedding_dim = 32};
  c.variant = variant;
  return c;
}

// Finite-difference gradient check of every variant at desk dimensions.
Outcome Gradients() {
  Timer timer;
  bool ok = true;
  std::string detail;
  for (const VariantConfig& variant : AllVariants()) {
    Model model = Model::Create(DeskConfig(variant), 17);
    std::mt19937_64 rng(18);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unit;
    std::uniform_int_distribution<TokenId> word(kNumReserved, 63);
    Tensor v({64}), tags({16});
    for (double& x : v.data()) x = normal(rng);
    for (double& x : tags.data()) x = unit(rng);
    std::vector<TokenId> body(6);
    for (TokenId& w : body) w = word(rng);
    const GradCheckReport r = GradCheck(model, v, tags, WrapCaption(body));
    ok = ok && r.max_rel_error < 1e-4;
    detail += Format("%s=%.2e ", variant.Name().c_str(), r.max_rel_error);
  }
  const double t = timer.Seconds();
  return {ok && t < 300.0,
          detail + Format("(limit 1e-4, eps 1e-5) time=%.1fs (limit 300s)", t)};
}

// Decomposed TPR input with its tag gate forced to ones matches the plain one.
Outcome Collapse() {
  const std::pair<VariantConfig, VariantConfig> pairs[] = {
      {{true, false, true}, {true, false, false}},
      {{false, true, true}, {false, true, false}},
      {{true, true, true}, {true, true, false}},
  };
  std::mt19937_64 rng(21);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.05, 1.0);
  std::uniform_int_distribution<TokenId> word(kNumReserved, 63);
  double worst = 0.0;
  for (const auto& [dec, plain] : pairs) {
    Model d = Model::Create(DeskConfig(dec), 22);
    std::map<std::string, Tensor> params = d.params();
    params["cell.W_T"] = params.at("cell.P_n");
    params.erase("cell.P_n");
    params.erase("cell.P_m");
    const Model p = Model::FromParameters(DeskConfig(plain), params);
    for (int trial = 0; trial < 100; ++trial) {
      Tensor v({64}), tags({16});
      for (double& x : v.data()) x = normal(rng);
      for (double& x : tags.data()) x = unit(rng);
      // P_m = 1 S^T / |S|^2, so P_m S is a vector of ones.
      const double sq = Dot(tags, tags);
      Tensor& p_m = d.mutable_param("cell.P_m");
      for (size_t r = 0; r < p_m.dim(0); ++r) {
        for (size_t k = 0; k < 16; ++k) p_m.at(r, k) = tags[k] / sq;
      }
      std::vector<TokenId> body(1 + trial % 8);
      for (TokenId& w : body) w = word(rng);
      const auto caption = WrapCaption(body);
      const ForwardResult a = ForwardTeacher(d, v, tags, caption);
      const ForwardResult b = ForwardTeacher(p, v, tags, caption);
      for (size_t t = 0; t < a.distributions.size(); ++t) {
        worst =
            std::max(worst, MaxAbsDiff(a.distributions[t], b.distributions[t]));
      }
      worst = std::max(worst, std::abs(a.nll - b.nll));
    }
  }
  return {worst <= 1e-12,
          Format("3 variant pairs x 100 inputs, max output difference %.3g "
                 "(limit 1e-12)",
                 worst)};
}

Sentence Words(const std::string& text) {
  Sentence out;
  size_t at = 0;
  while (at < text.size()) {
    const size_t end = std::min(text.find(' ', at), text.size());
    out.push_back(text.substr(at, end - at));
    at = end + 1;
  }
  return out;
}

// BLEU, ROUGE-L and CIDEr-D reference values and symmetry.
Outcome Metrics() {
  const Sentence s = Words("a black dog is running on the grass");
  const std::vector<Sentence> self{s};
  double bleu_identity = 1.0;
  for (double b : Bleu(s, self)) bleu_identity = std::min(bleu_identity, b);
  const double rouge_identity = RougeL(s, self);

  const std::vector<Sentence> refs{Words("the cat is on the mat"),
                                   Words("there is a cat on the mat")};
  const double unigram = Bleu(Words("the the the the the the the"), refs)[0];

  std::vector<std::vector<Sentence>> corpus{
      {s},
      {Words("a white horse is eating")},
      {Words("the red car is standing"), Words("a red car is parked")},
      {Words("there is a man sitting")}};
  const double self_cider = CiderD(s, corpus[0], CorpusStats::Build(corpus));

  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> word(0, 11), len(3, 10);
  const auto random_sentence = [&] {
    Sentence out(len(rng));
    for (auto& w : out) w = "w" + std::to_string(word(rng));
    return out;
  };
  std::vector<std::vector<Sentence>> sets(10);
  for (auto& set : sets) {
    for (int k = 0; k < 5; ++k) set.push_back(random_sentence());
  }
  const CorpusStats stats = CorpusStats::Build(sets);
  double perm = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Sentence cand = random_sentence();
    std::vector<Sentence> r = sets[trial % sets.size()];
    const auto b0 = Bleu(cand, r);
    const double r0 = RougeL(cand, r), c0 = CiderD(cand, r, stats);
    std::shuffle(r.begin(), r.end(), rng);
    const auto b1 = Bleu(cand, r);
    for (size_t n = 0; n < 4; ++n)
      perm = std::max(perm, std::abs(b0[n] - b1[n]));
    perm = std::max(perm, std::abs(r0 - RougeL(cand, r)));
    perm = std::max(perm, std::abs(c0 - CiderD(cand, r, stats)));
  }
  const bool ok = bleu_identity == 1.0 && unigram == 2.0 / 7.0 &&
                  std::abs(self_cider - 10.0) <= 1e-9 &&
                  rouge_identity == 1.0 && perm <= 1e-12;
  return {ok,
          Format("BLEU identity %.15g; clipped unigram %.17g (2/7 = %.17g); "
                 "CIDEr-D self %.12f; ROUGE-L identity %.15g; max change "
                 "under 100 reference shuffles %.3g",
                 bleu_identity, unigram, 2.0 / 7.0, self_cider, rouge_identity,
                 perm)};
}

struct Toy {
  Dataset data;
  Vocabulary vocab;
  Model model;
};

double ExactFraction(const Model& model, const std::vector<Example>& ex) {
  size_t ok = 0;
  const DecodeOptions opts = DecodeOptions::Defaults(model);
  for (const Example& e : ex) {
    const Generation g =
        Generate(model, e.sample->feature, e.sample->tags, opts);
    ok += g.finished && WrapCaption(g.tokens) == e.caption;
  }
  return static_cast<double>(ok) / static_cast<double>(ex.size());
}

// Cross-entropy overfit of a 32-sample synthetic corpus with E+dT.
Outcome Overfit(Toy& toy) {
  Timer timer;
  std::vector<Example> ex = MakeExamples(toy.data, toy.vocab);
  TrainConfig config;
  Trainer trainer(toy.model, toy.vocab, config);
  std::mt19937_64 rng(3);
  size_t steps = 0;
  double nll = 0.0, exact = 0.0;
  for (size_t at = 0; steps < 2000; ++steps) {
    if (at == 0) std::shuffle(ex.begin(), ex.end(), rng);
    const size_t n = std::min(config.batch_size, ex.size() - at);
    trainer.XeStep(std::span<const Example>(ex).subspan(at, n));
    at = (at + n) % ex.size();
    if ((steps + 1) % 50 == 0) {
      nll = trainer.XeLoss(ex);
      exact = ExactFraction(toy.model, ex);
      if (nll < 0.05 && exact >= 0.95) {
        ++steps;
        break;
      }
    }
  }
  const double t = timer.Seconds();
  const bool ok = nll < 0.05 && exact >= 0.95 && steps <= 2000 && t < 600.0;
  return {ok, Format("%zu XE steps: NLL %.4f/token (limit 0.05), exact greedy "
                     "%.1f%% (limit 95%%), time=%.1fs (limit 600s)",
                     steps, nll, 100.0 * exact, t)};
}

// Self-critical fine-tuning of the overfit model.
Outcome SelfCritical(Toy& toy) {
  Timer timer;
  std::vector<const CaptionSample*> all;
  std::vector<std::vector<Sentence>> ref_sets;
  for (const CaptionSample& s : toy.data.samples) {
    all.push_back(&s);
    ref_sets.emplace_back();
    for (const Sentence& c : s.captions)
      ref_sets.back().push_back(CaptionBody(c));
  }
  const CorpusStats stats = CorpusStats::Build(ref_sets);

  // Positive advantage raises the sampled caption's log-probability.
  size_t raised = 0;
  const auto snapshot = toy.model.params();
  for (int trial = 0; trial < 100; ++trial) {
    TrainConfig pc;
    pc.scst_weight = 1.0;
    pc.xe_weight = 0.0;
    pc.scst_learning_rate = 1e-5;
    pc.seed = 100 + trial;
    Trainer t(toy.model, toy.vocab, pc);
    t.MarkPretrained();
    const std::vector<const CaptionSample*> one{all[trial % all.size()]};
    const auto rec = t.ComputeRewards(one, stats);
    std::vector<TokenId> caption = WrapCaption(rec[0].sampled);
    if (!rec[0].sampled_finished) caption.pop_back();
    const CaptionSample& s = *one[0];
    const double before =
        ForwardTeacher(toy.model, s.feature, s.tags, caption).nll;
    t.PolicyUpdate(one, rec, std::vector<double>{1.0});
    const double after =
        ForwardTeacher(toy.model, s.feature, s.tags, caption).nll;
    raised += after < before;
    toy.model.mutable_params() = snapshot;
  }

  TrainConfig config;
  config.require_pretrained = false;
  Trainer trainer(toy.model, toy.vocab, config);
  const double cider_before = trainer.ValidationCider(toy.data);
  std::mt19937_64 rng(5);
  size_t degenerate = 0;
  for (size_t step = 0, at = 0; step < 200; ++step) {
    if (at == 0) std::shuffle(all.begin(), all.end(), rng);
    const size_t n = std::min(config.batch_size, all.size() - at);
    degenerate +=
        trainer
            .ScstStep(std::span<const CaptionSample* const>(all).subspan(at, n),
                      stats)
            .degenerate;
    at = (at + n) % all.size();
  }
  const double cider_after = trainer.ValidationCider(toy.data);
  const double drop = cider_before - cider_after;
  const bool ok = drop <= 0.05 && raised >= 95;
  return {ok, Format("train CIDEr-D %.4f -> %.4f after 200 steps (drop %.4f, "
                     "limit 0.05; %zu degenerate batches); log-prob raised in "
                     "%zu/100 positive-advantage steps (limit 95); time=%.1fs",
                     cider_before, cider_after, drop, degenerate, raised,
                     timer.Seconds())};
}

// Checkpoint and dataset round trips and checksum coverage.
Outcome Serialization() {
  bool ckpt_ok = true;
  for (const VariantConfig& variant : AllVariants()) {
    const Model m = Model::Create(DeskConfig(variant), 41);
    const std::string a = SerializeCheckpoint(m);
    ckpt_ok = ckpt_ok && SerializeCheckpoint(DeserializeCheckpoint(a)) == a;
  }
  const std::string text = DatasetToJsonl(SynthGenerate(42, 64));
  const bool data_ok = DatasetToJsonl(DatasetFromJsonl(text)) == text;

  const std::string bytes =
      SerializeCheckpoint(Model::Create(DeskConfig({true, false, true}), 43));
  std::mt19937_64 rng(44);
  std::uniform_int_distribution<size_t> pos(0, bytes.size() - 1);
  std::uniform_int_distribution<int> bit(0, 7);
  int detected = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::string bad = bytes;
    bad[pos(rng)] ^= static_cast<char>(1 << bit(rng));
    try {
      DeserializeCheckpoint(bad);
    } catch (const Error& e) {
      detected += e.kind() == ErrorKind::kCorruption;
    }
  }
  return {ckpt_ok && data_ok && detected == 100,
          Format("checkpoint save/load/save identical for 6 variants: %s; "
                 "dataset JSONL round trip identical: %s; CRC caught %d/100 "
                 "single-byte flips",
                 ckpt_ok ? "yes" : "no", data_ok ? "yes" : "no", detected)};
}

Toy MakeToy() {
  SynthOptions o;
  // One caption per sample: several templates for one image cannot all be
  // predicted with a per-token NLL near zero.
  o.min_captions = o.max_captions = 1;
  Toy toy{SynthGenerate(1, 32, SynthGrammar::Default(), o), Vocabulary(),
          Model::Create(DeskConfig({}), 1)};
  toy.vocab = BuildVocabulary(toy.data);
  ModelConfig c = DeskConfig({true, false, true});
  c.dims.tag_dim = toy.data.tag_dim();
  c.dims.vocab_size = toy.vocab.size();
  toy.model = Model::Create(c, 1);
  return toy;
}

int Run() {
  int failures = 0;
  const auto report = [&](int id, const char* title,
                          const std::function<Outcome()>& check) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s [%d] %s: %s\n", o.pass ? "PASS" : "FAIL", id, title,
                o.detail.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  };
  report(1, "TPR exact retrieval", Retrieval);
  report(2, "Hadamard validity", Hadamard);
  report(3, "Gradient integrity", Gradients);
  report(4, "Variant-collapse equivalence", Collapse);
  report(5, "Metric oracles", Metrics);
  Toy toy = MakeToy();
  bool overfit = false;
  report(6, "Toy overfit", [&] {
    Outcome o = Overfit(toy);
    overfit = o.pass;
    return o;
  });
  report(7, "SCST sanity", [&] {
    Outcome o = SelfCritical(toy);
    if (!overfit) {
      o.pass = false;
      o.detail += " (overfit stage did not pass)";
    }
    return o;
  });
  report(8, "Serialization", Serialization);
  std::printf("%d/8 passed\n", 8 - failures);
  return failures == 0 ? 0 : 1;
}

}  // namespace
}  // namespace tprcap

int main() { return tprcap::Run(); }
