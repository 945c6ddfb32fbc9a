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

#include "tprcap/trainer.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "tprcap/autodiff.h"
#include "tprcap/captioner.h"
#include "tprcap/error.h"

namespace tprcap {

namespace {

// Runs `f`, tagging numeric failures with the sample they came from.
template <typename F>
auto WithSampleId(const std::string& id, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kNumeric) throw;
    Fail(ErrorKind::kNumeric, std::string(e.what()) + " (sample " + id + ")");
  }
}

void MergeGrads(std::map<std::string, Tensor>& into,
                std::map<std::string, Tensor> from) {
  for (auto& [name, g] : from) {
    auto [it, inserted] = into.try_emplace(name, std::move(g));
    if (!inserted) AddInPlace(it->second, g);
  }
}

std::vector<Sentence> Bodies(const CaptionSample& sample) {
  std::vector<Sentence> refs;
  for (const Sentence& c : sample.captions) refs.push_back(CaptionBody(c));
  return refs;
}

Sentence ToWords(std::span<const TokenId> ids, const Vocabulary& vocab) {
  Sentence out;
  for (TokenId id : ids) out.push_back(vocab.Token(id));
  return out;
}

// <s> body, plus </s> when the sample terminated on its own.
std::vector<TokenId> SampledCaption(const RewardRecord& r) {
  std::vector<TokenId> ids{kBosId};
  ids.insert(ids.end(), r.sampled.begin(), r.sampled.end());
  if (r.sampled_finished) ids.push_back(kEosId);
  return ids;
}

}  // namespace

void TrainConfig::Validate() const {
  Require(learning_rate >= 0.0 && std::isfinite(learning_rate),
          ErrorKind::kValidation, "learning rate must be finite and >= 0");
  Require(scst_learning_rate >= 0.0 && std::isfinite(scst_learning_rate),
          ErrorKind::kValidation, "scst learning rate must be finite and >= 0");
  Require(batch_size >= 1, ErrorKind::kValidation, "batch size must be >= 1");
  Require(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 &&
              adam_beta2 < 1.0 && adam_eps > 0.0,
          ErrorKind::kValidation, "invalid Adam hyperparameters");
  Require(scst_weight >= 0.0 && xe_weight >= 0.0, ErrorKind::kValidation,
          "loss weights must be non-negative");
  Require(std::abs(scst_weight + xe_weight - 1.0) < 1e-12,
          ErrorKind::kValidation, "scst_weight + xe_weight must equal 1");
}

void Optimizer::Apply(std::map<std::string, Tensor>& params,
                      const std::map<std::string, Tensor>& grads, double lr) {
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double bc1 = 1.0 - std::pow(config_.adam_beta1, t);
  const double bc2 = 1.0 - std::pow(config_.adam_beta2, t);
  for (const auto& [name, g] : grads) {
    auto it = params.find(name);
    Require(it != params.end(), ErrorKind::kContract,
            "optimizer: gradient for unknown tensor " + name);
    Tensor& p = it->second;
    Require(p.shape() == g.shape(), ErrorKind::kDimension,
            "optimizer: gradient shape mismatch for " + name);
    if (config_.optimizer == OptimizerKind::kSgd) {
      for (size_t i = 0; i < p.size(); ++i) p[i] -= lr * g[i];
      continue;
    }
    Tensor& m = m_.try_emplace(name, p.shape()).first->second;
    Tensor& v = v_.try_emplace(name, p.shape()).first->second;
    for (size_t i = 0; i < p.size(); ++i) {
      m[i] = config_.adam_beta1 * m[i] + (1.0 - config_.adam_beta1) * g[i];
      v[i] =
          config_.adam_beta2 * v[i] + (1.0 - config_.adam_beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] -= lr * mhat / (std::sqrt(vhat) + config_.adam_eps);
    }
  }
}

double ClipGlobalNorm(std::map<std::string, Tensor>& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& [name, g] : grads) {
    for (double x : g.data()) sq += x * x;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& [name, g] : grads) {
      for (double& x : g.data()) x *= s;
    }
  }
  return norm;
}

std::vector<Example> MakeExamples(const Dataset& dataset,
                                  const Vocabulary& vocab) {
  std::vector<Example> out;
  for (const CaptionSample& s : dataset.samples) {
    for (const Sentence& c : s.captions) {
      out.push_back({&s, EncodeCaption(c, vocab)});
    }
  }
  return out;
}

std::vector<double> NormalizeAdvantages(std::span<const double> advantages) {
  std::vector<double> out(advantages.size(), 0.0);
  if (advantages.size() < 2) return out;
  const double n = static_cast<double>(advantages.size());
  const double mean =
      std::accumulate(advantages.begin(), advantages.end(), 0.0) / n;
  double var = 0.0;
  for (double a : advantages) var += (a - mean) * (a - mean);
  const double sd = std::sqrt(var / n);
  if (sd == 0.0) return out;
  // Dividing by max(sd, 1e-8) keeps the result at unit variance whenever the
  // batch has real spread.
  const double denom = std::max(sd, 1e-8);
  for (size_t i = 0; i < out.size(); ++i) {
    out[i] = (advantages[i] - mean) / denom;
  }
  return out;
}

Trainer::Trainer(Model& model, const Vocabulary& vocab, TrainConfig config)
    : model_(model),
      vocab_(vocab),
      config_(config),
      optimizer_(config),
      rng_(config.seed) {
  config_.Validate();
  Require(vocab.size() == model.dims().vocab_size, ErrorKind::kDimension,
          "vocabulary has " + std::to_string(vocab.size()) +
              " tokens, model expects " +
              std::to_string(model.dims().vocab_size));
}

std::map<std::string, Tensor> Trainer::Step(std::map<std::string, Tensor> grads,
                                            double lr, StepStats& stats) {
  // Parameters the loss did not reach still get a zero gradient so the Adam
  // moments decay uniformly.
  for (const auto& [name, p] : model_.params()) {
    if (config_.freeze_embedding && name == pname::kEmbedding) continue;
    grads.try_emplace(name, p.shape());
  }
  if (config_.freeze_embedding) grads.erase(pname::kEmbedding);
  for (const auto& [name, g] : grads) {
    Require(AllFinite(g), ErrorKind::kNumeric,
            "non-finite gradient for " + name);
  }
  stats.grad_norm = ClipGlobalNorm(grads, config_.clip_norm);
  optimizer_.Apply(model_.mutable_params(), grads, lr);
  stats.applied = true;
  return grads;
}

StepStats Trainer::XeStep(std::span<const Example> batch, double lr) {
  Require(!batch.empty(), ErrorKind::kValidation, "empty batch");
  if (lr < 0.0) lr = config_.learning_rate;
  StepStats stats;
  for (const Example& ex : batch) {
    Require(ex.caption.size() >= 2, ErrorKind::kValidation,
            "caption too short in sample " + ex.sample->id);
    stats.tokens += ex.caption.size() - 1;
  }
  const double inv_tokens = 1.0 / static_cast<double>(stats.tokens);
  std::map<std::string, Tensor> grads;
  for (const Example& ex : batch) {
    Graph g;
    DecoderSession session(g, model_, ex.sample->feature, ex.sample->tags,
                           BindMode::kTrainable, config_.freeze_embedding);
    TeacherForced tf = WithSampleId(
        ex.sample->id, [&] { return TeacherForcedLoss(session, ex.caption); });
    const double nll = tf.nll.value().item();
    if (!std::isfinite(nll)) {
      Fail(ErrorKind::kNumeric, "non-finite loss on sample " + ex.sample->id);
    }
    stats.loss += nll * inv_tokens;
    g.Backward(Scale(tf.nll, inv_tokens));
    MergeGrads(grads, g.ParameterGradients());
  }
  stats.xe_loss = stats.loss;
  Step(std::move(grads), lr, stats);
  ++xe_steps_;
  return stats;
}

double Trainer::XeLoss(std::span<const Example> batch) const {
  double nll = 0.0;
  size_t tokens = 0;
  for (const Example& ex : batch) {
    nll +=
        ForwardTeacher(model_, ex.sample->feature, ex.sample->tags, ex.caption)
            .nll;
    tokens += ex.caption.size() - 1;
  }
  return tokens == 0 ? 0.0 : nll / static_cast<double>(tokens);
}

std::vector<RewardRecord> Trainer::ComputeRewards(
    std::span<const CaptionSample* const> batch, const CorpusStats& stats) {
  const DecodeOptions greedy = DecodeOptions::Defaults(model_);
  std::vector<RewardRecord> records;
  for (const CaptionSample* s : batch) {
    RewardRecord r;
    const Generation sampled =
        SampleCaption(model_, s->feature, s->tags, greedy.max_len, rng_);
    const Generation base = Generate(model_, s->feature, s->tags, greedy);
    r.sampled = sampled.tokens;
    r.sampled_finished = sampled.finished;
    r.greedy = base.tokens;
    const std::vector<Sentence> refs = Bodies(*s);
    r.sampled_reward = CiderD(ToWords(r.sampled, vocab_), refs, stats);
    r.greedy_reward = CiderD(ToWords(r.greedy, vocab_), refs, stats);
    r.advantage = r.sampled_reward - r.greedy_reward;
    records.push_back(std::move(r));
  }
  return records;
}

StepStats Trainer::PolicyUpdate(std::span<const CaptionSample* const> batch,
                                std::span<const RewardRecord> records,
                                std::span<const double> advantages, double lr) {
  Require(!batch.empty(), ErrorKind::kValidation, "empty batch");
  Require(records.size() == batch.size() && advantages.size() == batch.size(),
          ErrorKind::kDimension, "policy update: batch/record size mismatch");
  if (config_.require_pretrained && !pretrained_ && xe_steps_ == 0) {
    Fail(ErrorKind::kContract,
         "self-critical training needs a cross-entropy pre-trained model");
  }
  if (lr < 0.0) lr = config_.scst_learning_rate;

  const bool policy = std::any_of(advantages.begin(), advantages.end(),
                                  [](double a) { return a != 0.0; }) &&
                      config_.scst_weight > 0.0;
  const bool xe = config_.xe_weight > 0.0;
  StepStats stats;
  stats.degenerate = !policy && config_.scst_weight > 0.0;
  if (!policy && !xe) return stats;

  size_t xe_tokens = 0;
  std::vector<std::vector<std::vector<TokenId>>> refs(batch.size());
  for (size_t i = 0; i < batch.size(); ++i) {
    for (const Sentence& c : batch[i]->captions) {
      refs[i].push_back(EncodeCaption(c, vocab_));
      xe_tokens += refs[i].back().size() - 1;
    }
  }
  stats.tokens = xe_tokens;
  const double b = static_cast<double>(batch.size());
  std::map<std::string, Tensor> grads;
  for (size_t i = 0; i < batch.size(); ++i) {
    Graph g;
    DecoderSession session(g, model_, batch[i]->feature, batch[i]->tags,
                           BindMode::kTrainable, config_.freeze_embedding);
    std::vector<Var> terms;
    if (policy && advantages[i] != 0.0) {
      // -A log p(w^s) = A * nll(w^s)
      TeacherForced tf = WithSampleId(batch[i]->id, [&] {
        return TeacherForcedLoss(session, SampledCaption(records[i]));
      });
      terms.push_back(Scale(tf.nll, config_.scst_weight * advantages[i] / b));
    }
    if (xe) {
      for (const auto& ref : refs[i]) {
        TeacherForced tf = WithSampleId(
            batch[i]->id, [&] { return TeacherForcedLoss(session, ref); });
        stats.xe_loss += tf.nll.value().item() / static_cast<double>(xe_tokens);
        terms.push_back(
            Scale(tf.nll, config_.xe_weight / static_cast<double>(xe_tokens)));
      }
    }
    if (terms.empty()) continue;
    Var loss = terms.size() == 1 ? terms.front() : AddN(terms);
    const double value = loss.value().item();
    if (!std::isfinite(value)) {
      Fail(ErrorKind::kNumeric, "non-finite loss on sample " + batch[i]->id);
    }
    stats.loss += value;
    g.Backward(loss);
    MergeGrads(grads, g.ParameterGradients());
  }
  Step(std::move(grads), lr, stats);
  return stats;
}

StepStats Trainer::ScstStep(std::span<const CaptionSample* const> batch,
                            const CorpusStats& stats,
                            std::vector<RewardRecord>* records) {
  std::vector<RewardRecord> recs = ComputeRewards(batch, stats);
  std::vector<double> raw;
  for (const RewardRecord& r : recs) raw.push_back(r.advantage);
  const std::vector<double> adv = NormalizeAdvantages(raw);
  StepStats out = PolicyUpdate(batch, recs, adv);
  if (records != nullptr) *records = std::move(recs);
  return out;
}

double Trainer::ValidationCider(const Dataset& val) const {
  if (val.empty()) return 0.0;
  const DecodeOptions opts = DecodeOptions::Defaults(model_);
  std::vector<Sentence> cands;
  std::vector<std::vector<Sentence>> refs;
  for (const CaptionSample& s : val.samples) {
    const Generation gen = Generate(model_, s.feature, s.tags, opts);
    cands.push_back(ToWords(gen.tokens, vocab_));
    refs.push_back(Bodies(s));
  }
  return ScoreCorpus(cands, refs).mean.cider_d;
}

TrainResult Trainer::Train(
    const Dataset& train, const Dataset& val,
    const std::function<void(const EpochRecord&)>& on_epoch) {
  Require(!train.empty(), ErrorKind::kValidation, "empty training set");
  const Dataset& monitor = val.empty() ? train : val;
  TrainResult result;
  std::map<std::string, Tensor> best = model_.params();
  bool have_best = false;

  auto finish_epoch = [&](EpochRecord rec, size_t& since_best) {
    rec.val_cider = ValidationCider(monitor);
    rec.improved = !have_best || rec.val_cider > result.best_val_cider;
    if (rec.improved) {
      result.best_val_cider = rec.val_cider;
      best = model_.params();
      have_best = true;
      since_best = 0;
    } else {
      ++since_best;
    }
    ++result.epochs_run;
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
    return since_best >= config_.patience;
  };

  std::vector<Example> examples = MakeExamples(train, vocab_);
  size_t since_best = 0;
  for (size_t epoch = 1; epoch <= config_.epochs; ++epoch) {
    std::shuffle(examples.begin(), examples.end(), rng_);
    double loss = 0.0;
    size_t tokens = 0;
    for (size_t at = 0; at < examples.size(); at += config_.batch_size) {
      const size_t n = std::min(config_.batch_size, examples.size() - at);
      const StepStats s =
          XeStep(std::span<const Example>(examples).subspan(at, n));
      loss += s.loss * static_cast<double>(s.tokens);
      tokens += s.tokens;
    }
    EpochRecord rec{"xe", epoch, loss / static_cast<double>(tokens)};
    rec.xe_loss = rec.train_loss;
    if (finish_epoch(rec, since_best)) {
      result.stopped_early = epoch < config_.epochs;
      break;
    }
  }

  if (config_.scst_epochs > 0) {
    model_.mutable_params() = best;
    std::vector<std::vector<Sentence>> ref_sets;
    std::vector<const CaptionSample*> order;
    for (const CaptionSample& s : train.samples) {
      ref_sets.push_back(Bodies(s));
      order.push_back(&s);
    }
    const CorpusStats stats = CorpusStats::Build(ref_sets);
    since_best = 0;
    for (size_t epoch = 1; epoch <= config_.scst_epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng_);
      double loss = 0.0, xe_nll = 0.0;
      size_t steps = 0, degenerate = 0, tokens = 0;
      for (size_t at = 0; at < order.size(); at += config_.batch_size) {
        const size_t n = std::min(config_.batch_size, order.size() - at);
        const StepStats s = ScstStep(
            std::span<const CaptionSample* const>(order).subspan(at, n), stats);
        loss += s.loss;
        xe_nll += s.xe_loss * static_cast<double>(s.tokens);
        tokens += s.tokens;
        degenerate += s.degenerate;
        ++steps;
      }
      EpochRecord rec{"scst", epoch, loss / static_cast<double>(steps)};
      rec.xe_loss = tokens == 0 ? 0.0 : xe_nll / static_cast<double>(tokens);
      rec.degenerate_batches = degenerate;
      if (finish_epoch(rec, since_best)) {
        result.stopped_early =
            result.stopped_early || epoch < config_.scst_epochs;
        break;
      }
    }
  }
  model_.mutable_params() = best;
  return result;
}

double GradRelativeError(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport GradCheck(Model& model, const Tensor& feature,
                          const Tensor& tags, std::span<const TokenId> caption,
                          const GradCheckOptions& options) {
  std::map<std::string, Tensor> analytic;
  {
    Graph g;
    DecoderSession session(g, model, feature, tags, BindMode::kTrainable,
                           options.freeze_embedding);
    TeacherForced tf = TeacherForcedLoss(session, caption);
    g.Backward(tf.nll);
    analytic = g.ParameterGradients();
  }
  auto loss = [&] { return ForwardTeacher(model, feature, tags, caption).nll; };

  GradCheckReport report;
  std::mt19937_64 rng(options.seed);
  for (auto& [name, p] : model.mutable_params()) {
    if (options.freeze_embedding && name == pname::kEmbedding) continue;
    std::vector<size_t> coords;
    if (p.size() <= options.coords_per_tensor) {
      coords.resize(p.size());
      std::iota(coords.begin(), coords.end(), size_t{0});
    } else {
      std::unordered_set<size_t> seen;
      std::uniform_int_distribution<size_t> pick(0, p.size() - 1);
      while (coords.size() < options.coords_per_tensor) {
        const size_t c = pick(rng);
        if (seen.insert(c).second) coords.push_back(c);
      }
    }
    const auto it = analytic.find(name);
    TensorGradCheck tc{name, coords.size(), 0.0};
    for (size_t c : coords) {
      const double a = it == analytic.end() ? 0.0 : it->second[c];
      const double n = CentralDifference(loss, p[c], options.eps);
      tc.max_rel_error = std::max(tc.max_rel_error, GradRelativeError(a, n));
    }
    report.max_rel_error = std::max(report.max_rel_error, tc.max_rel_error);
    report.tensors.push_back(tc);
  }
  return report;
}

}  // namespace tprcap
