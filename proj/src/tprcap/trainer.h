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

// Cross-entropy and self-critical training, optimizers and gradient checks.

#ifndef TPRCAP_TRAINER_H_
#define TPRCAP_TRAINER_H_

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "tprcap/dataset.h"
#include "tprcap/metrics.h"
#include "tprcap/model.h"
#include "tprcap/vocab.h"

namespace tprcap {

enum class OptimizerKind { kAdam, kSgd };

struct TrainConfig {
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double clip_norm = 5.0;  // global L2 norm; <= 0 disables clipping
  size_t batch_size = 8;
  size_t epochs = 10;      // cross-entropy epochs
  size_t scst_epochs = 0;  // self-critical epochs after cross-entropy
  double scst_learning_rate = 5e-5;
  double scst_weight = 0.7;
  double xe_weight = 0.3;
  size_t patience = 3;  // epochs without validation improvement
  bool freeze_embedding = false;
  // Self-critical steps refuse to run before any cross-entropy step unless
  // this is cleared.
  bool require_pretrained = true;
  uint64_t seed = 1;

  void Validate() const;
};

// Stateful first-order optimizer over a model's named tensors.
class Optimizer {
 public:
  explicit Optimizer(const TrainConfig& config) : config_(config) {}

  // params[name] -= update(grads[name]) at learning rate `lr`. Names missing
  // from `grads` are left untouched.
  void Apply(std::map<std::string, Tensor>& params,
             const std::map<std::string, Tensor>& grads, double lr);
  size_t steps() const { return steps_; }

 private:
  TrainConfig config_;
  size_t steps_ = 0;
  std::map<std::string, Tensor> m_, v_;
};

// Scales all gradients so their joint L2 norm is at most `max_norm`.
// Returns the norm before clipping.
double ClipGlobalNorm(std::map<std::string, Tensor>& grads, double max_norm);

// A training example: one sample with one of its reference captions.
struct Example {
  const CaptionSample* sample = nullptr;
  std::vector<TokenId> caption;  // wrapped ids
};

std::vector<Example> MakeExamples(const Dataset& dataset,
                                  const Vocabulary& vocab);

struct StepStats {
  double loss = 0.0;
  // Mean per-token NLL of the reference captions; 0 when the step has no
  // cross-entropy term.
  double xe_loss = 0.0;
  double grad_norm = 0.0;
  size_t tokens = 0;
  bool applied = false;
  // Self-critical step whose advantages were all zero; the policy term was
  // dropped.
  bool degenerate = false;
};

// Per-sample self-critical reward bookkeeping.
struct RewardRecord {
  std::vector<TokenId> sampled;  // body ids
  bool sampled_finished = false;
  std::vector<TokenId> greedy;
  double sampled_reward = 0.0;
  double greedy_reward = 0.0;
  double advantage = 0.0;  // sampled - greedy, before normalization
};

// (a - mean) / std over the batch (population std). Batches of one sample,
// and batches whose advantages are all equal, come back as all zeros.
std::vector<double> NormalizeAdvantages(std::span<const double> advantages);

struct EpochRecord {
  std::string phase;  // "xe" or "scst"
  size_t epoch = 0;
  double train_loss = 0.0;  // mean objective
  double xe_loss = 0.0;     // mean per-token reference NLL
  double val_cider = 0.0;
  bool improved = false;
  size_t degenerate_batches = 0;  // self-critical phase only
};

struct TrainResult {
  std::vector<EpochRecord> history;
  double best_val_cider = 0.0;
  size_t epochs_run = 0;
  bool stopped_early = false;
};

class Trainer {
 public:
  Trainer(Model& model, const Vocabulary& vocab, TrainConfig config);

  // Mean per-token negative log-likelihood over the batch, one optimizer
  // step at `lr` (the configured rate when negative).
  StepStats XeStep(std::span<const Example> batch, double lr = -1.0);
  // Mean per-token NLL without touching the parameters.
  double XeLoss(std::span<const Example> batch) const;

  // Samples one caption per sample, scores it and the greedy baseline by
  // CIDEr-D against the sample's references.
  std::vector<RewardRecord> ComputeRewards(
      std::span<const CaptionSample* const> batch, const CorpusStats& stats);

  // One update of scst_weight * policy + xe_weight * XE with the given
  // per-sample advantages (used as is). When every advantage is zero the
  // policy term is dropped, and with xe_weight == 0 no step happens.
  StepStats PolicyUpdate(std::span<const CaptionSample* const> batch,
                         std::span<const RewardRecord> records,
                         std::span<const double> advantages, double lr = -1.0);

  // ComputeRewards + NormalizeAdvantages + PolicyUpdate.
  StepStats ScstStep(std::span<const CaptionSample* const> batch,
                     const CorpusStats& stats,
                     std::vector<RewardRecord>* records = nullptr);

  // Cross-entropy epochs with early stopping on validation CIDEr-D, then the
  // configured self-critical epochs. The best parameters seen are restored.
  // `on_epoch` sees every record as it is produced.
  TrainResult Train(
      const Dataset& train, const Dataset& val,
      const std::function<void(const EpochRecord&)>& on_epoch = nullptr);

  // Mean greedy CIDEr-D over a dataset.
  double ValidationCider(const Dataset& val) const;

  void MarkPretrained() { pretrained_ = true; }
  size_t xe_steps() const { return xe_steps_; }
  const Optimizer& optimizer() const { return optimizer_; }
  const TrainConfig& config() const { return config_; }
  std::mt19937_64& rng() { return rng_; }

 private:
  std::map<std::string, Tensor> Step(std::map<std::string, Tensor> grads,
                                     double lr, StepStats& stats);

  Model& model_;
  const Vocabulary& vocab_;
  TrainConfig config_;
  Optimizer optimizer_;
  std::mt19937_64 rng_;
  size_t xe_steps_ = 0;
  bool pretrained_ = false;
};

struct GradCheckOptions {
  double eps = 1e-5;
  size_t coords_per_tensor = 32;
  uint64_t seed = 7;
  bool freeze_embedding = false;
};

struct TensorGradCheck {
  std::string name;
  size_t coords = 0;
  double max_rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<TensorGradCheck> tensors;
  double max_rel_error = 0.0;
};

// |a - n| / max(|a|, |n|, floor). The floor keeps gradients smaller than
// the central-difference roundoff (about 1e-10 at eps = 1e-5 on a loss of
// order 10) from dominating the report.
double GradRelativeError(double analytic, double numeric, double floor = 1e-5);

// Compares backpropagated gradients of the teacher-forced NLL of `caption`
// with central differences on randomly chosen coordinates of every
// parameter tensor.
GradCheckReport GradCheck(Model& model, const Tensor& feature,
                          const Tensor& tags, std::span<const TokenId> caption,
                          const GradCheckOptions& options = {});

}  // namespace tprcap

#endif  // TPRCAP_TRAINER_H_
