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

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <new>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "tprcap/captioner.h"
#include "tprcap/checkpoint.h"
#include "tprcap/dataset.h"
#include "tprcap/error.h"
#include "tprcap/metrics.h"
#include "tprcap/model.h"
#include "tprcap/tpr.h"
#include "tprcap/tprcap.h"
#include "tprcap/trainer.h"
#include "tprcap/vocab.h"

struct tprcap_dataset {
  tprcap::Dataset impl;
};

struct tprcap_vocab {
  tprcap::Vocabulary impl;
};

struct tprcap_model {
  explicit tprcap_model(tprcap::Model m)
      : impl(std::move(m)), variant(impl.config().variant.Name()) {}
  tprcap::Model impl;
  std::string variant;
};

namespace {

using Json = nlohmann::ordered_json;

thread_local std::string g_last_error;

tprcap_status FromKind(tprcap::ErrorKind kind) {
  using tprcap::ErrorKind;
  switch (kind) {
    case ErrorKind::kDimension:
      return TPRCAP_ERR_DIMENSION;
    case ErrorKind::kRank:
      return TPRCAP_ERR_RANK;
    case ErrorKind::kCapacity:
      return TPRCAP_ERR_CAPACITY;
    case ErrorKind::kRange:
      return TPRCAP_ERR_RANGE;
    case ErrorKind::kValidation:
      return TPRCAP_ERR_VALIDATION;
    case ErrorKind::kFormat:
      return TPRCAP_ERR_FORMAT;
    case ErrorKind::kIo:
      return TPRCAP_ERR_IO;
    case ErrorKind::kCorruption:
      return TPRCAP_ERR_CORRUPTION;
    case ErrorKind::kVersion:
      return TPRCAP_ERR_VERSION;
    case ErrorKind::kNumeric:
      return TPRCAP_ERR_NUMERIC;
    case ErrorKind::kContract:
      return TPRCAP_ERR_CONTRACT;
  }
  return TPRCAP_ERR_INTERNAL;
}

struct NullArgument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Runs `fn`, translating exceptions into status codes.
template <typename Fn>
tprcap_status Guard(Fn&& fn) {
  g_last_error.clear();
  try {
    fn();
    return TPRCAP_OK;
  } catch (const tprcap::Error& e) {
    g_last_error = e.what();
    return FromKind(e.kind());
  } catch (const NullArgument& e) {
    g_last_error = e.what();
    return TPRCAP_ERR_INVALID_ARGUMENT;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return TPRCAP_ERR_INTERNAL;
}

void NotNull(const void* p, const char* what) {
  if (p == nullptr) {
    throw NullArgument(std::string(what) + " must not be NULL");
  }
}

char* CopyString(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

tprcap::ModelConfig ToConfig(const tprcap_model_config& c) {
  tprcap::ModelConfig cfg;
  cfg.dims.role_dim = c.role_dim;
  cfg.dims.hidden_dim = c.hidden_dim;
  cfg.dims.feature_dim = c.feature_dim;
  cfg.dims.tag_dim = c.tag_dim;
  cfg.dims.vocab_size = c.vocab_size;
  cfg.dims.embedding_dim = c.role_dim;
  NotNull(c.variant, "variant");
  const auto v = tprcap::VariantConfig::FromName(c.variant);
  if (!v) {
    throw tprcap::Error(tprcap::ErrorKind::kValidation,
                        std::string("unknown variant '") + c.variant + "'");
  }
  cfg.variant = *v;
  cfg.g_activation = c.g_tanh ? tprcap::GateActivation::kTanh
                              : tprcap::GateActivation::kSigmoid;
  cfg.Validate();
  return cfg;
}

tprcap::DecodeOptions ToDecode(const tprcap::Model& model,
                               const tprcap_decode_options* o) {
  tprcap::DecodeOptions opts = tprcap::DecodeOptions::Defaults(model);
  if (o != nullptr) {
    if (o->beam_width > 1) {
      opts.mode = tprcap::DecodeMode::kBeam;
      opts.beam_width = o->beam_width;
    }
    if (o->max_len != 0) opts.max_len = o->max_len;
  }
  opts.Validate(model);
  return opts;
}

void CheckCompatible(const tprcap::Model& model,
                     const tprcap::Vocabulary& vocab,
                     const tprcap::Dataset& ds) {
  const tprcap::ModelDims& d = model.dims();
  if (vocab.size() != d.vocab_size) {
    throw tprcap::Error(tprcap::ErrorKind::kDimension,
                        "vocabulary has " + std::to_string(vocab.size()) +
                            " tokens, model expects " +
                            std::to_string(d.vocab_size));
  }
  if (!ds.empty() &&
      (ds.feature_dim() != d.feature_dim || ds.tag_dim() != d.tag_dim)) {
    throw tprcap::Error(
        tprcap::ErrorKind::kDimension,
        "dataset feature/tag sizes " + std::to_string(ds.feature_dim()) + "/" +
            std::to_string(ds.tag_dim()) + " do not match the model's " +
            std::to_string(d.feature_dim) + "/" + std::to_string(d.tag_dim));
  }
}

Json ScoresJson(const tprcap::SampleScores& s) {
  Json j;
  j["bleu_1"] = s.bleu[0];
  j["bleu_2"] = s.bleu[1];
  j["bleu_3"] = s.bleu[2];
  j["bleu_4"] = s.bleu[3];
  j["rouge_l"] = s.rouge_l;
  j["cider_d"] = s.cider_d;
  return j;
}

std::vector<tprcap::Sentence> Bodies(const tprcap::CaptionSample& s) {
  std::vector<tprcap::Sentence> refs;
  for (const auto& c : s.captions) refs.push_back(tprcap::CaptionBody(c));
  return refs;
}

}  // namespace

extern "C" {

const char* tprcap_version(void) { return "0.1.0"; }

const char* tprcap_status_string(tprcap_status status) {
  switch (status) {
    case TPRCAP_OK:
      return "ok";
    case TPRCAP_ERR_DIMENSION:
      return "dimension error";
    case TPRCAP_ERR_RANK:
      return "rank error";
    case TPRCAP_ERR_CAPACITY:
      return "capacity error";
    case TPRCAP_ERR_RANGE:
      return "range error";
    case TPRCAP_ERR_VALIDATION:
      return "validation error";
    case TPRCAP_ERR_FORMAT:
      return "format error";
    case TPRCAP_ERR_IO:
      return "i/o error";
    case TPRCAP_ERR_CORRUPTION:
      return "corruption error";
    case TPRCAP_ERR_VERSION:
      return "version error";
    case TPRCAP_ERR_NUMERIC:
      return "numeric error";
    case TPRCAP_ERR_CONTRACT:
      return "contract violation";
    case TPRCAP_ERR_INVALID_ARGUMENT:
      return "invalid argument";
    case TPRCAP_ERR_INTERNAL:
      return "internal error";
  }
  return "unknown status";
}

const char* tprcap_last_error(void) { return g_last_error.c_str(); }

void tprcap_string_free(char* s) { std::free(s); }

void tprcap_synth_options_default(tprcap_synth_options* options) {
  if (options == nullptr) return;
  const tprcap::SynthOptions d;
  options->seed = 1;
  options->num_samples = 32;
  options->feature_dim = d.feature_dim;
  options->feature_noise = d.feature_noise;
  options->tag_noise = d.tag_noise;
  options->min_captions = d.min_captions;
  options->max_captions = d.max_captions;
  options->basis_seed = 0;
}

tprcap_status tprcap_synth_generate(const tprcap_synth_options* options,
                                    tprcap_dataset** out) {
  return Guard([&] {
    NotNull(options, "options");
    NotNull(out, "out");
    tprcap::SynthOptions o;
    o.feature_dim = options->feature_dim;
    o.feature_noise = options->feature_noise;
    o.tag_noise = options->tag_noise;
    o.min_captions = options->min_captions;
    o.max_captions = options->max_captions;
    if (options->basis_seed != 0) o.basis_seed = options->basis_seed;
    auto ds = std::make_unique<tprcap_dataset>();
    ds->impl = tprcap::SynthGenerate(options->seed, options->num_samples,
                                     tprcap::SynthGrammar::Default(), o);
    *out = ds.release();
  });
}

tprcap_status tprcap_dataset_load(const char* path, size_t capacity,
                                  tprcap_dataset** out) {
  return Guard([&] {
    NotNull(path, "path");
    NotNull(out, "out");
    auto ds = std::make_unique<tprcap_dataset>();
    ds->impl = tprcap::LoadDataset(path, capacity);
    *out = ds.release();
  });
}

tprcap_status tprcap_dataset_save(const tprcap_dataset* dataset,
                                  const char* path) {
  return Guard([&] {
    NotNull(dataset, "dataset");
    NotNull(path, "path");
    tprcap::SaveDataset(dataset->impl, path);
  });
}

size_t tprcap_dataset_size(const tprcap_dataset* dataset) {
  return dataset == nullptr ? 0 : dataset->impl.size();
}

size_t tprcap_dataset_feature_dim(const tprcap_dataset* dataset) {
  return dataset == nullptr ? 0 : dataset->impl.feature_dim();
}

size_t tprcap_dataset_tag_dim(const tprcap_dataset* dataset) {
  return dataset == nullptr ? 0 : dataset->impl.tag_dim();
}

tprcap_status tprcap_dataset_slice(const tprcap_dataset* dataset, size_t begin,
                                   size_t end, tprcap_dataset** out) {
  return Guard([&] {
    NotNull(dataset, "dataset");
    NotNull(out, "out");
    tprcap::Require(begin <= end && end <= dataset->impl.size(),
                    tprcap::ErrorKind::kRange, "slice out of range");
    auto ds = std::make_unique<tprcap_dataset>();
    ds->impl.samples.assign(dataset->impl.samples.begin() + begin,
                            dataset->impl.samples.begin() + end);
    *out = ds.release();
  });
}

void tprcap_dataset_free(tprcap_dataset* dataset) { delete dataset; }

tprcap_status tprcap_vocab_from_dataset(const tprcap_dataset* dataset,
                                        tprcap_vocab** out) {
  return Guard([&] {
    NotNull(dataset, "dataset");
    NotNull(out, "out");
    auto v = std::make_unique<tprcap_vocab>();
    v->impl = tprcap::BuildVocabulary(dataset->impl);
    *out = v.release();
  });
}

tprcap_status tprcap_vocab_load(const char* path, tprcap_vocab** out) {
  return Guard([&] {
    NotNull(path, "path");
    NotNull(out, "out");
    auto v = std::make_unique<tprcap_vocab>();
    v->impl = tprcap::Vocabulary::Load(path);
    *out = v.release();
  });
}

tprcap_status tprcap_vocab_save(const tprcap_vocab* vocab, const char* path) {
  return Guard([&] {
    NotNull(vocab, "vocab");
    NotNull(path, "path");
    vocab->impl.Save(path);
  });
}

size_t tprcap_vocab_size(const tprcap_vocab* vocab) {
  return vocab == nullptr ? 0 : vocab->impl.size();
}

void tprcap_vocab_free(tprcap_vocab* vocab) { delete vocab; }

void tprcap_model_config_default(tprcap_model_config* config) {
  if (config == nullptr) return;
  const tprcap::ModelDims d;
  config->role_dim = d.role_dim;
  config->hidden_dim = d.hidden_dim;
  config->feature_dim = d.feature_dim;
  config->tag_dim = d.tag_dim;
  config->vocab_size = 0;
  config->variant = "e+dtpr";
  config->g_tanh = 0;
}

tprcap_status tprcap_model_create(const tprcap_model_config* config,
                                  uint64_t seed, tprcap_model** out) {
  return Guard([&] {
    NotNull(config, "config");
    NotNull(out, "out");
    *out = new tprcap_model(tprcap::Model::Create(ToConfig(*config), seed));
  });
}

tprcap_status tprcap_model_load(const char* path,
                                const tprcap_model_config* expected,
                                tprcap_model** out) {
  return Guard([&] {
    NotNull(path, "path");
    NotNull(out, "out");
    std::optional<tprcap::ModelConfig> want;
    if (expected != nullptr) want = ToConfig(*expected);
    *out = new tprcap_model(tprcap::LoadCheckpoint(path, want));
  });
}

tprcap_status tprcap_model_save(const tprcap_model* model, const char* path) {
  return Guard([&] {
    NotNull(model, "model");
    NotNull(path, "path");
    tprcap::SaveCheckpoint(model->impl, path);
  });
}

tprcap_status tprcap_model_load_glove(tprcap_model* model,
                                      const tprcap_vocab* vocab,
                                      const char* path, int zero_mean) {
  return Guard([&] {
    NotNull(model, "model");
    NotNull(vocab, "vocab");
    NotNull(path, "path");
    tprcap::GloveLoadOptions opts;
    opts.zero_mean = zero_mean != 0;
    auto [glove_vocab, table] = tprcap::LoadGloveText(path, opts);
    tprcap::Tensor& emb = model->impl.mutable_param(tprcap::pname::kEmbedding);
    tprcap::Require(table.dim(0) == emb.dim(0), tprcap::ErrorKind::kDimension,
                    "GloVe vectors have " + std::to_string(table.dim(0)) +
                        " entries, the model embeds into " +
                        std::to_string(emb.dim(0)));
    tprcap::Require(vocab->impl.size() == emb.dim(1),
                    tprcap::ErrorKind::kDimension,
                    "vocabulary does not match the model");
    for (tprcap::TokenId id = tprcap::kNumReserved; id < vocab->impl.size();
         ++id) {
      const std::string& tok = vocab->impl.Token(id);
      if (!glove_vocab.Contains(tok)) continue;
      const tprcap::TokenId src = glove_vocab.Lookup(tok);
      for (size_t r = 0; r < emb.dim(0); ++r) emb.at(r, id) = table.at(r, src);
    }
  });
}

const char* tprcap_model_variant(const tprcap_model* model) {
  return model == nullptr ? "" : model->variant.c_str();
}

size_t tprcap_model_vocab_size(const tprcap_model* model) {
  return model == nullptr ? 0 : model->impl.dims().vocab_size;
}

void tprcap_model_free(tprcap_model* model) { delete model; }

void tprcap_train_options_default(tprcap_train_options* options) {
  if (options == nullptr) return;
  const tprcap::TrainConfig c;
  options->learning_rate = c.learning_rate;
  options->batch_size = c.batch_size;
  options->epochs = c.epochs;
  options->scst_epochs = c.scst_epochs;
  options->scst_learning_rate = c.scst_learning_rate;
  options->scst_weight = c.scst_weight;
  options->xe_weight = c.xe_weight;
  options->patience = c.patience;
  options->clip_norm = c.clip_norm;
  options->use_sgd = 0;
  options->freeze_embedding = 0;
  options->seed = c.seed;
}

tprcap_status tprcap_train(tprcap_model* model, const tprcap_vocab* vocab,
                           const tprcap_dataset* train,
                           const tprcap_dataset* val,
                           const tprcap_train_options* options,
                           tprcap_epoch_callback on_epoch, void* user,
                           char** summary_json) {
  return Guard([&] {
    NotNull(model, "model");
    NotNull(vocab, "vocab");
    NotNull(train, "train");
    NotNull(options, "options");
    CheckCompatible(model->impl, vocab->impl, train->impl);
    static const tprcap::Dataset kEmpty;
    const tprcap::Dataset& val_ds = val == nullptr ? kEmpty : val->impl;
    CheckCompatible(model->impl, vocab->impl, val_ds);

    tprcap::TrainConfig cfg;
    cfg.optimizer = options->use_sgd ? tprcap::OptimizerKind::kSgd
                                     : tprcap::OptimizerKind::kAdam;
    cfg.learning_rate = options->learning_rate;
    cfg.batch_size = options->batch_size;
    cfg.epochs = options->epochs;
    cfg.scst_epochs = options->scst_epochs;
    cfg.scst_learning_rate = options->scst_learning_rate;
    cfg.scst_weight = options->scst_weight;
    cfg.xe_weight = options->xe_weight;
    cfg.patience = options->patience;
    cfg.clip_norm = options->clip_norm;
    cfg.freeze_embedding = options->freeze_embedding != 0;
    cfg.seed = options->seed;

    tprcap::Trainer trainer(model->impl, vocab->impl, cfg);
    const tprcap::TrainResult result =
        trainer.Train(train->impl, val_ds, [&](const tprcap::EpochRecord& r) {
          if (on_epoch == nullptr) return;
          Json j;
          j["epoch"] = r.epoch;
          j["phase"] = r.phase;
          j["xe_loss"] = r.xe_loss;
          if (r.phase == "scst") j["loss"] = r.train_loss;
          j["val_cider"] = r.val_cider;
          j["lr"] =
              r.phase == "xe" ? cfg.learning_rate : cfg.scst_learning_rate;
          j["improved"] = r.improved;
          if (r.phase == "scst") j["degenerate_batches"] = r.degenerate_batches;
          on_epoch(j.dump().c_str(), user);
        });
    if (summary_json != nullptr) {
      Json j;
      j["epochs_run"] = result.epochs_run;
      j["best_val_cider"] = result.best_val_cider;
      j["stopped_early"] = result.stopped_early;
      *summary_json = CopyString(j.dump());
    }
  });
}

tprcap_status tprcap_caption_dataset(const tprcap_model* model,
                                     const tprcap_vocab* vocab,
                                     const tprcap_dataset* dataset,
                                     const tprcap_decode_options* options,
                                     const char* out_path) {
  return Guard([&] {
    NotNull(model, "model");
    NotNull(vocab, "vocab");
    NotNull(dataset, "dataset");
    NotNull(out_path, "out_path");
    CheckCompatible(model->impl, vocab->impl, dataset->impl);
    const tprcap::DecodeOptions opts = ToDecode(model->impl, options);
    std::string text;
    for (const tprcap::CaptionSample& s : dataset->impl.samples) {
      const tprcap::Generation g =
          tprcap::Generate(model->impl, s.feature, s.tags, opts);
      Json j;
      j["id"] = s.id;
      j["tokens"] = vocab->impl.Decode(g.tokens);
      j["logprob"] = g.logprob;
      text += j.dump() + "\n";
    }
    std::ofstream out(out_path, std::ios::binary);
    tprcap::Require(out.good(), tprcap::ErrorKind::kIo,
                    std::string("cannot write ") + out_path);
    out << text;
    tprcap::Require(out.good(), tprcap::ErrorKind::kIo,
                    std::string("write failed: ") + out_path);
  });
}

tprcap_status tprcap_evaluate(const tprcap_model* model,
                              const tprcap_vocab* vocab,
                              const tprcap_dataset* dataset,
                              const tprcap_decode_options* options,
                              char** report_json) {
  return Guard([&] {
    NotNull(model, "model");
    NotNull(vocab, "vocab");
    NotNull(dataset, "dataset");
    NotNull(report_json, "report_json");
    CheckCompatible(model->impl, vocab->impl, dataset->impl);
    const tprcap::DecodeOptions opts = ToDecode(model->impl, options);
    std::vector<tprcap::Sentence> cands;
    std::vector<std::vector<tprcap::Sentence>> refs;
    size_t exact = 0;
    for (const tprcap::CaptionSample& s : dataset->impl.samples) {
      const tprcap::Generation g =
          tprcap::Generate(model->impl, s.feature, s.tags, opts);
      cands.push_back(vocab->impl.Decode(g.tokens));
      refs.push_back(Bodies(s));
      for (const auto& r : refs.back()) {
        if (r == cands.back()) {
          ++exact;
          break;
        }
      }
    }
    const tprcap::CorpusScores scores = tprcap::ScoreCorpus(cands, refs);
    Json j = ScoresJson(scores.mean);
    j["samples"] = dataset->impl.size();
    j["exact_match"] = dataset->impl.empty()
                           ? 0.0
                           : static_cast<double>(exact) /
                                 static_cast<double>(dataset->impl.size());
    *report_json = CopyString(j.dump());
  });
}

tprcap_status tprcap_metrics_files(const char* candidates_path,
                                   const char* references_path,
                                   char** report_json) {
  return Guard([&] {
    NotNull(candidates_path, "candidates_path");
    NotNull(references_path, "references_path");
    NotNull(report_json, "report_json");
    const tprcap::Dataset refs_ds =
        tprcap::LoadDataset(references_path, static_cast<size_t>(-1));
    std::map<std::string, tprcap::Sentence> cand_by_id;
    std::ifstream in(candidates_path, std::ios::binary);
    tprcap::Require(in.good(), tprcap::ErrorKind::kIo,
                    std::string("cannot open ") + candidates_path);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const std::string where =
          std::string(candidates_path) + ":" + std::to_string(lineno) + ": ";
      Json j;
      try {
        j = Json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        tprcap::Fail(tprcap::ErrorKind::kFormat,
                     where + "malformed JSON: " + e.what());
      }
      if (!j.is_object() || !j.contains("id") || !j["id"].is_string() ||
          !j.contains("tokens") || !j["tokens"].is_array()) {
        tprcap::Fail(tprcap::ErrorKind::kFormat,
                     where + "expected {\"id\": string, \"tokens\": [...]}");
      }
      tprcap::Sentence toks;
      for (const Json& t : j["tokens"]) {
        if (!t.is_string()) {
          tprcap::Fail(tprcap::ErrorKind::kFormat,
                       where + "tokens must be strings");
        }
        toks.push_back(t.get<std::string>());
      }
      if (!cand_by_id.emplace(j["id"].get<std::string>(), toks).second) {
        tprcap::Fail(tprcap::ErrorKind::kFormat, where + "duplicate id");
      }
    }
    std::vector<tprcap::Sentence> cands;
    std::vector<std::vector<tprcap::Sentence>> refs;
    std::vector<std::string> ids;
    for (const tprcap::CaptionSample& s : refs_ds.samples) {
      auto it = cand_by_id.find(s.id);
      if (it == cand_by_id.end()) {
        tprcap::Fail(tprcap::ErrorKind::kValidation,
                     "no candidate for reference id " + s.id);
      }
      cands.push_back(it->second);
      refs.push_back(Bodies(s));
      ids.push_back(s.id);
    }
    tprcap::Require(cands.size() == cand_by_id.size(),
                    tprcap::ErrorKind::kValidation,
                    "candidates contain ids missing from the references");
    const tprcap::CorpusScores scores = tprcap::ScoreCorpus(cands, refs);
    Json per = Json::array();
    for (size_t i = 0; i < ids.size(); ++i) {
      Json s = ScoresJson(scores.samples[i]);
      Json row;
      row["id"] = ids[i];
      for (auto& [k, v] : s.items()) row[k] = v;
      per.push_back(row);
    }
    Json j;
    j["corpus"] = ScoresJson(scores.mean);
    j["samples"] = per;
    *report_json = CopyString(j.dump());
  });
}

void tprcap_gradcheck_options_default(tprcap_gradcheck_options* options) {
  if (options == nullptr) return;
  const tprcap::GradCheckOptions g;
  options->variant = "e+dtpr";
  options->seed = 1;
  options->eps = g.eps;
  options->coords_per_tensor = g.coords_per_tensor;
  options->role_dim = 32;
  options->hidden_dim = 64;
  options->feature_dim = 64;
  options->tag_dim = 16;
  options->vocab_size = 64;
  options->caption_len = 8;
  options->freeze_embedding = 0;
  options->g_tanh = 0;
}

tprcap_status tprcap_gradcheck(const tprcap_gradcheck_options* options,
                               double* worst_error, char** report_json) {
  return Guard([&] {
    NotNull(options, "options");
    tprcap_model_config mc;
    mc.role_dim = options->role_dim;
    mc.hidden_dim = options->hidden_dim;
    mc.feature_dim = options->feature_dim;
    mc.tag_dim = options->tag_dim;
    mc.vocab_size = options->vocab_size;
    mc.variant = options->variant;
    mc.g_tanh = options->g_tanh;
    const tprcap::ModelConfig cfg = ToConfig(mc);
    tprcap::Require(
        options->caption_len >= 2 && options->caption_len <= cfg.dims.role_dim,
        tprcap::ErrorKind::kValidation, "caption length must lie in [2, d]");
    tprcap::Model model = tprcap::Model::Create(cfg, options->seed);

    std::mt19937_64 rng(options->seed + 1);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<tprcap::TokenId> word(
        tprcap::kNumReserved,
        static_cast<tprcap::TokenId>(cfg.dims.vocab_size - 1));
    tprcap::Tensor v({cfg.dims.feature_dim});
    for (double& x : v.data()) x = normal(rng);
    tprcap::Tensor tags({cfg.dims.tag_dim});
    for (double& x : tags.data()) x = unit(rng);
    std::vector<tprcap::TokenId> body;
    for (size_t i = 0; i + 2 < options->caption_len; ++i)
      body.push_back(word(rng));
    const std::vector<tprcap::TokenId> caption = tprcap::WrapCaption(body);

    tprcap::GradCheckOptions go;
    go.eps = options->eps;
    go.coords_per_tensor = options->coords_per_tensor;
    go.seed = options->seed;
    go.freeze_embedding = options->freeze_embedding != 0;
    const tprcap::GradCheckReport report =
        tprcap::GradCheck(model, v, tags, caption, go);
    if (worst_error != nullptr) *worst_error = report.max_rel_error;
    if (report_json != nullptr) {
      Json j;
      j["variant"] = cfg.variant.Name();
      j["eps"] = go.eps;
      j["max_rel_error"] = report.max_rel_error;
      Json tensors = Json::array();
      for (const auto& t : report.tensors) {
        tensors.push_back({{"name", t.name},
                           {"coords", t.coords},
                           {"max_rel_error", t.max_rel_error}});
      }
      j["tensors"] = tensors;
      *report_json = CopyString(j.dump());
    }
  });
}

tprcap_status tprcap_tpr_demo(size_t role_dim, size_t vocab_size, size_t length,
                              size_t trials, uint64_t seed, double* accuracy) {
  return Guard([&] {
    NotNull(accuracy, "accuracy");
    *accuracy =
        tprcap::RetrievalAccuracy(role_dim, vocab_size, length, trials, seed);
  });
}

}  // extern "C"
