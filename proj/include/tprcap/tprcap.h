/*
 * Copyright 2026 The tprcap Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/*
 * C interface to the tprcap captioning library.
 *
 * Every fallible call returns a tprcap_status. On failure the message is
 * available from tprcap_last_error() on the same thread until the next call.
 * Handles are opaque and owned by the caller; release them with the matching
 * *_free function. Strings returned through char** out-parameters are
 * released with tprcap_string_free.
 */

#ifndef TPRCAP_TPRCAP_H_
#define TPRCAP_TPRCAP_H_

#include <stddef.h>
#include <stdint.h>

#if defined(TPRCAP_BUILDING_LIBRARY)
#define TPRCAP_API __attribute__((visibility("default")))
#else
#define TPRCAP_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tprcap_status {
  TPRCAP_OK = 0,
  TPRCAP_ERR_DIMENSION = 1,
  TPRCAP_ERR_RANK = 2,
  TPRCAP_ERR_CAPACITY = 3,
  TPRCAP_ERR_RANGE = 4,
  TPRCAP_ERR_VALIDATION = 5,
  TPRCAP_ERR_FORMAT = 6,
  TPRCAP_ERR_IO = 7,
  TPRCAP_ERR_CORRUPTION = 8,
  TPRCAP_ERR_VERSION = 9,
  TPRCAP_ERR_NUMERIC = 10,
  TPRCAP_ERR_CONTRACT = 11,
  TPRCAP_ERR_INVALID_ARGUMENT = 12,
  TPRCAP_ERR_INTERNAL = 13
} tprcap_status;

typedef struct tprcap_dataset tprcap_dataset;
typedef struct tprcap_vocab tprcap_vocab;
typedef struct tprcap_model tprcap_model;

TPRCAP_API const char* tprcap_version(void);
TPRCAP_API const char* tprcap_status_string(tprcap_status status);
TPRCAP_API const char* tprcap_last_error(void);
TPRCAP_API void tprcap_string_free(char* s);

/* Datasets. */

typedef struct tprcap_synth_options {
  uint64_t seed;
  size_t num_samples;
  size_t feature_dim;
  double feature_noise;
  double tag_noise;
  size_t min_captions;
  size_t max_captions;
  /* Seed of the attribute-to-feature basis; 0 means use `seed`. Splits
   * generated with different seeds are comparable only with a shared basis. */
  uint64_t basis_seed;
} tprcap_synth_options;

TPRCAP_API void tprcap_synth_options_default(tprcap_synth_options* options);
TPRCAP_API tprcap_status tprcap_synth_generate(
    const tprcap_synth_options* options, tprcap_dataset** out);
/* capacity: longest accepted caption, markers included. */
TPRCAP_API tprcap_status tprcap_dataset_load(const char* path, size_t capacity,
                                             tprcap_dataset** out);
TPRCAP_API tprcap_status tprcap_dataset_save(const tprcap_dataset* dataset,
                                             const char* path);
TPRCAP_API size_t tprcap_dataset_size(const tprcap_dataset* dataset);
TPRCAP_API size_t tprcap_dataset_feature_dim(const tprcap_dataset* dataset);
TPRCAP_API size_t tprcap_dataset_tag_dim(const tprcap_dataset* dataset);
/* Samples [begin, end) as a new dataset. */
TPRCAP_API tprcap_status tprcap_dataset_slice(const tprcap_dataset* dataset,
                                              size_t begin, size_t end,
                                              tprcap_dataset** out);
TPRCAP_API void tprcap_dataset_free(tprcap_dataset* dataset);

/* Vocabularies. Ids 0-3 are <pad>, <s>, </s>, <unk>. */

TPRCAP_API tprcap_status
tprcap_vocab_from_dataset(const tprcap_dataset* dataset, tprcap_vocab** out);
TPRCAP_API tprcap_status tprcap_vocab_load(const char* path,
                                           tprcap_vocab** out);
TPRCAP_API tprcap_status tprcap_vocab_save(const tprcap_vocab* vocab,
                                           const char* path);
TPRCAP_API size_t tprcap_vocab_size(const tprcap_vocab* vocab);
TPRCAP_API void tprcap_vocab_free(tprcap_vocab* vocab);

/* Models. */

typedef struct tprcap_model_config {
  size_t role_dim;     /* d, a power of two; also the embedding size */
  size_t hidden_dim;   /* m */
  size_t feature_dim;  /* k_v */
  size_t tag_dim;      /* k_S */
  size_t vocab_size;   /* V */
  const char* variant; /* "e+tpr", "h+tpr", "h+e+tpr", "e+dtpr", ... */
  int g_tanh;          /* candidate gate uses tanh instead of sigmoid */
} tprcap_model_config;

TPRCAP_API void tprcap_model_config_default(tprcap_model_config* config);
TPRCAP_API tprcap_status tprcap_model_create(const tprcap_model_config* config,
                                             uint64_t seed, tprcap_model** out);
/* expected may be NULL; otherwise the checkpoint must match it. */
TPRCAP_API tprcap_status tprcap_model_load(const char* path,
                                           const tprcap_model_config* expected,
                                           tprcap_model** out);
TPRCAP_API tprcap_status tprcap_model_save(const tprcap_model* model,
                                           const char* path);
/* Overwrites embedding columns of tokens present in a GloVe text file. */
TPRCAP_API tprcap_status tprcap_model_load_glove(tprcap_model* model,
                                                 const tprcap_vocab* vocab,
                                                 const char* path,
                                                 int zero_mean);
/* Canonical variant name; valid while the model lives. */
TPRCAP_API const char* tprcap_model_variant(const tprcap_model* model);
TPRCAP_API size_t tprcap_model_vocab_size(const tprcap_model* model);
TPRCAP_API void tprcap_model_free(tprcap_model* model);

/* Training. */

typedef struct tprcap_train_options {
  double learning_rate;
  size_t batch_size;
  size_t epochs;
  size_t scst_epochs;
  double scst_learning_rate;
  double scst_weight;
  double xe_weight;
  size_t patience;
  double clip_norm;
  int use_sgd;
  int freeze_embedding;
  uint64_t seed;
} tprcap_train_options;

/* Receives one JSON object per epoch. */
typedef void (*tprcap_epoch_callback)(const char* record_json, void* user);

TPRCAP_API void tprcap_train_options_default(tprcap_train_options* options);
/* val may be NULL or empty, in which case the training set is monitored.
 * summary_json may be NULL. */
TPRCAP_API tprcap_status tprcap_train(
    tprcap_model* model, const tprcap_vocab* vocab, const tprcap_dataset* train,
    const tprcap_dataset* val, const tprcap_train_options* options,
    tprcap_epoch_callback on_epoch, void* user, char** summary_json);

/* Inference and scoring. */

typedef struct tprcap_decode_options {
  size_t beam_width; /* 1 = greedy */
  size_t max_len;    /* markers included; 0 = default */
} tprcap_decode_options;

/* One JSON line {id, tokens, logprob} per sample. */
TPRCAP_API tprcap_status tprcap_caption_dataset(
    const tprcap_model* model, const tprcap_vocab* vocab,
    const tprcap_dataset* dataset, const tprcap_decode_options* options,
    const char* out_path);
/* Corpus BLEU-1..4, ROUGE-L and CIDEr-D of generated captions, as JSON. */
TPRCAP_API tprcap_status tprcap_evaluate(const tprcap_model* model,
                                         const tprcap_vocab* vocab,
                                         const tprcap_dataset* dataset,
                                         const tprcap_decode_options* options,
                                         char** report_json);
/* Candidate JSONL ({id, tokens}) against a reference dataset JSONL. */
TPRCAP_API tprcap_status tprcap_metrics_files(const char* candidates_path,
                                              const char* references_path,
                                              char** report_json);

/* Gradient check of a freshly initialized model at desk dimensions on a
 * random caption. */
typedef struct tprcap_gradcheck_options {
  const char* variant;
  uint64_t seed;
  double eps;
  size_t coords_per_tensor;
  size_t role_dim, hidden_dim, feature_dim, tag_dim, vocab_size;
  size_t caption_len; /* markers included */
  int freeze_embedding;
  int g_tanh;
} tprcap_gradcheck_options;

TPRCAP_API void tprcap_gradcheck_options_default(
    tprcap_gradcheck_options* options);
TPRCAP_API tprcap_status
tprcap_gradcheck(const tprcap_gradcheck_options* options, double* worst_error,
                 char** report_json);

/* Binds random embedding sequences of `length` tokens (drawn from a
 * vocabulary of `vocab_size` random vectors) to Hadamard roles, unbinds every
 * position and retrieves the nearest embedding. */
TPRCAP_API tprcap_status tprcap_tpr_demo(size_t role_dim, size_t vocab_size,
                                         size_t length, size_t trials,
                                         uint64_t seed, double* accuracy);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* TPRCAP_TPRCAP_H_ */
