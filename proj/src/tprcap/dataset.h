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

// Caption datasets: the JSONL file format and a seeded synthetic corpus.
//
// One JSON object per line:
//
//   {"id": "s0000", "v": [...], "tags": [...], "captions": [["a", "red", ...]]}
//
// Captions are stored without sentence markers; in memory every caption is
// wrapped as <s> ... </s>.

#ifndef TPRCAP_DATASET_H_
#define TPRCAP_DATASET_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tprcap/metrics.h"
#include "tprcap/tensor.h"
#include "tprcap/vocab.h"

namespace tprcap {

struct CaptionSample {
  std::string id;
  Tensor feature;                  // v, [k_v]
  Tensor tags;                     // S, [k_S], entries in [0, 1]
  std::vector<Sentence> captions;  // wrapped in <s> ... </s>
};

struct Dataset {
  std::vector<CaptionSample> samples;

  size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  size_t feature_dim() const;
  size_t tag_dim() const;
};

// Loads and validates a JSONL dataset. Captions longer than `capacity`
// tokens (markers included) are rejected. Errors carry the line number.
Dataset LoadDataset(const std::string& path, size_t capacity = 32);
void SaveDataset(const Dataset& dataset, const std::string& path);
// The exact bytes SaveDataset writes.
std::string DatasetToJsonl(const Dataset& dataset);
Dataset DatasetFromJsonl(const std::string& text, size_t capacity = 32,
                         const std::string& source = "<memory>");

// Vocabulary of every caption token, in order of first appearance.
Vocabulary BuildVocabulary(const Dataset& dataset);

// Id sequence of a wrapped caption.
std::vector<TokenId> EncodeCaption(const Sentence& caption,
                                   const Vocabulary& vocab);
// Caption body without the markers.
Sentence CaptionBody(const Sentence& caption);

struct SynthGrammar {
  std::vector<std::string> objects;
  std::vector<std::string> colors;
  std::vector<std::string> actions;

  // 8 objects x 6 colors x 6 actions.
  static SynthGrammar Default();
  size_t num_attributes() const {
    return objects.size() + colors.size() + actions.size();
  }
};

struct SynthOptions {
  size_t feature_dim = 64;
  double feature_noise = 0.05;  // Gaussian sigma added to v
  double tag_noise = 0.1;       // uniform [0, tag_noise] added to tags
  size_t min_captions = 1;
  size_t max_captions = 3;
  // Seed of the attribute-to-feature basis. Unset means the corpus seed.
  // Splits generated with different seeds share features only when they
  // share this.
  std::optional<uint64_t> basis_seed;
};

// Tag layout: objects, then colors, then actions. v is the sum of three
// fixed random attribute vectors plus noise. Caption k of a sample uses
// template k, so single-caption samples always use the first template.
Dataset SynthGenerate(uint64_t seed, size_t num_samples,
                      const SynthGrammar& grammar = SynthGrammar::Default(),
                      const SynthOptions& options = {});

// The attribute vectors SynthGenerate uses for a given seed: [k_v x k_S].
Tensor SynthAttributeBasis(uint64_t seed, const SynthGrammar& grammar,
                           size_t feature_dim);

// Vocabulary covering every word the grammar can produce.
Vocabulary SynthVocabulary(const SynthGrammar& grammar);

}  // namespace tprcap

#endif  // TPRCAP_DATASET_H_
