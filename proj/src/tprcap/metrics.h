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

// Caption metrics over pre-tokenized sentences: sentence-level BLEU-1..4,
// ROUGE-L (beta = 1.2) and CIDEr-D (sigma = 6, clipped counts, x10 scale).
// No re-tokenization happens here.

#ifndef TPRCAP_METRICS_H_
#define TPRCAP_METRICS_H_

#include <cstddef>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tprcap/vocab.h"

namespace tprcap {

using Sentence = std::vector<std::string>;

// Token ids rendered as decimal strings, for scoring id sequences.
Sentence IdsToSentence(std::span<const TokenId> ids);

struct NgramMatch {
  size_t clipped = 0;  // candidate n-gram counts clipped by max reference count
  size_t total = 0;    // candidate n-grams
};
NgramMatch ModifiedPrecision(const Sentence& candidate,
                             std::span<const Sentence> references, size_t n);

// Cumulative BLEU-1..max_n (index k holds BLEU-(k+1)).
std::vector<double> Bleu(const Sentence& candidate,
                         std::span<const Sentence> references,
                         size_t max_n = 4);

size_t LongestCommonSubsequence(const Sentence& a, const Sentence& b);
double RougeL(const Sentence& candidate, std::span<const Sentence> references,
              double beta = 1.2);

// Document frequencies of 1..4-grams over a corpus of reference sets. An
// n-gram counts once per reference set no matter how many of its
// references contain it.
class CorpusStats {
 public:
  static CorpusStats Build(std::span<const std::vector<Sentence>> ref_sets);

  size_t num_sets() const { return num_sets_; }
  // 0 for unseen n-grams; the n-gram is its tokens joined by '\x1f'.
  size_t df(const std::string& ngram) const;

 private:
  size_t num_sets_ = 0;
  std::unordered_map<std::string, size_t> df_;
};

double CiderD(const Sentence& candidate, std::span<const Sentence> references,
              const CorpusStats& stats, double sigma = 6.0);

struct SampleScores {
  std::vector<double> bleu;  // BLEU-1..4
  double rouge_l = 0.0;
  double cider_d = 0.0;
};

struct CorpusScores {
  std::vector<SampleScores> samples;
  SampleScores mean;
};

// Scores every candidate against its reference set; CIDEr-D document
// frequencies come from `references` as a whole.
CorpusScores ScoreCorpus(std::span<const Sentence> candidates,
                         std::span<const std::vector<Sentence>> references);

}  // namespace tprcap

#endif  // TPRCAP_METRICS_H_
