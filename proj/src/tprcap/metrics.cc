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

#include "tprcap/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <unordered_set>

#include "tprcap/error.h"

namespace tprcap {

namespace {

constexpr size_t kCiderMaxN = 4;

using NgramCounts = std::unordered_map<std::string, size_t>;

std::string JoinNgram(const Sentence& s, size_t start, size_t n) {
  std::string key = s[start];
  for (size_t i = 1; i < n; ++i) {
    key += '\x1f';
    key += s[start + i];
  }
  return key;
}

NgramCounts CountNgrams(const Sentence& s, size_t n) {
  NgramCounts counts;
  if (s.size() < n) return counts;
  for (size_t i = 0; i + n <= s.size(); ++i) ++counts[JoinNgram(s, i, n)];
  return counts;
}

void RequireInputs(const Sentence& candidate,
                   std::span<const Sentence> references, const char* metric) {
  Require(!references.empty(), ErrorKind::kValidation,
          std::string(metric) + ": empty reference set");
  Require(!candidate.empty(), ErrorKind::kValidation,
          std::string(metric) + ": empty candidate");
}

// TF-IDF vector of one sentence for a single n.
struct TfIdf {
  std::unordered_map<std::string, double> weights;
  double norm = 0.0;
};

TfIdf MakeTfIdf(const Sentence& s, size_t n, const CorpusStats& stats) {
  TfIdf v;
  const double log_n = std::log(static_cast<double>(stats.num_sets()));
  for (const auto& [gram, tf] : CountNgrams(s, n)) {
    const double df =
        std::log(std::max(1.0, static_cast<double>(stats.df(gram))));
    const double w = static_cast<double>(tf) * (log_n - df);
    v.weights.emplace(gram, w);
    v.norm += w * w;
  }
  v.norm = std::sqrt(v.norm);
  return v;
}

double CiderSimilarity(const TfIdf& hyp, const TfIdf& ref, double len_hyp,
                       double len_ref, double sigma) {
  double val = 0.0;
  for (const auto& [gram, w] : hyp.weights) {
    auto it = ref.weights.find(gram);
    if (it == ref.weights.end()) continue;
    val += std::min(w, it->second) * it->second;
  }
  if (hyp.norm != 0.0 && ref.norm != 0.0) val /= hyp.norm * ref.norm;
  const double delta = len_hyp - len_ref;
  return val * std::exp(-(delta * delta) / (2.0 * sigma * sigma));
}

}  // namespace

Sentence IdsToSentence(std::span<const TokenId> ids) {
  Sentence s;
  s.reserve(ids.size());
  for (TokenId id : ids) s.push_back(std::to_string(id));
  return s;
}

NgramMatch ModifiedPrecision(const Sentence& candidate,
                             std::span<const Sentence> references, size_t n) {
  NgramMatch m;
  const NgramCounts cand = CountNgrams(candidate, n);
  NgramCounts max_ref;
  for (const Sentence& r : references) {
    for (const auto& [gram, c] : CountNgrams(r, n)) {
      size_t& slot = max_ref[gram];
      slot = std::max(slot, c);
    }
  }
  for (const auto& [gram, c] : cand) {
    m.total += c;
    auto it = max_ref.find(gram);
    if (it != max_ref.end()) m.clipped += std::min(c, it->second);
  }
  return m;
}

std::vector<double> Bleu(const Sentence& candidate,
                         std::span<const Sentence> references, size_t max_n) {
  RequireInputs(candidate, references, "bleu");
  const double c = static_cast<double>(candidate.size());
  // Closest reference length; ties go to the shorter reference.
  size_t best_len = references.front().size();
  for (const Sentence& r : references) {
    const long diff = std::labs(static_cast<long>(r.size()) -
                                static_cast<long>(candidate.size()));
    const long best = std::labs(static_cast<long>(best_len) -
                                static_cast<long>(candidate.size()));
    if (diff < best || (diff == best && r.size() < best_len))
      best_len = r.size();
  }
  const double r = static_cast<double>(best_len);
  const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;

  std::vector<double> scores(max_n, 0.0);
  double log_sum = 0.0;
  bool zero = false;
  for (size_t n = 1; n <= max_n; ++n) {
    const NgramMatch m = ModifiedPrecision(candidate, references, n);
    if (m.total == 0 || m.clipped == 0) zero = true;
    if (!zero) {
      log_sum += std::log(static_cast<double>(m.clipped) /
                          static_cast<double>(m.total));
      scores[n - 1] = bp * std::exp(log_sum / static_cast<double>(n));
    }
  }
  return scores;
}

size_t LongestCommonSubsequence(const Sentence& a, const Sentence& b) {
  std::vector<size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (size_t i = 1; i <= a.size(); ++i) {
    for (size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1
                                    : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double RougeL(const Sentence& candidate, std::span<const Sentence> references,
              double beta) {
  RequireInputs(candidate, references, "rouge_l");
  double best = 0.0;
  for (const Sentence& ref : references) {
    if (ref.empty()) continue;
    const size_t lcs = LongestCommonSubsequence(candidate, ref);
    if (lcs == 0) continue;
    const double p = static_cast<double>(lcs) / candidate.size();
    const double r = static_cast<double>(lcs) / ref.size();
    const double f = (1.0 + beta * beta) * p * r / (r + beta * beta * p);
    best = std::max(best, f);
  }
  return best;
}

CorpusStats CorpusStats::Build(
    std::span<const std::vector<Sentence>> ref_sets) {
  CorpusStats stats;
  stats.num_sets_ = ref_sets.size();
  for (const auto& refs : ref_sets) {
    std::unordered_set<std::string> seen;
    for (const Sentence& r : refs) {
      for (size_t n = 1; n <= kCiderMaxN; ++n) {
        for (const auto& [gram, c] : CountNgrams(r, n)) seen.insert(gram);
      }
    }
    for (const std::string& gram : seen) ++stats.df_[gram];
  }
  return stats;
}

size_t CorpusStats::df(const std::string& ngram) const {
  auto it = df_.find(ngram);
  return it == df_.end() ? 0 : it->second;
}

double CiderD(const Sentence& candidate, std::span<const Sentence> references,
              const CorpusStats& stats, double sigma) {
  Require(stats.num_sets() > 0, ErrorKind::kValidation,
          "cider_d: empty corpus statistics");
  Require(!references.empty(), ErrorKind::kValidation,
          "cider_d: empty reference set");
  double total = 0.0;
  for (size_t n = 1; n <= kCiderMaxN; ++n) {
    const TfIdf hyp = MakeTfIdf(candidate, n, stats);
    double per_n = 0.0;
    for (const Sentence& ref : references) {
      per_n += CiderSimilarity(hyp, MakeTfIdf(ref, n, stats),
                               static_cast<double>(candidate.size()),
                               static_cast<double>(ref.size()), sigma);
    }
    total += per_n / static_cast<double>(references.size());
  }
  return total / static_cast<double>(kCiderMaxN) * 10.0;
}

CorpusScores ScoreCorpus(std::span<const Sentence> candidates,
                         std::span<const std::vector<Sentence>> references) {
  Require(candidates.size() == references.size(), ErrorKind::kDimension,
          "score_corpus: " + std::to_string(candidates.size()) +
              " candidates vs " + std::to_string(references.size()) +
              " reference sets");
  CorpusScores out;
  out.mean.bleu.assign(4, 0.0);
  if (candidates.empty()) return out;
  const CorpusStats stats = CorpusStats::Build(references);
  for (size_t i = 0; i < candidates.size(); ++i) {
    SampleScores s;
    if (candidates[i].empty()) {
      // An empty caption matches nothing.
      s.bleu.assign(4, 0.0);
    } else {
      s.bleu = Bleu(candidates[i], references[i]);
      s.rouge_l = RougeL(candidates[i], references[i]);
      s.cider_d = CiderD(candidates[i], references[i], stats);
    }
    for (size_t n = 0; n < 4; ++n) out.mean.bleu[n] += s.bleu[n];
    out.mean.rouge_l += s.rouge_l;
    out.mean.cider_d += s.cider_d;
    out.samples.push_back(std::move(s));
  }
  const double count = static_cast<double>(candidates.size());
  for (double& b : out.mean.bleu) b /= count;
  out.mean.rouge_l /= count;
  out.mean.cider_d /= count;
  return out;
}

}  // namespace tprcap
