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

#ifndef TPRCAP_VOCAB_H_
#define TPRCAP_VOCAB_H_

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tprcap/tensor.h"

namespace tprcap {

using TokenId = uint32_t;

inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kBosId = 1;
inline constexpr TokenId kEosId = 2;
inline constexpr TokenId kUnkId = 3;
inline constexpr TokenId kNumReserved = 4;

// Dense token <-> id map. Ids 0..3 are always <pad>, <s>, </s>, <unk>.
class Vocabulary {
 public:
  Vocabulary();

  // Returns the id of `token`, adding it if absent.
  TokenId Add(const std::string& token);
  // <unk> on miss.
  TokenId Lookup(const std::string& token) const;
  bool Contains(const std::string& token) const;
  const std::string& Token(TokenId id) const;
  size_t size() const { return tokens_.size(); }

  std::vector<TokenId> Encode(std::span<const std::string> tokens) const;
  std::vector<std::string> Decode(std::span<const TokenId> ids) const;

  // Text file with one non-reserved token per line; line i holds id i + 4.
  static Vocabulary Load(const std::string& path);
  void Save(const std::string& path) const;

  bool operator==(const Vocabulary& other) const {
    return tokens_ == other.tokens_;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

// Subtracts, for every embedding dimension (row), its mean across the
// vocabulary (columns).
void ZeroMean(Tensor& table);

struct GloveLoadOptions {
  bool zero_mean = true;
};

// GloVe text format: `token f_1 ... f_e` per line. The table is e x V with
// the reserved tokens first; reserved tokens not listed in the file get zero
// vectors before centering.
std::pair<Vocabulary, Tensor> LoadGloveText(const std::string& path,
                                            GloveLoadOptions options = {});
// Writes every column, reserved tokens included, with round-trip precision.
void SaveGloveText(const std::string& path, const Vocabulary& vocab,
                   const Tensor& table);

// Entries uniform in [-0.5/e, 0.5/e] from mt19937_64(seed), then centered.
Tensor RandomEmbedding(size_t vocab_size, size_t embedding_dim, uint64_t seed);

// Column gather; equals table * one_hot(id).
std::vector<Tensor> Embed(std::span<const TokenId> ids, const Tensor& table);

}  // namespace tprcap

#endif  // TPRCAP_VOCAB_H_
