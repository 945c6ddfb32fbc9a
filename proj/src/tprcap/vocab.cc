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

#include "tprcap/vocab.h"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "tprcap/error.h"

namespace tprcap {

namespace {

constexpr const char* kReservedTokens[kNumReserved] = {"<pad>", "<s>", "</s>",
                                                       "<unk>"};

std::string FormatDouble(double x) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, end);
}

bool ParseDouble(const std::string& s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

}  // namespace

Vocabulary::Vocabulary() {
  for (const char* t : kReservedTokens) Add(t);
}

TokenId Vocabulary::Add(const std::string& token) {
  auto it = ids_.find(token);
  if (it != ids_.end()) return it->second;
  const TokenId id = static_cast<TokenId>(tokens_.size());
  tokens_.push_back(token);
  ids_.emplace(token, id);
  return id;
}

TokenId Vocabulary::Lookup(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnkId : it->second;
}

bool Vocabulary::Contains(const std::string& token) const {
  return ids_.contains(token);
}

const std::string& Vocabulary::Token(TokenId id) const {
  Require(id < tokens_.size(), ErrorKind::kRange,
          "token id " + std::to_string(id) +
              " out of range for vocabulary of " +
              std::to_string(tokens_.size()));
  return tokens_[id];
}

std::vector<TokenId> Vocabulary::Encode(
    std::span<const std::string> tokens) const {
  std::vector<TokenId> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(Lookup(t));
  return ids;
}

std::vector<std::string> Vocabulary::Decode(
    std::span<const TokenId> ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (TokenId id : ids) out.push_back(Token(id));
  return out;
}

Vocabulary Vocabulary::Load(const std::string& path) {
  std::ifstream in(path);
  Require(in.good(), ErrorKind::kIo, "cannot open vocabulary " + path);
  Vocabulary vocab;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.find_first_of(" \t") != std::string::npos) {
      Fail(ErrorKind::kFormat,
           path + ":" + std::to_string(lineno) + ": expected a single token");
    }
    if (vocab.Contains(line)) {
      Fail(ErrorKind::kFormat, path + ":" + std::to_string(lineno) +
                                   ": duplicate token '" + line + "'");
    }
    vocab.Add(line);
  }
  return vocab;
}

void Vocabulary::Save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  Require(out.good(), ErrorKind::kIo, "cannot write vocabulary " + path);
  for (size_t i = kNumReserved; i < tokens_.size(); ++i) {
    out << tokens_[i] << '\n';
  }
  Require(out.good(), ErrorKind::kIo, "write failed: " + path);
}

void ZeroMean(Tensor& table) {
  Require(table.rank() == 2, ErrorKind::kRank,
          "zero_mean: expected a matrix, got " + ShapeString(table.shape()));
  const size_t rows = table.dim(0), cols = table.dim(1);
  for (size_t i = 0; i < rows; ++i) {
    double mean = 0.0;
    for (size_t j = 0; j < cols; ++j) mean += table.at(i, j);
    mean /= static_cast<double>(cols);
    for (size_t j = 0; j < cols; ++j) table.at(i, j) -= mean;
  }
}

std::pair<Vocabulary, Tensor> LoadGloveText(const std::string& path,
                                            GloveLoadOptions options) {
  std::ifstream in(path);
  Require(in.good(), ErrorKind::kIo, "cannot open embeddings " + path);
  Vocabulary vocab;
  std::vector<std::vector<double>> columns(kNumReserved);
  std::vector<bool> seen_reserved(kNumReserved, false);
  size_t dim = 0;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno) + ": ";
    std::istringstream fields(line);
    std::string token, field;
    fields >> token;
    std::vector<double> vec;
    while (fields >> field) {
      double x;
      if (!ParseDouble(field, x)) {
        Fail(ErrorKind::kFormat, where + "bad float '" + field + "'");
      }
      vec.push_back(x);
    }
    if (vec.empty()) Fail(ErrorKind::kFormat, where + "no vector values");
    if (dim == 0) dim = vec.size();
    if (vec.size() != dim) {
      Fail(ErrorKind::kFormat, where + "expected " + std::to_string(dim) +
                                   " floats, found " +
                                   std::to_string(vec.size()));
    }
    if (vocab.Contains(token)) {
      const TokenId id = vocab.Lookup(token);
      if (id < kNumReserved && !seen_reserved[id]) {
        seen_reserved[id] = true;
        columns[id] = std::move(vec);
        continue;
      }
      Fail(ErrorKind::kFormat, where + "duplicate token '" + token + "'");
    }
    vocab.Add(token);
    columns.push_back(std::move(vec));
  }
  Require(dim > 0, ErrorKind::kFormat, path + ": no embedding vectors");
  Tensor table({dim, vocab.size()});
  for (size_t j = 0; j < columns.size(); ++j) {
    if (columns[j].empty()) continue;  // unlisted reserved token
    for (size_t i = 0; i < dim; ++i) table.at(i, j) = columns[j][i];
  }
  if (options.zero_mean) ZeroMean(table);
  return {std::move(vocab), std::move(table)};
}

void SaveGloveText(const std::string& path, const Vocabulary& vocab,
                   const Tensor& table) {
  Require(table.rank() == 2 && table.dim(1) == vocab.size(),
          ErrorKind::kDimension,
          "embedding table " + ShapeString(table.shape()) +
              " does not match vocabulary of " + std::to_string(vocab.size()));
  std::ofstream out(path, std::ios::binary);
  Require(out.good(), ErrorKind::kIo, "cannot write embeddings " + path);
  for (size_t j = 0; j < table.dim(1); ++j) {
    out << vocab.Token(static_cast<TokenId>(j));
    for (size_t i = 0; i < table.dim(0); ++i) {
      out << ' ' << FormatDouble(table.at(i, j));
    }
    out << '\n';
  }
  Require(out.good(), ErrorKind::kIo, "write failed: " + path);
}

Tensor RandomEmbedding(size_t vocab_size, size_t embedding_dim, uint64_t seed) {
  Require(vocab_size >= 1 && embedding_dim >= 1, ErrorKind::kValidation,
          "random embedding needs V >= 1 and e >= 1");
  std::mt19937_64 rng(seed);
  const double half = 0.5 / static_cast<double>(embedding_dim);
  std::uniform_real_distribution<double> dist(-half, half);
  Tensor table({embedding_dim, vocab_size});
  for (double& x : table.data()) x = dist(rng);
  ZeroMean(table);
  return table;
}

std::vector<Tensor> Embed(std::span<const TokenId> ids, const Tensor& table) {
  Require(table.rank() == 2, ErrorKind::kRank, "embed: table must be a matrix");
  std::vector<Tensor> out;
  out.reserve(ids.size());
  for (TokenId id : ids) {
    Require(id < table.dim(1), ErrorKind::kRange,
            "embed: token id " + std::to_string(id) +
                " out of range for vocabulary of " +
                std::to_string(table.dim(1)));
    Tensor col({table.dim(0)});
    for (size_t i = 0; i < table.dim(0); ++i) col[i] = table.at(i, id);
    out.push_back(std::move(col));
  }
  return out;
}

}  // namespace tprcap
