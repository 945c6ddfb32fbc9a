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

#include "tprcap/tpr.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "tprcap/error.h"

namespace tprcap {

Tensor SylvesterHadamard(size_t k) {
  Require(k < 16, ErrorKind::kValidation,
          "hadamard order 2^" + std::to_string(k) + " is too large");
  size_t n = 1;
  Tensor h({1, 1}, 1.0);
  for (size_t step = 0; step < k; ++step) {
    Tensor next({2 * n, 2 * n});
    for (size_t i = 0; i < n; ++i) {
      for (size_t j = 0; j < n; ++j) {
        const double v = h.at(i, j);
        next.at(i, j) = v;
        next.at(i, j + n) = v;
        next.at(i + n, j) = v;
        next.at(i + n, j + n) = -v;
      }
    }
    h = std::move(next);
    n *= 2;
  }
  return h;
}

RoleBasis RoleBasis::FromHadamard(const Tensor& h) {
  Require(h.rank() == 2 && h.dim(0) == h.dim(1), ErrorKind::kValidation,
          "hadamard matrix must be square, got " + ShapeString(h.shape()));
  const size_t d = h.dim(0);
  for (double x : h.data()) {
    Require(x == 1.0 || x == -1.0, ErrorKind::kValidation,
            "hadamard entries must be +-1");
  }
  // Entries are +-1, so every dot product is an exact small integer.
  for (size_t i = 0; i < d; ++i) {
    for (size_t j = 0; j < d; ++j) {
      double dot = 0.0;
      for (size_t l = 0; l < d; ++l) dot += h.at(i, l) * h.at(j, l);
      const double expect = i == j ? static_cast<double>(d) : 0.0;
      if (dot != expect) {
        Fail(ErrorKind::kValidation,
             "not a hadamard matrix: (H H^T)[" + std::to_string(i) + "][" +
                 std::to_string(j) + "] = " + std::to_string(dot));
      }
    }
  }
  return RoleBasis(Scale(h, 1.0 / std::sqrt(static_cast<double>(d))));
}

RoleBasis RoleBasis::OfDimension(size_t d) {
  Require(d >= 1 && (d & (d - 1)) == 0, ErrorKind::kValidation,
          "role dimension must be a power of two, got " + std::to_string(d));
  size_t k = 0;
  while ((size_t{1} << k) < d) ++k;
  return FromHadamard(SylvesterHadamard(k));
}

Tensor RoleBasis::Role(size_t j) const {
  Require(j < dim(), ErrorKind::kRange,
          "role index " + std::to_string(j) +
              " out of range for d=" + std::to_string(dim()));
  Tensor r({dim()});
  for (size_t i = 0; i < dim(); ++i) r[i] = matrix_.at(i, j);
  return r;
}

Tpr Tpr::Zero(size_t filler_dim, size_t role_dim) {
  return Tpr(Tensor({filler_dim, role_dim}));
}

Tpr::Tpr(Tensor s) : s_(std::move(s)) {
  Require(s_.rank() == 2, ErrorKind::kRank,
          "tpr must be a matrix, got " + ShapeString(s_.shape()));
}

Tpr Bind(std::span<const Tensor> fillers, const RoleBasis& basis,
         size_t filler_dim) {
  if (fillers.size() > basis.dim()) {
    Fail(ErrorKind::kCapacity, "cannot bind " + std::to_string(fillers.size()) +
                                   " fillers to " +
                                   std::to_string(basis.dim()) + " roles");
  }
  Tpr tpr = Tpr::Zero(filler_dim, basis.dim());
  for (size_t i = 0; i < fillers.size(); ++i) {
    tpr = Accumulate(tpr, fillers[i], i, basis);
  }
  return tpr;
}

Tensor Unbind(const Tpr& tpr, size_t j, const RoleBasis& basis) {
  Require(tpr.role_dim() == basis.dim(), ErrorKind::kDimension,
          "unbind: tpr role dimension " + std::to_string(tpr.role_dim()) +
              " vs basis " + std::to_string(basis.dim()));
  Require(j < basis.dim(), ErrorKind::kRange,
          "unbind: role index " + std::to_string(j) +
              " out of range for d=" + std::to_string(basis.dim()));
  return MatVec(tpr.matrix(), basis.Role(j));
}

Tpr Accumulate(const Tpr& prev, const Tensor& x, size_t t,
               const RoleBasis& basis) {
  if (t >= basis.dim()) {
    Fail(ErrorKind::kCapacity, "role index " + std::to_string(t) +
                                   " exceeds role capacity " +
                                   std::to_string(basis.dim()));
  }
  Require(x.rank() == 1 && x.dim(0) == prev.filler_dim(), ErrorKind::kDimension,
          "accumulate: filler shape " + ShapeString(x.shape()) +
              " does not match tpr " + ShapeString(prev.matrix().shape()));
  Require(prev.role_dim() == basis.dim(), ErrorKind::kDimension,
          "accumulate: tpr role dimension does not match basis");
  Tensor s = prev.matrix();
  const Tensor& u = basis.matrix();
  for (size_t i = 0; i < s.dim(0); ++i) {
    for (size_t j = 0; j < s.dim(1); ++j) s.at(i, j) += x[i] * u.at(j, t);
  }
  return Tpr(std::move(s));
}

size_t RetrieveNearest(const Tensor& v, const Tensor& embeddings) {
  Require(embeddings.rank() == 2, ErrorKind::kRank,
          "retrieve_nearest: embeddings must be a matrix");
  Require(v.rank() == 1 && v.dim(0) == embeddings.dim(0), ErrorKind::kDimension,
          "retrieve_nearest: query " + ShapeString(v.shape()) +
              " vs embeddings " + ShapeString(embeddings.shape()));
  const size_t e = embeddings.dim(0), vocab = embeddings.dim(1);
  std::vector<double> dist(vocab, 0.0);
  for (size_t i = 0; i < e; ++i) {
    const double vi = v[i];
    const double* row = embeddings.data().data() + i * vocab;
    for (size_t k = 0; k < vocab; ++k) {
      const double diff = row[k] - vi;
      dist[k] += diff * diff;
    }
  }
  size_t best = 0;
  for (size_t k = 1; k < vocab; ++k) {
    if (dist[k] < dist[best]) best = k;
  }
  return best;
}

double RetrievalAccuracy(size_t role_dim, size_t vocab_size, size_t length,
                         size_t trials, uint64_t seed) {
  Require(vocab_size >= 1 && trials >= 1, ErrorKind::kValidation,
          "retrieval demo needs a vocabulary and at least one trial");
  const RoleBasis basis = RoleBasis::OfDimension(role_dim);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor table({role_dim, vocab_size});
  for (double& x : table.data()) x = normal(rng);
  std::uniform_int_distribution<size_t> pick(0, vocab_size - 1);

  size_t correct = 0;
  std::vector<size_t> ids(length);
  std::vector<Tensor> fillers(length);
  for (size_t trial = 0; trial < trials; ++trial) {
    for (size_t i = 0; i < length; ++i) {
      ids[i] = pick(rng);
      fillers[i] = Tensor({role_dim});
      for (size_t r = 0; r < role_dim; ++r) fillers[i][r] = table.at(r, ids[i]);
    }
    const Tpr tpr = Bind(fillers, basis, role_dim);
    for (size_t i = 0; i < length; ++i) {
      if (RetrieveNearest(Unbind(tpr, i, basis), table) == ids[i]) ++correct;
    }
  }
  return static_cast<double>(correct) /
         static_cast<double>(trials * std::max<size_t>(length, 1));
}

}  // namespace tprcap
