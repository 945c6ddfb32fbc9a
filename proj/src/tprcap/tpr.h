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

// Tensor product representations over orthonormal Hadamard role bases.
//
// A sequence of fillers x_0..x_{n-1} (each of length e) is bound to the
// first n columns of an orthonormal basis U (d x d) as
//
//   S = sum_i x_i u_i^T                 (e x d)
//
// and because U^T U = I, S u_j recovers x_j exactly (up to rounding).
// Fillers are column vectors; roles are assigned by position.

#ifndef TPRCAP_TPR_H_
#define TPRCAP_TPR_H_

#include <cstddef>
#include <cstdint>
#include <span>

#include "tprcap/tensor.h"

namespace tprcap {

// Sylvester construction: H_0 = [1], H_{k+1} = [[H, H], [H, -H]].
Tensor SylvesterHadamard(size_t k);

class RoleBasis {
 public:
  // Validates H H^T == d I exactly and that every entry is +-1.
  static RoleBasis FromHadamard(const Tensor& hadamard);
  // Sylvester basis of dimension d; d must be a power of two.
  static RoleBasis OfDimension(size_t d);

  size_t dim() const { return matrix_.dim(0); }
  // U = H / sqrt(d).
  const Tensor& matrix() const { return matrix_; }
  // Column j of U.
  Tensor Role(size_t j) const;

 private:
  explicit RoleBasis(Tensor u) : matrix_(std::move(u)) {}
  Tensor matrix_;
};

class Tpr {
 public:
  static Tpr Zero(size_t filler_dim, size_t role_dim);
  explicit Tpr(Tensor s);

  const Tensor& matrix() const { return s_; }
  size_t filler_dim() const { return s_.dim(0); }
  size_t role_dim() const { return s_.dim(1); }

 private:
  Tensor s_;
};

// Binds fillers[i] to role i. More fillers than roles is a capacity error.
Tpr Bind(std::span<const Tensor> fillers, const RoleBasis& basis,
         size_t filler_dim);
// S u_j.
Tensor Unbind(const Tpr& tpr, size_t j, const RoleBasis& basis);
// prev + x (x) u_t.
Tpr Accumulate(const Tpr& prev, const Tensor& x, size_t t,
               const RoleBasis& basis);
// Column of `embeddings` (e x V) nearest to v in Euclidean distance; ties go
// to the lowest column index.
size_t RetrieveNearest(const Tensor& v, const Tensor& embeddings);

// Fraction of positions recovered exactly when random sequences of `length`
// tokens over `vocab_size` Gaussian embeddings (dimension d) are bound,
// unbound and matched back to the vocabulary.
double RetrievalAccuracy(size_t role_dim, size_t vocab_size, size_t length,
                         size_t trials, uint64_t seed);

}  // namespace tprcap

#endif  // TPRCAP_TPR_H_
