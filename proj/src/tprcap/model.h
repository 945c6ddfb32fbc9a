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

// The full captioning parameter set and its configuration.
//
// Parameters live in a name-sorted table. Which cell tensors exist depends on
// the variant: a decomposed input replaces its plain projection, so e.g. an
// embedding-decomposed model carries cell.W_xm / cell.W_xn instead of
// cell.W_x. Cell tensors stack the four gates row-wise in the order
// input, forget, candidate (g), output; each block has m rows.

#ifndef TPRCAP_MODEL_H_
#define TPRCAP_MODEL_H_

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tprcap/tensor.h"
#include "tprcap/tpr.h"

namespace tprcap {

struct VariantConfig {
  bool decompose_embedding = false;
  bool decompose_hidden = false;
  bool decompose_tpr = false;

  bool operator==(const VariantConfig&) const = default;

  // Canonical lowercase name, e.g. "e+dtpr", "h+e+tpr".
  std::string Name() const;
  // Accepts the canonical names plus the short forms "e+dt", "h+e+t", ...
  static std::optional<VariantConfig> FromName(std::string_view name);
};

// The six architectures: E+T, H+T, H+E+T, E+dT, H+dT, H+E+dT.
const std::array<VariantConfig, 6>& AllVariants();

enum class GateActivation : uint8_t { kSigmoid = 0, kTanh = 1 };

struct ModelDims {
  size_t role_dim = 32;       // d
  size_t hidden_dim = 64;     // m
  size_t feature_dim = 64;    // k_v
  size_t tag_dim = 20;        // k_S
  size_t vocab_size = 0;      // V
  size_t embedding_dim = 32;  // d_emb; must equal d inside the model

  bool operator==(const ModelDims&) const = default;
};

struct ModelConfig {
  ModelDims dims;
  VariantConfig variant;
  GateActivation g_activation = GateActivation::kSigmoid;

  bool operator==(const ModelConfig&) const = default;
  // Throws kValidation on inconsistent dimensions.
  void Validate() const;
};

enum class Gate : size_t {
  kInput = 0,
  kForget = 1,
  kCandidate = 2,
  kOutput = 3
};

class Model {
 public:
  // Glorot-uniform weights, zero biases, random centered embedding.
  static Model Create(const ModelConfig& config, uint64_t seed);
  // Adopts an existing parameter table; every expected tensor must be
  // present with the expected shape and nothing else may be.
  static Model FromParameters(const ModelConfig& config,
                              std::map<std::string, Tensor> params);

  // Names and shapes of every tensor the config requires, sorted by name.
  static std::vector<std::pair<std::string, Shape>> ExpectedShapes(
      const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  const ModelDims& dims() const { return config_.dims; }
  const RoleBasis& basis() const { return basis_; }

  const std::map<std::string, Tensor>& params() const { return params_; }
  std::map<std::string, Tensor>& mutable_params() { return params_; }
  bool has(const std::string& name) const { return params_.contains(name); }
  const Tensor& param(const std::string& name) const;
  Tensor& mutable_param(const std::string& name);

 private:
  Model(ModelConfig config, std::map<std::string, Tensor> params);

  ModelConfig config_;
  RoleBasis basis_;
  std::map<std::string, Tensor> params_;
};

// Parameter names.
namespace pname {
inline constexpr const char* kEmbedding = "embedding";
inline constexpr const char* kOut = "out.W_x";
}  // namespace pname

}  // namespace tprcap

#endif  // TPRCAP_MODEL_H_
