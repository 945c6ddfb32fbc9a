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

#include "tprcap/model.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>

#include "tprcap/error.h"
#include "tprcap/vocab.h"

namespace tprcap {

std::string VariantConfig::Name() const {
  std::string name;
  if (decompose_hidden) name += "h+";
  if (decompose_embedding) name += "e+";
  name += decompose_tpr ? "dtpr" : "tpr";
  return name;
}

std::optional<VariantConfig> VariantConfig::FromName(std::string_view name) {
  std::string key(name);
  std::transform(key.begin(), key.end(), key.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  for (const VariantConfig& v : AllVariants()) {
    std::string canonical = v.Name();
    std::string short_form = canonical.substr(0, canonical.size() - 2);
    if (key == canonical || key == short_form) return v;
  }
  return std::nullopt;
}

const std::array<VariantConfig, 6>& AllVariants() {
  static const std::array<VariantConfig, 6> kVariants = {{
      {true, false, false},  // E+T
      {false, true, false},  // H+T
      {true, true, false},   // H+E+T
      {true, false, true},   // E+dT
      {false, true, true},   // H+dT
      {true, true, true},    // H+E+dT
  }};
  return kVariants;
}

void ModelConfig::Validate() const {
  const ModelDims& d = dims;
  Require(d.role_dim >= 2 && (d.role_dim & (d.role_dim - 1)) == 0,
          ErrorKind::kValidation,
          "role dimension d must be a power of two >= 2, got " +
              std::to_string(d.role_dim));
  Require(d.embedding_dim == d.role_dim, ErrorKind::kValidation,
          "embedding dimension (" + std::to_string(d.embedding_dim) +
              ") must equal role dimension d (" + std::to_string(d.role_dim) +
              ") so that the TPR accumulator is d x d");
  Require(d.hidden_dim >= 1 && d.feature_dim >= 1 && d.tag_dim >= 1,
          ErrorKind::kValidation, "model dimensions must be positive");
  Require(d.vocab_size > kNumReserved, ErrorKind::kValidation,
          "vocabulary must contain at least one non-reserved token");
}

std::vector<std::pair<std::string, Shape>> Model::ExpectedShapes(
    const ModelConfig& config) {
  const ModelDims& d = config.dims;
  const size_t r = d.role_dim, m = d.hidden_dim, kv = d.feature_dim,
               ks = d.tag_dim, vocab = d.vocab_size, e = d.embedding_dim;
  std::vector<std::pair<std::string, Shape>> shapes = {
      {pname::kEmbedding, {e, vocab}},
      {"gen.W_a_u", {r, m}},
      {"gen.W_s_u", {r, e * r}},
      {"gen.b_a_u", {r}},
      {"gen.W_a_v", {kv, m}},
      {"gen.W_s_v", {kv, e * r}},
      {"gen.b_a_v", {kv}},
      {"gen.C_s", {r, r, kv}},
      {"gen.B_s", {r, r}},
      {"cell.b", {4 * m}},
      {pname::kOut, {vocab, m}},
  };
  if (config.variant.decompose_embedding) {
    shapes.push_back({"cell.W_xm", {4 * m, ks}});
    shapes.push_back({"cell.W_xn", {4 * m, e}});
  } else {
    shapes.push_back({"cell.W_x", {4 * m, e}});
  }
  if (config.variant.decompose_hidden) {
    shapes.push_back({"cell.W_hm", {4 * m, ks}});
    shapes.push_back({"cell.W_hn", {4 * m, m}});
  } else {
    shapes.push_back({"cell.W_h", {4 * m, m}});
  }
  if (config.variant.decompose_tpr) {
    shapes.push_back({"cell.P_m", {4 * m, ks}});
    shapes.push_back({"cell.P_n", {4 * m, r}});
  } else {
    shapes.push_back({"cell.W_T", {4 * m, r}});
  }
  for (const char* mlp : {"init_c", "init_h"}) {
    const std::string p(mlp);
    shapes.push_back({p + ".W1", {m, kv}});
    shapes.push_back({p + ".b1", {m}});
    shapes.push_back({p + ".W2", {m, m}});
    shapes.push_back({p + ".b2", {m}});
  }
  std::sort(shapes.begin(), shapes.end());
  return shapes;
}

Model::Model(ModelConfig config, std::map<std::string, Tensor> params)
    : config_(std::move(config)),
      basis_(RoleBasis::OfDimension(config_.dims.role_dim)),
      params_(std::move(params)) {}

Model Model::Create(const ModelConfig& config, uint64_t seed) {
  config.Validate();
  std::mt19937_64 rng(seed);
  std::map<std::string, Tensor> params;
  for (const auto& [name, shape] : ExpectedShapes(config)) {
    if (name == pname::kEmbedding) {
      params.emplace(name, RandomEmbedding(shape[1], shape[0], rng()));
      continue;
    }
    Tensor t(shape);
    if (shape.size() >= 2) {
      // Glorot bound per slice: a stacked cell weight is four m-row slices;
      // a [d, d, k] tensor is d slices of [d, k].
      size_t fan_out = shape[0];
      size_t fan_in = shape[1];
      if (name.starts_with("cell.")) fan_out = config.dims.hidden_dim;
      if (shape.size() == 3) {
        fan_out = shape[1];
        fan_in = shape[2];
      }
      const double bound =
          std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (double& x : t.data()) x = dist(rng);
    }
    params.emplace(name, std::move(t));
  }
  return Model(config, std::move(params));
}

Model Model::FromParameters(const ModelConfig& config,
                            std::map<std::string, Tensor> params) {
  config.Validate();
  const auto expected = ExpectedShapes(config);
  for (const auto& [name, shape] : expected) {
    auto it = params.find(name);
    if (it == params.end()) {
      Fail(ErrorKind::kDimension, "missing tensor '" + name + "' for variant " +
                                      config.variant.Name());
    }
    if (it->second.shape() != shape) {
      Fail(ErrorKind::kDimension, "tensor '" + name + "' has shape " +
                                      ShapeString(it->second.shape()) +
                                      ", expected " + ShapeString(shape));
    }
  }
  for (const auto& [name, t] : params) {
    const bool known =
        std::any_of(expected.begin(), expected.end(),
                    [&](const auto& e) { return e.first == name; });
    if (!known) {
      Fail(ErrorKind::kDimension, "unexpected tensor '" + name +
                                      "' for variant " + config.variant.Name());
    }
  }
  return Model(config, std::move(params));
}

const Tensor& Model::param(const std::string& name) const {
  auto it = params_.find(name);
  Require(it != params_.end(), ErrorKind::kRange,
          "no parameter named '" + name + "'");
  return it->second;
}

Tensor& Model::mutable_param(const std::string& name) {
  auto it = params_.find(name);
  Require(it != params_.end(), ErrorKind::kRange,
          "no parameter named '" + name + "'");
  return it->second;
}

}  // namespace tprcap
