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

// Binary model checkpoints. All integers and floats are little-endian:
//
//   "TPRC"  u32 version
//   u8 decompose_embedding, u8 decompose_hidden, u8 decompose_tpr, u8 g_act
//   u64 d, m, k_v, k_S, V, d_emb
//   u32 tensor count, then per tensor in name order:
//     u32 name length, name bytes, u32 rank, u64 dims[rank], f64 data[]
//   u32 CRC-32 of every preceding byte

#ifndef TPRCAP_CHECKPOINT_H_
#define TPRCAP_CHECKPOINT_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "tprcap/model.h"

namespace tprcap {

inline constexpr uint32_t kCheckpointVersion = 1;

std::string SerializeCheckpoint(const Model& model);
// With `expected` set, the stored configuration and every tensor must match
// it; a mismatch names the offending tensor or field.
Model DeserializeCheckpoint(std::string_view bytes,
                            const std::optional<ModelConfig>& expected = {});

void SaveCheckpoint(const Model& model, const std::string& path);
Model LoadCheckpoint(const std::string& path,
                     const std::optional<ModelConfig>& expected = {});

}  // namespace tprcap

#endif  // TPRCAP_CHECKPOINT_H_
