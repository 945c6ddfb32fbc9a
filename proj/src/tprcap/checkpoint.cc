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

#include "tprcap/checkpoint.h"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "tprcap/error.h"

namespace tprcap {

namespace {

constexpr char kMagic[4] = {'T', 'P', 'R', 'C'};

class Writer {
 public:
  void Bytes(const void* p, size_t n) {
    out_.append(static_cast<const char*>(p), n);
  }
  template <typename T>
  void Int(T v) {
    for (size_t i = 0; i < sizeof(T); ++i) {
      out_.push_back(
          static_cast<char>((static_cast<uint64_t>(v) >> (8 * i)) & 0xff));
    }
  }
  void F64(double x) { Int(std::bit_cast<uint64_t>(x)); }
  std::string& str() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}
  void Need(size_t n) {
    if (in_.size() - pos_ < n) {
      Fail(ErrorKind::kFormat,
           "checkpoint truncated at byte " + std::to_string(pos_));
    }
  }
  std::string_view Bytes(size_t n) {
    Need(n);
    std::string_view s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  template <typename T>
  T Int() {
    Need(sizeof(T));
    uint64_t v = 0;
    for (size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<uint64_t>(static_cast<unsigned char>(in_[pos_ + i]))
           << (8 * i);
    }
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }
  double F64() { return std::bit_cast<double>(Int<uint64_t>()); }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::string_view in_;
  size_t pos_ = 0;
};

uint32_t Crc32(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  size_t off = 0;
  while (off < bytes.size()) {
    const size_t n = std::min<size_t>(bytes.size() - off, 1u << 30);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + off),
                static_cast<uInt>(n));
    off += n;
  }
  return static_cast<uint32_t>(crc);
}

}  // namespace

std::string SerializeCheckpoint(const Model& model) {
  const ModelConfig& cfg = model.config();
  Writer w;
  w.Bytes(kMagic, sizeof(kMagic));
  w.Int<uint32_t>(kCheckpointVersion);
  w.Int<uint8_t>(cfg.variant.decompose_embedding);
  w.Int<uint8_t>(cfg.variant.decompose_hidden);
  w.Int<uint8_t>(cfg.variant.decompose_tpr);
  w.Int<uint8_t>(static_cast<uint8_t>(cfg.g_activation));
  const ModelDims& d = cfg.dims;
  for (size_t v : {d.role_dim, d.hidden_dim, d.feature_dim, d.tag_dim,
                   d.vocab_size, d.embedding_dim}) {
    w.Int<uint64_t>(v);
  }
  w.Int<uint32_t>(static_cast<uint32_t>(model.params().size()));
  for (const auto& [name, t] : model.params()) {
    w.Int<uint32_t>(static_cast<uint32_t>(name.size()));
    w.Bytes(name.data(), name.size());
    w.Int<uint32_t>(static_cast<uint32_t>(t.rank()));
    for (size_t dim : t.shape()) w.Int<uint64_t>(dim);
    for (double x : t.data()) w.F64(x);
  }
  w.Int<uint32_t>(Crc32(w.str()));
  return std::move(w.str());
}

Model DeserializeCheckpoint(std::string_view bytes,
                            const std::optional<ModelConfig>& expected) {
  if (bytes.size() < sizeof(kMagic) + 8) {
    Fail(ErrorKind::kFormat, "checkpoint too short");
  }
  const std::string_view payload = bytes.substr(0, bytes.size() - 4);
  Reader trailer(bytes.substr(bytes.size() - 4));
  if (trailer.Int<uint32_t>() != Crc32(payload)) {
    Fail(ErrorKind::kCorruption, "checkpoint CRC mismatch");
  }
  Reader r(payload);
  if (r.Bytes(4) != std::string_view(kMagic, 4)) {
    Fail(ErrorKind::kVersion, "not a tprcap checkpoint (bad magic)");
  }
  const uint32_t version = r.Int<uint32_t>();
  if (version != kCheckpointVersion) {
    Fail(ErrorKind::kVersion,
         "unsupported checkpoint version " + std::to_string(version));
  }
  ModelConfig cfg;
  uint8_t flags[4];
  for (uint8_t& f : flags) {
    f = r.Int<uint8_t>();
    if (f > 1) Fail(ErrorKind::kFormat, "invalid variant flag byte");
  }
  cfg.variant = {flags[0] != 0, flags[1] != 0, flags[2] != 0};
  cfg.g_activation = static_cast<GateActivation>(flags[3]);
  ModelDims& d = cfg.dims;
  for (size_t* v : {&d.role_dim, &d.hidden_dim, &d.feature_dim, &d.tag_dim,
                    &d.vocab_size, &d.embedding_dim}) {
    *v = r.Int<uint64_t>();
  }
  if (expected) {
    if (!(expected->dims == cfg.dims)) {
      Fail(ErrorKind::kVersion,
           "checkpoint dimension block does not match the expected model");
    }
  }
  cfg.Validate();

  const uint32_t count = r.Int<uint32_t>();
  std::map<std::string, Tensor> params;
  for (uint32_t i = 0; i < count; ++i) {
    const uint32_t len = r.Int<uint32_t>();
    std::string name(r.Bytes(len));
    const uint32_t rank = r.Int<uint32_t>();
    if (rank > 3) Fail(ErrorKind::kFormat, "tensor " + name + " has rank > 3");
    Shape shape(rank);
    size_t size = 1;
    for (size_t& dim : shape) {
      dim = r.Int<uint64_t>();
      if (dim != 0 && size > (size_t{1} << 40) / dim) {
        Fail(ErrorKind::kFormat, "tensor " + name + " is implausibly large");
      }
      size *= dim;
    }
    r.Need(size * 8);
    std::vector<double> data(size);
    for (double& x : data) x = r.F64();
    if (!params.emplace(name, Tensor(shape, std::move(data))).second) {
      Fail(ErrorKind::kFormat, "duplicate tensor " + name);
    }
  }
  if (!r.done()) Fail(ErrorKind::kFormat, "trailing bytes in checkpoint");

  if (expected) {
    // Check the tensors against the expected architecture so a variant
    // mismatch reports the first tensor that differs.
    for (const auto& [name, shape] : Model::ExpectedShapes(*expected)) {
      auto it = params.find(name);
      if (it == params.end()) {
        Fail(ErrorKind::kDimension, "checkpoint lacks tensor " + name +
                                        " required by variant " +
                                        expected->variant.Name());
      }
      if (it->second.shape() != shape) {
        Fail(ErrorKind::kDimension, "tensor " + name + " has shape " +
                                        ShapeString(it->second.shape()) +
                                        ", expected " + ShapeString(shape));
      }
    }
    for (const auto& [name, t] : params) {
      bool known = false;
      for (const auto& [ename, shape] : Model::ExpectedShapes(*expected)) {
        known = known || ename == name;
      }
      if (!known) {
        Fail(ErrorKind::kDimension, "checkpoint tensor " + name +
                                        " is not part of variant " +
                                        expected->variant.Name());
      }
    }
    if (expected->g_activation != cfg.g_activation) {
      Fail(ErrorKind::kDimension,
           "checkpoint candidate-gate activation differs from the expected");
    }
  }
  return Model::FromParameters(cfg, std::move(params));
}

void SaveCheckpoint(const Model& model, const std::string& path) {
  const std::string bytes = SerializeCheckpoint(model);
  std::ofstream out(path, std::ios::binary);
  Require(out.good(), ErrorKind::kIo, "cannot write checkpoint " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  Require(out.good(), ErrorKind::kIo, "write failed: " + path);
}

Model LoadCheckpoint(const std::string& path,
                     const std::optional<ModelConfig>& expected) {
  std::ifstream in(path, std::ios::binary);
  Require(in.good(), ErrorKind::kIo, "cannot open checkpoint " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return DeserializeCheckpoint(buf.str(), expected);
}

}  // namespace tprcap
