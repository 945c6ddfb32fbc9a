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

#ifndef TPRCAP_ERROR_H_
#define TPRCAP_ERROR_H_

#include <stdexcept>
#include <string>

namespace tprcap {

// Error categories. The C API maps each one onto a status code, so keep the
// two lists in sync (see capi/tprcap_c_api.cc).
enum class ErrorKind {
  kDimension,   // shape or extent mismatch
  kRank,        // wrong tensor rank
  kCapacity,    // more items than TPR roles
  kRange,       // index out of range
  kValidation,  // semantically invalid input (bad basis, bad config)
  kFormat,      // malformed file contents
  kIo,          // open/read/write failure
  kCorruption,  // checksum mismatch
  kVersion,     // unknown file version or magic
  kNumeric,     // NaN/Inf produced
  kContract,    // API misuse (double backward, non-scalar root)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void Fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void Require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) Fail(kind, what);
}

}  // namespace tprcap

#endif  // TPRCAP_ERROR_H_
