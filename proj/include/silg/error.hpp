// Copyright 2026 The silg Authors.
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

#pragma once

#include <stdexcept>
#include <string>

namespace silg {

enum class ErrorCode {
  kInvalidArgument = 1,
  kContractViolation = 2,
  kBadState = 3,
  kNotFound = 4,
  kIo = 5,
  kParse = 6,
  kMismatch = 7,
  kNumerical = 8,
  kInternal = 9,
};

const char* error_code_name(ErrorCode code);

// Single exception type for the library; the C API maps `code()` onto its
// status enum one-to-one.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

inline void require(bool condition, const std::string& what) {
  if (!condition) fail(ErrorCode::kContractViolation, what);
}

}  // namespace silg
