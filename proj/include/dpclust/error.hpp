//
// Copyright 2026 The dpclust Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dpclust {

enum class ErrorCode {
  kInvalidArgument,
  kShapeMismatch,
  kOutOfDomain,
  kDatabaseTooSmall,
  kRefused,
  kIo,
};

inline const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
      return "invalid_argument";
    case ErrorCode::kShapeMismatch:
      return "shape_mismatch";
    case ErrorCode::kOutOfDomain:
      return "out_of_domain";
    case ErrorCode::kDatabaseTooSmall:
      return "database_too_small";
    case ErrorCode::kRefused:
      return "refused";
    case ErrorCode::kIo:
      return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Raised when a sample-size precondition fails. Carries the smallest size
// that would have been accepted, when one is known (0 otherwise).
class TooSmallError : public Error {
 public:
  TooSmallError(const std::string& message, std::int64_t minimal_size)
      : Error(ErrorCode::kDatabaseTooSmall, message),
        minimal_size_(minimal_size) {}

  std::int64_t minimal_size() const { return minimal_size_; }

 private:
  std::int64_t minimal_size_;
};

namespace internal {

inline void Require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) throw Error(code, what);
}

inline void RequireArg(bool condition, const std::string& what) {
  Require(condition, ErrorCode::kInvalidArgument, what);
}

}  // namespace internal
}  // namespace dpclust
