// Copyright 2026 The vtex Authors
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

#include "vtex/error.hpp"

namespace vtex {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
      return "invalid-argument";
    case ErrorCode::kCorruptWeights:
      return "corrupt-weights";
    case ErrorCode::kUnsupportedVersion:
      return "unsupported-version";
    case ErrorCode::kParse:
      return "parse-error";
    case ErrorCode::kValidation:
      return "validation-error";
    case ErrorCode::kIo:
      return "io-error";
    case ErrorCode::kNotFound:
      return "not-found";
    case ErrorCode::kInternal:
      return "internal-invariant-violation";
  }
  return "unknown";
}

std::string_view version() { return VTEX_VERSION; }

}  // namespace vtex
