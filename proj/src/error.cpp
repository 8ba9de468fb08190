// Copyright 2026 The tiab-screen Authors
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

#include "tiab/error.hpp"

namespace tiab {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::validation: return "validation";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::io: return "io";
    case ErrorCode::parse: return "parse";
    case ErrorCode::encoding: return "encoding";
    case ErrorCode::empty_input: return "empty_input";
    case ErrorCode::schema: return "schema";
    case ErrorCode::exists: return "exists";
    case ErrorCode::locked: return "locked";
    case ErrorCode::cold_start: return "cold_start";
    case ErrorCode::undefined: return "undefined";
    case ErrorCode::provider: return "provider";
    case ErrorCode::conflict: return "conflict";
    case ErrorCode::internal: return "internal";
  }
  return "internal";
}

}  // namespace tiab
