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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tiab {

/// Failure categories shared by every module. The C API maps these one to
/// one onto `tiab_status` values and the HTTP service onto status codes.
enum class ErrorCode {
  validation,   // a value is outside its allowed domain
  not_found,    // unknown ref_id, execution_id, ...
  io,           // filesystem failure
  parse,        // malformed structured input
  encoding,     // bytes are not UTF-8
  empty_input,  // a parser found zero records
  schema,       // tabular input lacks a required column
  exists,       // refusing to overwrite
  locked,       // another writer holds the project
  cold_start,   // ranking needs at least one label of each class
  undefined,    // a metric is 0/0
  provider,     // LLM transport or protocol failure
  conflict,     // write refused because of concurrent state
  internal,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace tiab
