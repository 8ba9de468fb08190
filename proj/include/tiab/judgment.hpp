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

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tiab::llm {

struct Evidence {
  std::string quote;
  std::int64_t start = 0;  // Unicode scalar offsets into the document text
  std::int64_t end = 0;
  bool valid_offsets = false;

  bool operator==(const Evidence&) const = default;
};

struct TokenUsage {
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
  std::int64_t thinking_tokens = 0;

  TokenUsage& operator+=(const TokenUsage& o) {
    input_tokens += o.input_tokens;
    output_tokens += o.output_tokens;
    thinking_tokens += o.thinking_tokens;
    return *this;
  }
  bool operator==(const TokenUsage&) const = default;
};

struct LlmJudgment {
  std::string ref_id;
  double probability = 0.0;
  std::vector<std::string> reasons;
  std::vector<Evidence> evidence;
  std::string raw_response;
  TokenUsage usage;
  std::vector<std::string> warnings;

  bool operator==(const LlmJudgment&) const = default;
};

/// Extracts the first JSON object in `raw` (code fences tolerated) that has a
/// numeric or numeric-string `probability`. Out-of-range probabilities are
/// clamped with a warning; each evidence span is checked against
/// `document_text` and, if its offsets disagree, re-located by one exact
/// substring search. Throws Error(parse) when no such object exists.
LlmJudgment parse_judgment(std::string_view raw, std::string_view document_text);

/// Serialized form stored in a decision's note column.
std::string judgment_to_note(const LlmJudgment& j);
/// Returns nullopt for notes that are not judgments (e.g. failure notes).
std::optional<LlmJudgment> judgment_from_note(std::string_view note);

std::string failure_note(std::string_view ref_id, std::string_view error, int attempts);
bool is_failure_note(std::string_view note);

}  // namespace tiab::llm
