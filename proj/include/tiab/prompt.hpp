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

#include <string>
#include <string_view>

namespace tiab::llm {

inline constexpr std::string_view kTemplateVersion = "screening-v1";
inline constexpr std::string_view kSensitivityClause = "when in doubt, include";

struct ScreeningPrompt {
  std::string template_version;
  std::string criteria;
  std::string rendered;
  std::string output_language;
};

/// Deterministic render of the fixed template around `criteria`.
/// Throws Error(validation) when the protocol text is blank.
ScreeningPrompt build_screening_prompt(std::string_view protocol_text, std::string_view output_language = "en");

/// Instruction sent to the model when asking it to rewrite criteria.
std::string refinement_instruction(std::string_view output_language);

}  // namespace tiab::llm
