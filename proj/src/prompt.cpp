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

#include "tiab/prompt.hpp"

#include "tiab/error.hpp"
#include "tiab/text.hpp"

namespace tiab::llm {

namespace {

constexpr std::string_view kHead =
    "You are screening bibliographic records for a systematic review at the title-and-abstract stage.\n"
    "The user message contains one record: its title followed by its abstract.\n"
    "\n"
    "Eligibility criteria:\n";

constexpr std::string_view kTail =
    "\n"
    "Instructions:\n"
    "1. Judge the record only from the text in the user message.\n"
    "2. Estimate the probability, between 0 and 1, that the record meets the eligibility criteria "
    "and should proceed to full-text review.\n"
    "3. This screen favors sensitivity: when in doubt, include. If you are unsure, or the abstract is "
    "missing or too short to rule the record out, you MUST include the study by giving it a high probability.\n"
    "4. Give brief reasons for the judgment.\n"
    "5. Quote the passages that support the judgment as evidence. Each quote must be copied exactly from "
    "the record text, with its character positions: start is the offset of the first character, end is one "
    "past the last, both counted in Unicode characters from the beginning of the text.\n"
    "6. Write the reasons in this language: ";

constexpr std::string_view kSchema =
    "\n"
    "\n"
    "Respond with a single JSON object and nothing else:\n"
    "{\"probability\": <number between 0 and 1>, \"reasons\": [\"<reason>\", ...], "
    "\"evidence\": [{\"quote\": \"<exact text>\", \"start\": <integer>, \"end\": <integer>}, ...]}\n";

}  // namespace

ScreeningPrompt build_screening_prompt(std::string_view protocol_text, std::string_view output_language) {
  const std::string_view criteria = text::trim(protocol_text);
  if (criteria.empty()) throw Error(ErrorCode::validation, "the protocol text is empty");
  const std::string_view lang = text::trim(output_language).empty() ? "en" : text::trim(output_language);
  ScreeningPrompt p;
  p.template_version = std::string(kTemplateVersion);
  p.criteria = std::string(criteria);
  p.output_language = std::string(lang);
  p.rendered.reserve(kHead.size() + criteria.size() + kTail.size() + kSchema.size() + lang.size() + 1);
  p.rendered.append(kHead).append(criteria).append("\n").append(kTail).append(lang).append(kSchema);
  return p;
}

std::string refinement_instruction(std::string_view output_language) {
  std::string s =
      "You help prepare title-and-abstract screening for a systematic review. The user message holds the "
      "review protocol or eligibility criteria. Rewrite them as concise, plain-language inclusion and "
      "exclusion criteria suitable for screening individual records. Do not narrow the scope. Write in "
      "this language: ";
  s.append(output_language.empty() ? "en" : output_language);
  s.append(".\nRespond with a single JSON object and nothing else: {\"criteria\": \"<rewritten criteria>\"}\n");
  return s;
}

}  // namespace tiab::llm
