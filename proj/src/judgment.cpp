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

#include "tiab/judgment.hpp"

#include <cmath>
#include <json.hpp>

#include "tiab/error.hpp"
#include "tiab/text.hpp"

namespace tiab::llm {

using nlohmann::json;

namespace {

// End (exclusive) of the balanced {...} starting at `open`, honoring JSON
// string literals, or npos.
std::size_t match_brace(std::string_view s, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (c == '\\') ++i;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '{') ++depth;
    else if (c == '}' && --depth == 0) return i + 1;
  }
  return std::string_view::npos;
}

std::optional<double> as_number(const json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const std::string s(text::trim(v.get<std::string>()));
    if (s.empty()) return std::nullopt;
    std::size_t used = 0;
    try {
      const double d = std::stod(s, &used);
      if (used == s.size()) return d;
    } catch (const std::exception&) {
    }
  }
  return std::nullopt;
}

std::optional<std::int64_t> as_integer(const json& v) {
  const auto d = as_number(v);
  if (!d || !std::isfinite(*d) || std::floor(*d) != *d) return std::nullopt;
  return static_cast<std::int64_t>(*d);
}

std::string as_text(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

void check_span(Evidence& e, const std::u32string& doc, std::vector<std::string>& warnings) {
  const std::u32string quote = text::to_u32(e.quote);
  e.valid_offsets = false;
  if (quote.empty()) {
    warnings.push_back("empty evidence quote");
    return;
  }
  const auto len = static_cast<std::int64_t>(doc.size());
  if (e.start >= 0 && e.start <= e.end && e.end <= len &&
      doc.compare(static_cast<std::size_t>(e.start), static_cast<std::size_t>(e.end - e.start), quote) == 0) {
    e.valid_offsets = true;
    return;
  }
  const auto pos = doc.find(quote);
  if (pos == std::u32string::npos) {
    warnings.push_back("evidence quote not found in the record text");
    return;
  }
  warnings.push_back("evidence offsets corrected from [" + std::to_string(e.start) + "," + std::to_string(e.end) +
                     ") to [" + std::to_string(pos) + "," + std::to_string(pos + quote.size()) + ")");
  e.start = static_cast<std::int64_t>(pos);
  e.end = static_cast<std::int64_t>(pos + quote.size());
  e.valid_offsets = true;
}

std::optional<LlmJudgment> judgment_from_object(const json& obj, std::string_view document_text) {
  if (!obj.is_object() || !obj.contains("probability")) return std::nullopt;
  const auto p = as_number(obj.at("probability"));
  if (!p || std::isnan(*p)) return std::nullopt;
  LlmJudgment j;
  j.probability = *p;
  if (*p < 0.0 || *p > 1.0) {
    j.probability = std::clamp(*p, 0.0, 1.0);
    j.warnings.push_back("probability " + as_text(obj.at("probability")) + " clamped into [0,1]");
  }
  if (auto it = obj.find("reasons"); it != obj.end()) {
    if (it->is_array()) {
      for (const auto& r : *it) j.reasons.push_back(as_text(r));
    } else if (!it->is_null()) {
      j.reasons.push_back(as_text(*it));
    }
  }
  if (auto it = obj.find("evidence"); it != obj.end() && it->is_array()) {
    const std::u32string doc = text::to_u32(document_text);
    for (const auto& item : *it) {
      Evidence e;
      if (item.is_string()) {
        e.quote = item.get<std::string>();
        e.start = e.end = -1;
      } else if (item.is_object()) {
        e.quote = item.contains("quote") ? as_text(item.at("quote")) : std::string();
        e.start = item.contains("start") ? as_integer(item.at("start")).value_or(-1) : -1;
        e.end = item.contains("end") ? as_integer(item.at("end")).value_or(-1) : -1;
      } else {
        continue;
      }
      check_span(e, doc, j.warnings);
      j.evidence.push_back(std::move(e));
    }
  }
  return j;
}

}  // namespace

LlmJudgment parse_judgment(std::string_view raw, std::string_view document_text) {
  for (std::size_t open = raw.find('{'); open != std::string_view::npos; open = raw.find('{', open + 1)) {
    const std::size_t close = match_brace(raw, open);
    if (close == std::string_view::npos) continue;
    const json obj = json::parse(raw.substr(open, close - open), nullptr, false);
    if (obj.is_discarded()) continue;
    if (auto j = judgment_from_object(obj, document_text)) {
      j->raw_response = std::string(raw);
      return std::move(*j);
    }
  }
  throw Error(ErrorCode::parse, "no judgment object with a probability found in the model response");
}

std::string judgment_to_note(const LlmJudgment& j) {
  json ev = json::array();
  for (const auto& e : j.evidence) {
    ev.push_back({{"quote", e.quote}, {"start", e.start}, {"end", e.end}, {"valid_offsets", e.valid_offsets}});
  }
  json o = {{"ref_id", j.ref_id},
            {"probability", j.probability},
            {"reasons", j.reasons},
            {"evidence", std::move(ev)},
            {"usage",
             {{"input_tokens", j.usage.input_tokens},
              {"output_tokens", j.usage.output_tokens},
              {"thinking_tokens", j.usage.thinking_tokens}}},
            {"raw_response", j.raw_response},
            {"warnings", j.warnings}};
  return o.dump();
}

std::optional<LlmJudgment> judgment_from_note(std::string_view note) {
  if (note.empty()) return std::nullopt;
  const json o = json::parse(note, nullptr, false);
  if (o.is_discarded() || !o.is_object() || !o.contains("probability") || o.contains("error")) return std::nullopt;
  try {
    LlmJudgment j;
    j.ref_id = o.value("ref_id", "");
    j.probability = o.at("probability").get<double>();
    j.reasons = o.value("reasons", std::vector<std::string>{});
    for (const auto& e : o.value("evidence", json::array())) {
      j.evidence.push_back({e.at("quote").get<std::string>(), e.at("start").get<std::int64_t>(),
                            e.at("end").get<std::int64_t>(), e.value("valid_offsets", false)});
    }
    if (auto u = o.find("usage"); u != o.end()) {
      j.usage.input_tokens = u->value("input_tokens", std::int64_t{0});
      j.usage.output_tokens = u->value("output_tokens", std::int64_t{0});
      j.usage.thinking_tokens = u->value("thinking_tokens", std::int64_t{0});
    }
    j.raw_response = o.value("raw_response", "");
    j.warnings = o.value("warnings", std::vector<std::string>{});
    return j;
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

std::string failure_note(std::string_view ref_id, std::string_view error, int attempts) {
  return json{{"ref_id", ref_id}, {"error", error}, {"attempts", attempts}}.dump();
}

bool is_failure_note(std::string_view note) {
  if (note.empty()) return false;
  const json o = json::parse(note, nullptr, false);
  return !o.is_discarded() && o.is_object() && o.contains("error");
}

}  // namespace tiab::llm
