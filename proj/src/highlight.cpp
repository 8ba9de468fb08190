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

#include "tiab/highlight.hpp"

#include <algorithm>
#include <set>

#include "tiab/text.hpp"

namespace tiab {

std::string_view to_string(KeywordKind k) noexcept { return k == KeywordKind::include ? "include" : "exclude"; }

std::vector<HighlightSpan> compute_highlights(std::string_view text_utf8, const std::vector<std::string>& include_keywords,
                                              const std::vector<std::string>& exclude_keywords) {
  const std::u32string hay = text::simple_fold(text::to_u32(text_utf8));
  std::vector<HighlightSpan> spans;
  const auto scan = [&](const std::vector<std::string>& keywords, KeywordKind kind) {
    std::set<std::u32string> seen;
    for (const auto& kw : keywords) {
      const std::u32string needle = text::simple_fold(text::to_u32(kw));
      if (needle.empty() || !seen.insert(needle).second) continue;
      for (std::size_t pos = hay.find(needle); pos != std::u32string::npos; pos = hay.find(needle, pos + 1)) {
        spans.push_back({pos, pos + needle.size(), kw, kind});
      }
    }
  };
  scan(include_keywords, KeywordKind::include);
  scan(exclude_keywords, KeywordKind::exclude);
  std::sort(spans.begin(), spans.end(), [](const HighlightSpan& a, const HighlightSpan& b) {
    if (a.start != b.start) return a.start < b.start;
    if (a.end != b.end) return a.end < b.end;
    if (a.kind != b.kind) return a.kind < b.kind;
    return a.keyword < b.keyword;
  });
  return spans;
}

std::vector<std::string> parse_keyword_list(std::string_view list) {
  std::vector<std::string> out;
  for (const auto& part : text::split(list, ',')) {
    const auto t = text::trim(part);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

std::pair<std::vector<std::string>, std::vector<std::string>> keyword_lists(const Snapshot& snapshot) {
  std::vector<std::string> include;
  for (const char* key : {"keywords.include_preset_rct", "keywords.include_preset_sr", "keywords.custom_include"}) {
    auto part = parse_keyword_list(snapshot.config_value(key));
    include.insert(include.end(), part.begin(), part.end());
  }
  return {std::move(include), parse_keyword_list(snapshot.config_value("keywords.custom_exclude"))};
}

}  // namespace tiab
