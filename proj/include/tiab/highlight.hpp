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
#include <utility>
#include <vector>

#include "tiab/store.hpp"

namespace tiab {

enum class KeywordKind { include, exclude };
std::string_view to_string(KeywordKind k) noexcept;

struct HighlightSpan {
  std::size_t start = 0;  // Unicode scalar offsets, [start, end)
  std::size_t end = 0;
  std::string keyword;
  KeywordKind kind = KeywordKind::include;

  bool operator==(const HighlightSpan&) const = default;
};

/// Every case-insensitive occurrence of every keyword, overlaps included.
/// Keywords equal under case folding are matched once per list. Sorted by
/// start, end, kind, keyword.
std::vector<HighlightSpan> compute_highlights(std::string_view text, const std::vector<std::string>& include_keywords,
                                              const std::vector<std::string>& exclude_keywords);

/// Comma-delimited list, entries trimmed, empties dropped.
std::vector<std::string> parse_keyword_list(std::string_view list);

/// include = RCT preset + SR preset + custom include; exclude = custom exclude.
std::pair<std::vector<std::string>, std::vector<std::string>> keyword_lists(const Snapshot& snapshot);

}  // namespace tiab
