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

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tiab {

/// A parsed bibliographic entry before it is admitted to a project.
struct RecordDraft {
  std::string title;
  std::string abstract;
  std::optional<int> year;
  std::vector<std::string> authors;
  std::string journal;
  std::string volume;
  std::string issue;
  std::string pages;
  std::string issn;
  std::optional<std::string> doi;
  std::optional<std::string> pmid;
  std::string url;
  std::string source;

  bool operator==(const RecordDraft&) const = default;
};

/// One row of the References table.
struct Record {
  std::string ref_id;
  std::string title;
  std::string abstract;
  std::optional<int> year;
  std::string authors;  // "A; B; ...", at most 10 names then "et al."
  std::string journal;
  std::string volume;
  std::string issue;
  std::string pages;
  std::string issn;
  std::string doi;   // empty when absent
  std::string pmid;  // empty when absent
  std::string url;
  std::string source;
  std::string imported_at;
  std::string imported_by;
  std::string dedup_key;
  std::string source_file;
  std::string screening_set;

  bool operator==(const Record&) const = default;
};

inline constexpr std::size_t kReferenceColumnCount = 19;
inline constexpr std::array<std::string_view, kReferenceColumnCount> kReferenceColumns = {
    "ref_id", "title",       "abstract",    "year",      "authors",     "journal",   "volume",
    "issue",  "pages",       "issn",        "doi",       "pmid",        "url",       "source",
    "imported_at", "imported_by", "dedup_key", "source_file", "screening_set"};

inline constexpr std::size_t kMaxSerializedAuthors = 10;
inline constexpr std::string_view kEtAl = "et al.";

std::vector<std::string> record_to_row(const Record& r);
/// Throws Error(parse) when the row does not have 19 columns.
Record record_from_row(const std::vector<std::string>& row);

std::string serialize_authors(const std::vector<std::string>& authors);
std::vector<std::string> split_authors(std::string_view serialized);

/// Screening text: title, a single space, abstract (no trailing space when
/// the abstract is empty). Evidence and highlight offsets refer to this text.
std::string build_corpus_text(std::string_view title, std::string_view abstract);
inline std::string build_corpus_text(const Record& r) { return build_corpus_text(r.title, r.abstract); }

/// Natural ordering for identifiers: all-digit ids compare numerically,
/// otherwise lexicographically.
bool id_less(std::string_view a, std::string_view b) noexcept;

}  // namespace tiab
