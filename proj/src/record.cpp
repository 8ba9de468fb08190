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

#include "tiab/record.hpp"

#include <string>

#include "tiab/error.hpp"
#include "tiab/text.hpp"

namespace tiab {

std::vector<std::string> record_to_row(const Record& r) {
  return {r.ref_id,  r.title,  r.abstract, r.year ? std::to_string(*r.year) : std::string(),
          r.authors, r.journal, r.volume,  r.issue,
          r.pages,   r.issn,    r.doi,     r.pmid,
          r.url,     r.source,  r.imported_at, r.imported_by,
          r.dedup_key, r.source_file, r.screening_set};
}

Record record_from_row(const std::vector<std::string>& row) {
  if (row.size() != kReferenceColumnCount) {
    throw Error(ErrorCode::parse, "references row has " + std::to_string(row.size()) + " columns, expected 19");
  }
  Record r;
  r.ref_id = row[0];
  r.title = row[1];
  r.abstract = row[2];
  if (!row[3].empty()) {
    if (!text::all_digits(row[3])) throw Error(ErrorCode::parse, "non-numeric year '" + row[3] + "'");
    r.year = std::stoi(row[3]);
  }
  r.authors = row[4];
  r.journal = row[5];
  r.volume = row[6];
  r.issue = row[7];
  r.pages = row[8];
  r.issn = row[9];
  r.doi = row[10];
  r.pmid = row[11];
  r.url = row[12];
  r.source = row[13];
  r.imported_at = row[14];
  r.imported_by = row[15];
  r.dedup_key = row[16];
  r.source_file = row[17];
  r.screening_set = row[18];
  return r;
}

std::string serialize_authors(const std::vector<std::string>& authors) {
  std::vector<std::string> kept;
  for (const auto& a : authors) {
    auto t = text::trim(a);
    if (!t.empty()) kept.emplace_back(t);
  }
  if (kept.size() > kMaxSerializedAuthors) {
    kept.resize(kMaxSerializedAuthors);
    kept.emplace_back(kEtAl);
  }
  return text::join(kept, "; ");
}

std::vector<std::string> split_authors(std::string_view serialized) {
  std::vector<std::string> out;
  for (const auto& part : text::split(serialized, ';')) {
    auto t = text::trim(part);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

std::string build_corpus_text(std::string_view title, std::string_view abstract) {
  std::string out(title);
  if (!abstract.empty()) {
    out.push_back(' ');
    out.append(abstract);
  }
  return out;
}

namespace {

// Splits "E000012" into ("E", "000012"); the numeric part is empty when the
// tail is not all digits.
std::pair<std::string_view, std::string_view> split_numeric_tail(std::string_view id) {
  std::size_t i = id.size();
  while (i > 0 && id[i - 1] >= '0' && id[i - 1] <= '9') --i;
  return {id.substr(0, i), id.substr(i)};
}

std::string_view strip_zeros(std::string_view digits) {
  while (digits.size() > 1 && digits.front() == '0') digits.remove_prefix(1);
  return digits;
}

}  // namespace

bool id_less(std::string_view a, std::string_view b) noexcept {
  auto [pa, na] = split_numeric_tail(a);
  auto [pb, nb] = split_numeric_tail(b);
  if (!na.empty() && !nb.empty() && pa == pb) {
    const auto sa = strip_zeros(na);
    const auto sb = strip_zeros(nb);
    if (sa.size() != sb.size()) return sa.size() < sb.size();
    if (sa != sb) return sa < sb;
    return a < b;
  }
  return a < b;
}

}  // namespace tiab
