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

#include "tiab/csv.hpp"

#include "tiab/error.hpp"
#include "tiab/text.hpp"

namespace tiab::csv {
namespace {

// Returns rows and sets `consumed` to the byte offset just past the last
// newline-terminated row.
std::vector<Row> parse_impl(std::string_view s, std::size_t& consumed, bool strict) {
  std::vector<Row> rows;
  Row row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  consumed = 0;

  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < s.size() && s[i + 1] == '"') {
          field.push_back('"');
          i += 2;
          continue;
        }
        in_quotes = false;
        ++i;
        continue;
      }
      field.push_back(c);
      ++i;
      continue;
    }
    if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
      ++i;
      continue;
    }
    if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      field_started = false;
      ++i;
      continue;
    }
    if (c == '\r' || c == '\n') {
      row.push_back(std::move(field));
      field.clear();
      field_started = false;
      rows.push_back(std::move(row));
      row.clear();
      if (c == '\r' && i + 1 < s.size() && s[i + 1] == '\n') ++i;
      ++i;
      consumed = i;
      continue;
    }
    field.push_back(c);
    field_started = true;
    ++i;
  }
  if (in_quotes && strict) throw Error(ErrorCode::parse, "unterminated quoted CSV field");
  if (strict && (field_started || !row.empty())) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
    consumed = s.size();
  }
  return rows;
}

}  // namespace

std::vector<Row> parse(std::string_view content) {
  std::size_t consumed = 0;
  auto rows = parse_impl(content, consumed, true);
  // A trailing blank line is a terminator, not an empty record.
  while (!rows.empty() && rows.back().size() == 1 && rows.back()[0].empty()) rows.pop_back();
  return rows;
}

std::vector<Row> parse_complete_rows(std::string_view content, std::size_t& complete_bytes) {
  return parse_impl(content, complete_bytes, false);
}

std::string format_field(std::string_view field) {
  const bool needs_quotes = field.find_first_of(",\"\r\n") != std::string_view::npos;
  if (!needs_quotes) return std::string(field);
  std::string out;
  out.reserve(field.size() + 2);
  out.push_back('"');
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string format_row(const Row& row) {
  std::string out;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out.push_back(',');
    out += format_field(row[i]);
  }
  out.push_back('\n');
  return out;
}

std::optional<std::size_t> column_index(const Row& header, std::string_view name) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (text::iequals_ascii(text::trim(header[i]), name)) return i;
  }
  return std::nullopt;
}

}  // namespace tiab::csv
