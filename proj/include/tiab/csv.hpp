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

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// RFC-4180 CSV: comma separator, CRLF or LF line endings accepted on read,
// LF written, fields quoted when they contain a comma, quote, CR or LF.
namespace tiab::csv {

using Row = std::vector<std::string>;

std::vector<Row> parse(std::string_view content);

/// Like parse(), but a final row that is not newline-terminated is dropped
/// and its byte offset reported through `complete_bytes`. Used to recover
/// from a torn append.
std::vector<Row> parse_complete_rows(std::string_view content, std::size_t& complete_bytes);

std::string format_field(std::string_view field);
std::string format_row(const Row& row);

/// Case-insensitive header lookup.
std::optional<std::size_t> column_index(const Row& header, std::string_view name);

}  // namespace tiab::csv
