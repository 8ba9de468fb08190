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
#include <string>
#include <string_view>
#include <vector>

// UTF-8 helpers. All offsets exposed to users are counted in Unicode scalar
// values, never in bytes.
namespace tiab::text {

bool is_valid_utf8(std::string_view bytes) noexcept;

/// Strips a leading byte-order mark and validates the rest; throws
/// Error(encoding) on malformed input.
std::string_view decode_utf8(std::string_view bytes);

std::u32string to_u32(std::string_view utf8);
std::string to_utf8(std::u32string_view cps);
void append_utf8(std::string& out, char32_t cp);

std::size_t codepoint_count(std::string_view utf8);

/// Substring by scalar-value offsets [start, end). Out of range clamps.
std::string substr_cp(std::string_view utf8, std::size_t start, std::size_t end);

std::string_view trim(std::string_view s) noexcept;
std::string collapse_whitespace(std::string_view s);
std::string ascii_lower(std::string_view s);
bool iequals_ascii(std::string_view a, std::string_view b) noexcept;
bool all_digits(std::string_view s) noexcept;
bool starts_with_icase(std::string_view s, std::string_view prefix) noexcept;

/// First run of exactly four consecutive ASCII digits, or -1.
int first_year(std::string_view s) noexcept;

std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::string nfkc(std::string_view utf8);
/// Full Unicode lowercase mapping (may change length).
std::string lower(std::string_view utf8);
/// Per-code-point simple case fold; preserves scalar-value offsets.
std::u32string simple_fold(std::u32string_view cps);

bool is_alnum(char32_t cp) noexcept;
bool is_space(char32_t cp) noexcept;

}  // namespace tiab::text
