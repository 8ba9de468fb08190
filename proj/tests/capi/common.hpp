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

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <string>
#include <vector>

#include "testing.hpp"

namespace capi_test {

using Rows = std::vector<std::vector<std::string>>;

/// Minimal RFC 4180 reader for comparing store files.
inline Rows parse_csv(const std::string& s) {
  Rows rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (quoted) {
      if (c == '"' && i + 1 < s.size() && s[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n') {
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
      any = false;
    } else if (c != '\r') {
      field += c;
      any = true;
    }
  }
  if (any) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Drops the named columns (matched against the header row).
inline Rows without_columns(Rows rows, const std::vector<std::string>& names) {
  if (rows.empty()) return rows;
  std::vector<bool> drop(rows[0].size(), false);
  for (std::size_t i = 0; i < rows[0].size(); ++i) {
    for (const auto& n : names) drop[i] = drop[i] || rows[0][i] == n;
  }
  for (auto& r : rows) {
    std::vector<std::string> kept;
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i >= drop.size() || !drop[i]) kept.push_back(r[i]);
    }
    r = std::move(kept);
  }
  return rows;
}

struct RunResult {
  int exit_code = -1;
  std::string out;
};

inline std::string shell_quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

/// Runs the CLI with `args`; stderr is folded into the output when asked.
inline RunResult run_cli(const std::vector<std::string>& args, bool with_stderr = false) {
  std::string cmd = shell_quote(TIAB_CLI_PATH);
  for (const auto& a : args) cmd += " " + shell_quote(a);
  cmd += with_stderr ? " 2>&1" : " 2>/dev/null";
  RunResult r;
  FILE* f = ::popen(cmd.c_str(), "r");
  if (!f) return r;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), f)) > 0) r.out.append(buf.data(), n);
  const int st = ::pclose(f);
  r.exit_code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

}  // namespace capi_test
