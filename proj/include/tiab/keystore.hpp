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

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tiab::llm {

inline constexpr std::string_view kKeystoreEnv = "TIAB_KEYSTORE_DIR";

/// $TIAB_KEYSTORE_DIR, else $XDG_CONFIG_HOME/tiab-screen, else
/// ~/.config/tiab-screen.
std::filesystem::path default_keystore_dir();

/// API keys encrypted at rest (XSalsa20-Poly1305) under a random local
/// secret. Both files are created with mode 0600 inside a 0700 directory.
class Keystore {
 public:
  explicit Keystore(std::filesystem::path dir = default_keystore_dir());

  void set(std::string_view name, std::string_view secret);
  std::optional<std::string> get(std::string_view name) const;
  bool remove(std::string_view name);
  std::vector<std::string> names() const;
  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::filesystem::path dir_;
};

}  // namespace tiab::llm
