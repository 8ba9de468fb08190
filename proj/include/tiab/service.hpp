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
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "tiab/clock.hpp"
#include "tiab/error.hpp"
#include "tiab/provider.hpp"

namespace tiab {

struct ServiceOptions {
  std::string host = "127.0.0.1";  // loopback unless explicitly widened
  int port = 0;                    // 0 picks a free port
  bool blind = false;              // statuses limited to the requesting reviewer
  long requests_per_minute = 60;
  int max_retries = 3;
  /// Creates the provider for POST /llm/batch; absent means LLM batches
  /// are refused with a validation error.
  std::function<std::unique_ptr<llm::Provider>()> provider_factory;
  std::optional<std::filesystem::path> web_root;
  Clock* clock = nullptr;
};

/// Local HTTP service over one project. If another process holds the
/// project's writer lock the service starts read-only and every mutating
/// endpoint answers 423.
class Service {
 public:
  Service(const std::filesystem::path& project_dir, ServiceOptions options);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds and serves on a background thread; returns the bound port.
  int start();
  /// Blocks until stop() is called from another thread or a signal handler.
  void wait();
  void stop();
  bool read_only() const;
  int port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// HTTP status for an error category.
int http_status_for(ErrorCode code) noexcept;

}  // namespace tiab
