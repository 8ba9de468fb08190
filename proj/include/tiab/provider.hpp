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

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tiab/judgment.hpp"
#include "tiab/store.hpp"

namespace tiab::llm {

/// What leaves the machine: model parameters, the screening prompt and the
/// record's screening text. Nothing else is representable here.
struct ChatRequest {
  std::string model;
  double temperature = 1.0;
  double top_p = 0.95;
  ThinkingLevel thinking_level = ThinkingLevel::low;
  std::string system_prompt;
  std::string document_text;
};

/// Local bookkeeping that is never serialized into a request.
struct RequestContext {
  std::string ref_id;
};

struct ChatResponse {
  std::string content;
  TokenUsage usage;
};

/// JSON body for an OpenAI-compatible chat-completions endpoint.
std::string serialize_request_body(const ChatRequest& request);

/// Throws Error(provider) on transport or protocol failure.
ChatResponse parse_response_body(std::string_view body);

/// Thrown by a provider to emulate the process dying mid-batch. Not an
/// Error, so batch code never swallows it.
class ProviderAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Provider {
 public:
  virtual ~Provider() = default;
  /// Throws Error(provider) for retryable failures.
  virtual ChatResponse complete(const ChatRequest& request, const RequestContext& context) = 0;
  virtual std::string name() const = 0;
};

struct LiveProviderConfig {
  std::string endpoint;  // e.g. https://host/v1/chat/completions
  std::string api_key;
  int timeout_seconds = 120;
};

class LiveProvider final : public Provider {
 public:
  explicit LiveProvider(LiveProviderConfig config);
  ChatResponse complete(const ChatRequest& request, const RequestContext& context) override;
  std::string name() const override { return "live"; }

 private:
  LiveProviderConfig config_;
};

/// Scripted response for one ref_id.
struct MockScript {
  double probability = 0.0;
  std::vector<std::string> reasons;
  std::vector<Evidence> evidence;
  std::optional<std::string> raw;  // verbatim content overrides the fields above
  TokenUsage usage{300, 60, 120};
  int fail_times = 0;  // leading attempts that fail with a provider error
};

struct CapturedRequest {
  std::string ref_id;
  std::string body;
};

/// Deterministic offline provider. Fixture JSON:
///   {"default": {...}, "records": {"<ref_id>": {"probability": 0.7,
///    "reasons": [...], "evidence": [{"quote","start","end"}], "raw": "...",
///    "input_tokens": n, "output_tokens": n, "thinking_tokens": n,
///    "fail_times": n}}}
class MockProvider final : public Provider {
 public:
  MockProvider() = default;
  explicit MockProvider(std::map<std::string, MockScript> scripts, std::optional<MockScript> fallback = std::nullopt);
  static std::unique_ptr<MockProvider> from_fixture(const std::filesystem::path& file);
  static std::unique_ptr<MockProvider> from_fixture_json(std::string_view json);

  ChatResponse complete(const ChatRequest& request, const RequestContext& context) override;
  std::string name() const override { return "mock"; }

  /// After `n` further successful responses, the next call throws ProviderAbort.
  void abort_after(long n);
  std::vector<CapturedRequest> captured() const;
  long request_count() const;

 private:
  std::map<std::string, MockScript> scripts_;
  std::optional<MockScript> fallback_;
  mutable std::mutex mu_;
  std::map<std::string, int> attempts_;
  std::vector<CapturedRequest> captured_;
  std::optional<long> abort_after_;
};

/// Content string a well-behaved model would return for `script`.
std::string render_mock_content(const MockScript& script);

}  // namespace tiab::llm
