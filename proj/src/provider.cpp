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

#include "tiab/provider.hpp"

#include <fstream>
#include <httplib.h>
#include <json.hpp>
#include <sstream>

#include "tiab/error.hpp"

namespace tiab::llm {

using nlohmann::json;
using nlohmann::ordered_json;

std::string serialize_request_body(const ChatRequest& request) {
  ordered_json body;
  body["model"] = request.model;
  body["temperature"] = request.temperature;
  body["top_p"] = request.top_p;
  body["reasoning_effort"] = std::string(to_string(request.thinking_level));
  body["messages"] = ordered_json::array({
      ordered_json{{"role", "system"}, {"content", request.system_prompt}},
      ordered_json{{"role", "user"}, {"content", request.document_text}},
  });
  body["response_format"] = ordered_json{{"type", "json_object"}};
  return body.dump();
}

ChatResponse parse_response_body(std::string_view body) {
  const json o = json::parse(body, nullptr, false);
  if (o.is_discarded() || !o.is_object()) throw Error(ErrorCode::provider, "response body is not a JSON object");
  if (auto err = o.find("error"); err != o.end()) {
    throw Error(ErrorCode::provider, "provider error: " + (err->is_object() ? err->value("message", err->dump()) : err->dump()));
  }
  ChatResponse r;
  try {
    const auto& msg = o.at("choices").at(0).at("message");
    r.content = msg.at("content").is_string() ? msg.at("content").get<std::string>() : std::string();
    if (auto u = o.find("usage"); u != o.end() && u->is_object()) {
      r.usage.input_tokens = u->value("prompt_tokens", std::int64_t{0});
      const auto completion = u->value("completion_tokens", std::int64_t{0});
      std::int64_t reasoning = 0;
      if (auto d = u->find("completion_tokens_details"); d != u->end() && d->is_object()) {
        reasoning = d->value("reasoning_tokens", std::int64_t{0});
      }
      // completion_tokens already includes reasoning tokens on this API.
      r.usage.thinking_tokens = reasoning;
      r.usage.output_tokens = std::max<std::int64_t>(0, completion - reasoning);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::provider, std::string("unexpected response shape: ") + e.what());
  }
  return r;
}

// ---------------------------------------------------------------------------

LiveProvider::LiveProvider(LiveProviderConfig config) : config_(std::move(config)) {
  if (config_.endpoint.empty()) throw Error(ErrorCode::validation, "provider endpoint is empty");
  if (config_.api_key.empty()) throw Error(ErrorCode::validation, "provider API key is empty");
}

ChatResponse LiveProvider::complete(const ChatRequest& request, const RequestContext&) {
  const std::string& url = config_.endpoint;
  const auto scheme_end = url.find("://");
  const auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  const std::string origin = path_start == std::string::npos ? url : url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

  httplib::Client client(origin);
  client.set_connection_timeout(config_.timeout_seconds, 0);
  client.set_read_timeout(config_.timeout_seconds, 0);
  client.set_write_timeout(config_.timeout_seconds, 0);
  const httplib::Headers headers = {{"Authorization", "Bearer " + config_.api_key}};
  auto res = client.Post(path, headers, serialize_request_body(request), "application/json");
  if (!res) throw Error(ErrorCode::provider, "transport failure: " + httplib::to_string(res.error()));
  if (res->status != 200) {
    throw Error(ErrorCode::provider, "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 300));
  }
  return parse_response_body(res->body);
}

// ---------------------------------------------------------------------------

std::string render_mock_content(const MockScript& script) {
  if (script.raw) return *script.raw;
  json ev = json::array();
  for (const auto& e : script.evidence) ev.push_back({{"quote", e.quote}, {"start", e.start}, {"end", e.end}});
  return json{{"probability", script.probability}, {"reasons", script.reasons}, {"evidence", std::move(ev)}}.dump();
}

MockProvider::MockProvider(std::map<std::string, MockScript> scripts, std::optional<MockScript> fallback)
    : scripts_(std::move(scripts)), fallback_(std::move(fallback)) {}

namespace {

MockScript script_from_json(const json& o) {
  MockScript s;
  s.probability = o.value("probability", 0.0);
  s.reasons = o.value("reasons", std::vector<std::string>{});
  const json evidence = o.value("evidence", json::array());
  for (const auto& e : evidence) {
    s.evidence.push_back({e.value("quote", ""), e.value("start", std::int64_t{0}), e.value("end", std::int64_t{0}), false});
  }
  if (o.contains("raw")) s.raw = o.at("raw").get<std::string>();
  s.usage.input_tokens = o.value("input_tokens", s.usage.input_tokens);
  s.usage.output_tokens = o.value("output_tokens", s.usage.output_tokens);
  s.usage.thinking_tokens = o.value("thinking_tokens", s.usage.thinking_tokens);
  s.fail_times = o.value("fail_times", 0);
  return s;
}

}  // namespace

std::unique_ptr<MockProvider> MockProvider::from_fixture_json(std::string_view text) {
  const json o = json::parse(text, nullptr, false);
  if (o.is_discarded() || !o.is_object()) throw Error(ErrorCode::parse, "mock fixture is not a JSON object");
  try {
    std::map<std::string, MockScript> scripts;
    const json records = o.value("records", json::object());
    for (const auto& [ref_id, v] : records.items()) scripts.emplace(ref_id, script_from_json(v));
    std::optional<MockScript> fallback;
    if (o.contains("default")) fallback = script_from_json(o.at("default"));
    return std::make_unique<MockProvider>(std::move(scripts), std::move(fallback));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse, std::string("malformed mock fixture: ") + e.what());
  }
}

std::unique_ptr<MockProvider> MockProvider::from_fixture(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot read mock fixture " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_fixture_json(ss.str());
}

ChatResponse MockProvider::complete(const ChatRequest& request, const RequestContext& context) {
  std::lock_guard lock(mu_);
  if (abort_after_ && *abort_after_ <= 0) throw ProviderAbort("mock provider aborted the batch");
  captured_.push_back({context.ref_id, serialize_request_body(request)});
  const MockScript* script = nullptr;
  if (auto it = scripts_.find(context.ref_id); it != scripts_.end()) script = &it->second;
  else if (fallback_) script = &*fallback_;
  if (!script) throw Error(ErrorCode::provider, "no scripted response for " + context.ref_id);
  if (++attempts_[context.ref_id] <= script->fail_times) {
    throw Error(ErrorCode::provider, "scripted transient failure for " + context.ref_id);
  }
  if (abort_after_) --*abort_after_;
  return {render_mock_content(*script), script->usage};
}

void MockProvider::abort_after(long n) {
  std::lock_guard lock(mu_);
  abort_after_ = n;
}

std::vector<CapturedRequest> MockProvider::captured() const {
  std::lock_guard lock(mu_);
  return captured_;
}

long MockProvider::request_count() const {
  std::lock_guard lock(mu_);
  return static_cast<long>(captured_.size());
}

}  // namespace tiab::llm
