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

#include <doctest.h>

#include <sys/stat.h>

#include <algorithm>
#include <json.hpp>
#include <set>

#include "testing.hpp"
#include "tiab/batch.hpp"
#include "tiab/clock.hpp"
#include "tiab/error.hpp"
#include "tiab/ingest.hpp"
#include "tiab/judgment.hpp"
#include "tiab/keystore.hpp"
#include "tiab/prompt.hpp"
#include "tiab/provider.hpp"
#include "tiab/rate_limiter.hpp"
#include "tiab/text.hpp"

using namespace tiab;
using namespace tiab::llm;
using nlohmann::json;
using testing::TempDir;

namespace {

Project project_with(const std::filesystem::path& dir, int n, Clock* clock = nullptr) {
  auto p = Project::create(dir, {clock});
  std::vector<RecordDraft> drafts;
  for (int i = 0; i < n; ++i) {
    RecordDraft d;
    d.title = "Trial " + std::to_string(i + 1) + " of fluids";
    d.abstract = i % 4 == 0 ? "" : "Abstract text " + std::to_string(i + 1) + " with \xCE\xB1 outcomes.";
    d.authors = {"Secret, Author" + std::to_string(i)};
    d.doi = "10.9999/hidden." + std::to_string(i);
    d.source = "test";
    drafts.push_back(d);
  }
  ingest::import_batch(drafts, p, "tester", "fixture");
  return p;
}

BatchParams params(double threshold = 0.5) {
  BatchParams p;
  p.prompt = build_screening_prompt("Adults with sepsis; randomized trials only.");
  p.threshold = threshold;
  p.requests_per_minute = 1000;
  p.initial_backoff = std::chrono::milliseconds(10);
  return p;
}

MockScript script(double p) {
  MockScript s;
  s.probability = p;
  s.reasons = {"reason"};
  return s;
}

}  // namespace

TEST_SUITE("llm") {
  TEST_CASE("prompt template") {
    const auto a = build_screening_prompt("Population: adults. Intervention: fluids.");
    const auto b = build_screening_prompt("Population: adults. Intervention: fluids.");
    CHECK(a.rendered == b.rendered);
    CHECK(a.rendered.find(kSensitivityClause) != std::string::npos);
    CHECK(a.rendered.find("Population: adults.") != std::string::npos);
    CHECK(a.rendered.find("probability") != std::string::npos);
    CHECK(a.rendered.find("evidence") != std::string::npos);
    CHECK(a.template_version == kTemplateVersion);
    CHECK(build_screening_prompt("x", "ja").rendered.find(kSensitivityClause) != std::string::npos);
    CHECK_ERROR_CODE(build_screening_prompt("   "), ErrorCode::validation);
  }

  TEST_CASE("judgment parsing") {
    const std::string doc = "Randomized trial of fluids in sepsis";
    auto j = parse_judgment(R"({"probability":0.7,"reasons":["rct"],"evidence":[]})", doc);
    CHECK(j.probability == 0.7);
    CHECK(j.reasons == std::vector<std::string>{"rct"});

    j = parse_judgment("```json\n{\"probability\":\"1.3\",\"reasons\":[],\"evidence\":[]}\n```", doc);
    CHECK(j.probability == 1.0);
    CHECK(j.warnings.size() == 1);

    j = parse_judgment(R"(noise {"probability":0.2,"evidence":[{"quote":"trial","start":12,"end":17}]} tail)", doc);
    REQUIRE(j.evidence.size() == 1);
    CHECK(j.evidence[0].valid_offsets);
    CHECK(j.evidence[0].start == 11);
    CHECK(j.evidence[0].end == 16);

    j = parse_judgment(R"({"probability":0.2,"evidence":[{"quote":"absent","start":0,"end":6}]})", doc);
    CHECK_FALSE(j.evidence[0].valid_offsets);

    const std::string greek = "\xCE\xB1\xCE\xB2 trial";
    j = parse_judgment(R"({"probability":0.5,"evidence":[{"quote":"trial","start":3,"end":8}]})", greek);
    CHECK(j.evidence[0].valid_offsets);
    CHECK(text::substr_cp(greek, 3, 8) == "trial");

    CHECK_ERROR_CODE(parse_judgment("no json here", doc), ErrorCode::parse);
    CHECK_ERROR_CODE(parse_judgment(R"({"reasons":["x"]})", doc), ErrorCode::parse);
  }

  TEST_CASE("judgment note round trip") {
    LlmJudgment j;
    j.ref_id = "000007";
    j.probability = 0.25;
    j.reasons = {"a", "b"};
    j.evidence = {{"q", 1, 2, true}};
    j.raw_response = "{...}";
    j.usage = {10, 20, 30};
    const auto back = judgment_from_note(judgment_to_note(j));
    REQUIRE(back.has_value());
    CHECK(*back == j);
    CHECK(is_failure_note(failure_note("000007", "boom", 4)));
    CHECK_FALSE(judgment_from_note(failure_note("000007", "boom", 4)).has_value());
  }

  TEST_CASE("request body carries only model parameters, prompt and text") {
    ChatRequest r;
    r.model = "m";
    r.system_prompt = "PROMPT";
    r.document_text = "Title Abstract";
    const auto body = json::parse(serialize_request_body(r));
    std::set<std::string> keys;
    for (const auto& [k, v] : body.items()) keys.insert(k);
    CHECK(keys == std::set<std::string>{"model", "temperature", "top_p", "reasoning_effort", "messages", "response_format"});
    CHECK(body["messages"][0]["content"] == "PROMPT");
    CHECK(body["messages"][1]["content"] == "Title Abstract");
  }

  TEST_CASE("response parsing separates reasoning tokens") {
    const auto r = parse_response_body(R"({"choices":[{"message":{"content":"{}"}}],
      "usage":{"prompt_tokens":100,"completion_tokens":70,"completion_tokens_details":{"reasoning_tokens":50}}})");
    CHECK(r.usage.input_tokens == 100);
    CHECK(r.usage.output_tokens == 20);
    CHECK(r.usage.thinking_tokens == 50);
    CHECK_ERROR_CODE(parse_response_body(R"({"error":{"message":"quota"}})"), ErrorCode::provider);
    CHECK_ERROR_CODE(parse_response_body("oops"), ErrorCode::provider);
  }

  TEST_CASE("rate limiter keeps every 60 s window within the limit") {
    ManualClock clock;
    RateLimiter limiter(7, clock);
    std::vector<Clock::time_point> t;
    for (int i = 0; i < 50; ++i) {
      if (i % 5 == 0) clock.advance(std::chrono::seconds(13));
      t.push_back(limiter.acquire());
    }
    for (std::size_t i = 0; i < t.size(); ++i) {
      const auto in_window = std::count_if(t.begin(), t.end(), [&](auto x) {
        return x >= t[i] && x < t[i] + std::chrono::seconds(60);
      });
      CHECK(in_window <= 7);
    }
  }

  TEST_CASE("batch applies the threshold and accounts for every record") {
    TempDir tmp;
    ManualClock clock;
    auto p = project_with(tmp / "p", 20, &clock);
    std::map<std::string, MockScript> scripts;
    long expected_include = 0;
    for (int i = 1; i <= 20; ++i) {
      const double prob = (i % 5) * 0.25;  // 0.25, 0.5, 0.75, 1.0, 0.0
      char id[8];
      std::snprintf(id, sizeof id, "%06d", i);
      scripts[id] = script(prob);
      if (prob >= 0.5) ++expected_include;
    }
    scripts["000003"].fail_times = 2;
    scripts["000004"].fail_times = 9;
    MockProvider mock(scripts);
    BatchHooks hooks;
    hooks.clock = &clock;
    const auto out = run_batch(p, mock, params(), hooks);
    const auto& e = out.execution;
    CHECK(e.targeted_count == 20);
    CHECK(out.failed_count == 1);
    CHECK(e.included_count == expected_include - 1);  // 000004 (p = 1.0) failed
    CHECK(e.included_count + e.excluded_count + out.failed_count == e.targeted_count);
    CHECK(p.effective_status("000004", llm_reviewer_id(e.execution_id)) == Status::pending);
    CHECK(out.requests_sent == 20 + 2 + 3);

    const auto c = threshold_preview(p, e.execution_id, 0.5);
    CHECK(c.include_count == e.included_count);
    CHECK(c.exclude_count == e.excluded_count);
    CHECK(threshold_preview(p, e.execution_id, 0.0).include_count == c.judged_count);
    CHECK(threshold_preview(p, e.execution_id, 1.0).include_count == 3);
    CHECK_ERROR_CODE(threshold_preview(p, "E999999", 0.5), ErrorCode::not_found);
    CHECK_ERROR_CODE(threshold_preview(p, e.execution_id, 1.5), ErrorCode::validation);

    for (const auto& [id, j] : judgments_for_execution(p.snapshot(), e.execution_id)) {
      for (const auto& ev : j.evidence) {
        if (ev.valid_offsets) {
          const auto doc = build_corpus_text(*p.record(id));
          CHECK(text::substr_cp(doc, static_cast<std::size_t>(ev.start), static_cast<std::size_t>(ev.end)) == ev.quote);
        }
      }
    }
  }

  TEST_CASE("confirming a threshold appends and activates") {
    TempDir tmp;
    auto p = project_with(tmp / "p", 10);
    MockProvider mock({}, script(0.4));
    std::map<std::string, MockScript> scripts;
    for (int i = 1; i <= 10; ++i) {
      char id[8];
      std::snprintf(id, sizeof id, "%06d", i);
      scripts[id] = script(i / 10.0);
    }
    MockProvider mock2(scripts);
    const auto e = run_batch(p, mock2, params()).execution;
    const auto rows_before = p.snapshot().decisions.size();
    const auto same = confirm_threshold(p, e.execution_id, 0.5);
    CHECK(same.included_count == e.included_count);
    CHECK(same.confirmation_status == Confirmation::confirmed);
    CHECK(same.active);
    CHECK(p.snapshot().decisions.size() == rows_before + 10);
    const auto lower = confirm_threshold(p, e.execution_id, 0.2);
    CHECK(lower.included_count >= same.included_count);
    CHECK(p.effective_status("000002") == Status::include);
    CHECK(p.snapshot().decisions.size() == rows_before + 20);

    const auto e2 = run_batch(p, mock, params()).execution;
    confirm_threshold(p, e2.execution_id, 0.5);
    long active = 0;
    for (const auto& x : p.executions()) active += x.active ? 1 : 0;
    CHECK(active == 1);
  }

  TEST_CASE("interrupted batch resumes without duplicate requests") {
    TempDir tmp;
    auto p = project_with(tmp / "p", 30);
    MockProvider first({}, script(0.6));
    first.abort_after(12);
    CHECK_THROWS_AS(run_batch(p, first, params()), ProviderAbort);
    const auto exec_id = p.executions().back().execution_id;
    MockProvider second({}, script(0.6));
    const auto out = resume_batch(p, second, exec_id, params());
    CHECK(out.skipped_count == 12);
    std::multiset<std::string> all;
    for (const auto& c : first.captured()) all.insert(c.ref_id);
    for (const auto& c : second.captured()) all.insert(c.ref_id);
    CHECK(all.size() == 30);
    CHECK(std::set<std::string>(all.begin(), all.end()).size() == 30);
    CHECK(out.execution.included_count == 30);
  }

  TEST_CASE("captured traffic never carries metadata") {
    TempDir tmp;
    auto p = project_with(tmp / "p", 8);
    MockProvider mock({}, script(0.9));
    const auto prm = params();
    run_batch(p, mock, prm);
    const auto snap = p.snapshot();
    for (const auto& c : mock.captured()) {
      const auto* r = snap.record(c.ref_id);
      REQUIRE(r);
      CHECK(c.body.find("hidden") == std::string::npos);
      CHECK(c.body.find("Secret") == std::string::npos);
      CHECK(c.body.find("tester") == std::string::npos);
      const auto body = json::parse(c.body);
      CHECK(body["messages"][1]["content"] == build_corpus_text(*r));
      CHECK(body["messages"][0]["content"] == prm.prompt.rendered);
    }
  }

  TEST_CASE("parameters come from project configuration") {
    TempDir tmp;
    auto p = project_with(tmp / "p", 2);
    CHECK_ERROR_CODE(params_from_config(p.snapshot()), ErrorCode::validation);
    p.config_set("llm.prompt", "Adults only");
    p.config_set("llm.threshold", "0.3");
    const auto prm = params_from_config(p.snapshot());
    CHECK(prm.threshold == 0.3);
    CHECK(prm.prompt.criteria == "Adults only");
  }

  TEST_CASE("refinement pass logs a prompt generation execution") {
    TempDir tmp;
    auto p = project_with(tmp / "p", 1);
    MockScript s;
    s.raw = R"({"criteria":"Refined: adults with septic shock"})";
    MockProvider mock({}, s);
    std::string id;
    const auto refined = refine_prompt(p, mock, "adults with sepsis", params(), &id);
    CHECK(refined.criteria == "Refined: adults with septic shock");
    CHECK(refined.rendered.find(kSensitivityClause) != std::string::npos);
    REQUIRE(p.execution(id).has_value());
    CHECK(p.execution(id)->execution_type == ExecutionType::prompt_generation);
  }

  TEST_CASE("cost estimate") {
    CHECK(estimate_cost({1'000'000, 0, 0}) == 0.50);
    CHECK(estimate_cost({0, 0, 0}) == 0.0);
    CHECK(estimate_cost({0, 500'000, 500'000}) == doctest::Approx(3.0));
    // Representative token profile for a title/abstract request with low
    // thinking; 16,645 such records land near the reported total.
    const TokenUsage per_record{1000, 100, 250};
    TokenUsage total;
    for (int i = 0; i < 16645; ++i) total += per_record;
    CHECK(estimate_cost(total) == doctest::Approx(23.0).epsilon(0.2));
  }

  TEST_CASE("keystore encrypts at rest") {
    TempDir tmp;
    Keystore ks(tmp / "keys");
    ks.set("gemini", "sk-very-secret-value");
    ks.set("other", "x");
    CHECK(ks.get("gemini") == "sk-very-secret-value");
    CHECK(ks.names() == std::vector<std::string>{"gemini", "other"});
    for (const auto& f : std::filesystem::directory_iterator(tmp / "keys")) {
      CHECK(testing::read_file(f.path()).find("sk-very-secret-value") == std::string::npos);
      struct stat st {};
      ::stat(f.path().c_str(), &st);
      CHECK((st.st_mode & 0777) == 0600);
    }
    struct stat st {};
    ::stat((tmp / "keys").c_str(), &st);
    CHECK((st.st_mode & 0777) == 0700);
    CHECK(ks.remove("other"));
    CHECK_FALSE(ks.remove("other"));
    CHECK_FALSE(Keystore(tmp / "keys").get("other").has_value());
    CHECK(Keystore(tmp / "keys").get("gemini") == "sk-very-secret-value");
  }
}
