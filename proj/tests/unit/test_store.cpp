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

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <thread>

#include "testing.hpp"
#include "tiab/clock.hpp"
#include "tiab/csv.hpp"
#include "tiab/error.hpp"
#include "tiab/ingest.hpp"
#include "tiab/store.hpp"

using namespace tiab;
using testing::TempDir;

namespace {

Project seeded(const std::filesystem::path& dir, int n, StoreOptions opts = {}) {
  auto p = Project::create(dir, opts);
  std::vector<Record> recs;
  for (int i = 0; i < n; ++i) {
    Record r;
    r.title = "Record number " + std::to_string(i + 1);
    r.dedup_key = "title:record number " + std::to_string(i + 1);
    r.source = "test";
    r.imported_by = "tester";
    recs.push_back(r);
  }
  p.append_records(std::move(recs));
  return p;
}

Decision dec(std::string ref, std::string reviewer, Verdict v, std::string note = {}) {
  Decision d;
  d.ref_id = std::move(ref);
  d.reviewer_id = std::move(reviewer);
  d.decision = v;
  d.note = std::move(note);
  return d;
}

ExecutionLog batch_exec(const Project& p, long targeted = 3) {
  ExecutionLog e;
  e.execution_id = p.next_execution_id();
  e.execution_type = ExecutionType::batch_screening;
  e.model_name = "m";
  e.criteria_snapshot = "criteria";
  e.prompt = "prompt";
  e.targeted_count = targeted;
  return e;
}

long active_count(const Project& p) {
  const auto ex = p.executions();
  return std::count_if(ex.begin(), ex.end(), [](const ExecutionLog& e) { return e.active; });
}

}  // namespace

TEST_SUITE("store") {
  TEST_CASE("create lays out four tables with no data rows") {
    TempDir tmp;
    { auto p = Project::create(tmp / "p"); }
    for (const char* f : {"references.csv", "decisions.csv", "config.csv", "llm_executions.csv"}) {
      CAPTURE(f);
      const auto rows = csv::parse(testing::read_file(tmp / "p" / f));
      REQUIRE(!rows.empty());
      if (std::string(f) != "config.csv") CHECK(rows.size() == 1);
    }
    const auto header = csv::parse(testing::read_file(tmp / "p" / "decisions.csv")).front();
    CHECK(header == std::vector<std::string>(kDecisionColumns.begin(), kDecisionColumns.end()));
    CHECK_ERROR_CODE(Project::create(tmp / "p"), ErrorCode::exists);
  }

  TEST_CASE("seeded configuration defaults") {
    TempDir tmp;
    auto p = Project::create(tmp / "p");
    CHECK(p.config_get("llm.threshold") == "0.5");
    CHECK(p.config_get("keywords.include_preset_rct") ==
          "randomized, randomised, randomly, placebo, double-blind, trial");
    CHECK(p.config_get("keywords.include_preset_sr") == "systematic review, meta-analysis, search strategy, PRISMA");
    CHECK(p.config_get("ranker.alpha") == "3.822");
    p.config_set("llm.threshold", "0.3");
    CHECK(p.config_get("llm.threshold") == "0.3");
    CHECK_ERROR_CODE(p.config_set("llm.top_p", "1.5"), ErrorCode::validation);
    CHECK_ERROR_CODE(p.config_set("no.such.key", "1"), ErrorCode::validation);
    CHECK_FALSE(p.config_get("no.such.key").has_value());
  }

  TEST_CASE("decisions are appended, never rewritten") {
    TempDir tmp;
    auto p = seeded(tmp / "p", 3);
    const auto size0 = std::filesystem::file_size(tmp / "p" / "decisions.csv");
    const auto id1 = p.append_decision(dec("000001", "a@x", Verdict::include));
    const auto size1 = std::filesystem::file_size(tmp / "p" / "decisions.csv");
    const auto id2 = p.append_decision(dec("000001", "a@x", Verdict::exclude));
    CHECK(id1 == "D00000001");
    CHECK(id2 == "D00000002");
    CHECK(size1 > size0);
    CHECK(std::filesystem::file_size(tmp / "p" / "decisions.csv") > size1);
    CHECK(p.snapshot().decisions.size() == 2);
    CHECK(p.effective_status("000001") == Status::exclude);
    CHECK_ERROR_CODE(p.append_decision(dec("999999", "a@x", Verdict::include)), ErrorCode::not_found);
    CHECK_FALSE(parse_verdict("keep").has_value());
  }

  TEST_CASE("judgment note round-trips byte-identical") {
    TempDir tmp;
    auto p = seeded(tmp / "p", 1);
    auto e = batch_exec(p, 1);
    p.log_execution(e);
    const std::string note = R"({"probability":0.7,"reasons":["a, \"quoted\"\nline"],"ref_id":"000001"})";
    p.append_decision(dec("000001", llm_reviewer_id(e.execution_id), Verdict::include, note));
    auto ro = Project::open(tmp / "p", OpenMode::read_only);
    CHECK(ro.snapshot().decisions.back().note == note);
  }

  TEST_CASE("status reduction") {
    TempDir tmp;
    ManualClock clock;
    auto p = seeded(tmp / "p", 4, {&clock});
    CHECK(p.effective_status("000001") == Status::pending);
    p.append_decision(dec("000001", "a@x", Verdict::include));
    p.append_decision(dec("000001", "b@x", Verdict::exclude));
    CHECK(p.effective_status("000001") == Status::conflict);
    CHECK(p.effective_status("000001", "a@x") == Status::include);

    p.append_decision(dec("000002", "a@x", Verdict::include));
    clock.advance(std::chrono::seconds(1));
    p.append_decision(dec("000002", "a@x", Verdict::exclude));
    p.append_decision(dec("000002", "b@x", Verdict::exclude));
    CHECK(p.effective_status("000002") == Status::exclude);

    p.append_decision(dec("000003", "a@x", Verdict::maybe));
    p.append_decision(dec("000003", "b@x", Verdict::pending));
    CHECK(p.effective_status("000003") == Status::maybe);
    CHECK_ERROR_CODE(p.effective_status("424242"), ErrorCode::not_found);
  }

  TEST_CASE("conflict detection includes the active LLM reviewer") {
    TempDir tmp;
    auto p = seeded(tmp / "p", 3);
    CHECK(p.detect_conflicts().empty());
    auto e = batch_exec(p, 3);
    p.log_execution(e);
    const auto llm = llm_reviewer_id(e.execution_id);
    p.append_decision(dec("000002", llm, Verdict::include));
    p.append_decision(dec("000002", "a@x", Verdict::exclude));
    CHECK(p.detect_conflicts().empty());  // LLM rows of an inactive execution do not count
    p.set_active_execution(e.execution_id);
    CHECK(p.detect_conflicts() == std::vector<std::string>{"000002"});
    CHECK_ERROR_CODE(p.append_decision(dec("000001", "llm:E999999", Verdict::include)), ErrorCode::not_found);
  }

  TEST_CASE("single active execution") {
    TempDir tmp;
    auto p = seeded(tmp / "p", 3);
    auto e1 = batch_exec(p);
    p.log_execution(e1);
    auto e2 = batch_exec(p);
    p.log_execution(e2);
    p.set_active_execution(e1.execution_id);
    p.set_active_execution(e2.execution_id);
    CHECK(active_count(p) == 1);
    CHECK(p.execution(e2.execution_id)->active);
    p.set_active_execution(e2.execution_id);
    CHECK(active_count(p) == 1);
    CHECK_ERROR_CODE(p.set_active_execution("E424242"), ErrorCode::not_found);

    auto bad = batch_exec(p, 2);
    bad.included_count = 2;
    bad.excluded_count = 1;
    CHECK_ERROR_CODE(p.log_execution(bad), ErrorCode::validation);
    CHECK_ERROR_CODE(p.log_execution(e1), ErrorCode::conflict);
  }

  TEST_CASE("single writer lock") {
    TempDir tmp;
    auto p = seeded(tmp / "p", 1);
    CHECK_ERROR_CODE(Project::open(tmp / "p", OpenMode::read_write), ErrorCode::locked);
    auto ro = Project::open(tmp / "p", OpenMode::read_only);
    CHECK_ERROR_CODE(ro.append_decision(dec("000001", "a@x", Verdict::include)), ErrorCode::locked);
    p.append_decision(dec("000001", "a@x", Verdict::include));
    CHECK(ro.effective_status("000001") == Status::include);
    CHECK_ERROR_CODE(Project::open(tmp / "missing", OpenMode::read_only), ErrorCode::not_found);
  }

  TEST_CASE("screening set assignment") {
    TempDir tmp;
    auto p = seeded(tmp / "p", 7);
    p.config_set("assign.calibration_size", "2");
    p.config_set("assign.group_count", "2");
    const auto counts = p.assign_screening_sets();
    CHECK(counts.at("calibration") == 2);
    CHECK(counts.at("group-1") == 3);
    CHECK(counts.at("group-2") == 2);
    CHECK(p.record("000003")->screening_set == "group-1");
    CHECK(p.record("000004")->screening_set == "group-2");
  }

  TEST_CASE("torn trailing row is dropped on open") {
    TempDir tmp;
    {
      auto p = seeded(tmp / "p", 2);
      p.append_decision(dec("000001", "a@x", Verdict::include));
    }
    {
      std::ofstream out(tmp / "p" / "decisions.csv", std::ios::app | std::ios::binary);
      out << "D00000002,000002,a@x,excl";
    }
    auto p = Project::open(tmp / "p", OpenMode::read_write);
    CHECK(p.snapshot().decisions.size() == 1);
    CHECK(p.append_decision(dec("000002", "a@x", Verdict::exclude)) == "D00000002");
    CHECK(p.snapshot().decisions.size() == 2);
  }

  TEST_CASE("decision append survives a kill: fully visible or absent") {
    TempDir tmp;
    { seeded(tmp / "p", 5, {nullptr, true}); }
    for (int round = 0; round < 5; ++round) {
      const pid_t pid = ::fork();
      REQUIRE(pid >= 0);
      if (pid == 0) {
        try {
          auto p = Project::open(tmp / "p", OpenMode::read_write);
          for (int i = 0;; ++i) {
            p.append_decision(dec("00000" + std::to_string(1 + i % 5), "k@x", i % 2 ? Verdict::include : Verdict::exclude,
                                  std::string(static_cast<std::size_t>(200 + i % 300), 'n')));
          }
        } catch (...) {
        }
        ::_exit(0);
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(30 + 17 * round));
      ::kill(pid, SIGKILL);
      int status = 0;
      ::waitpid(pid, &status, 0);
      auto p = Project::open(tmp / "p", OpenMode::read_write);
      const auto snap = p.snapshot();
      for (std::size_t i = 0; i < snap.decisions.size(); ++i) {
        const auto& d = snap.decisions[i];
        char expect[16];
        std::snprintf(expect, sizeof expect, "D%08zu", i + 1);
        CHECK(d.decision_id == expect);
        CHECK(d.reviewer_id == "k@x");
        CHECK(d.note.size() >= 200);
      }
    }
  }

  TEST_CASE("copied directory reproduces statuses") {
    TempDir tmp;
    auto p = seeded(tmp / "p", 6);
    p.append_decision(dec("000001", "a@x", Verdict::include));
    p.append_decision(dec("000001", "b@x", Verdict::exclude));
    p.append_decision(dec("000004", "b@x", Verdict::maybe));
    std::filesystem::copy(tmp / "p", tmp / "copy", std::filesystem::copy_options::recursive);
    auto copy = Project::open(tmp / "copy", OpenMode::read_only);
    const auto a = p.snapshot(), b = copy.snapshot();
    CHECK(a.effective_statuses(a.all_reviewers()) == b.effective_statuses(b.all_reviewers()));
  }
}
