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

#include <httplib.h>
#include <unistd.h>

#include <csignal>

#include <json.hpp>
#include <string>

#include "common.hpp"
#include "tiab/tiab.h"

using capi_test::run_cli;
using nlohmann::json;
using testing::TempDir;

namespace {

struct Str {
  char* s = nullptr;
  ~Str() { tiab_string_free(s); }
  std::string str() const { return s ? s : ""; }
};

capi_test::Rows store_rows(const std::filesystem::path& dir, const std::string& table) {
  return capi_test::without_columns(capi_test::parse_csv(testing::read_file(dir / table)),
                                    {"timestamp", "imported_at", "client_version"});
}

std::string mock_fixture(const std::filesystem::path& file) {
  testing::write_file(file, R"({"default":{"probability":0.8},"records":{"000002":{"probability":0.3}}})");
  return "mock:" + file.string();
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage errors exit 2") {
    CHECK(run_cli({}).exit_code == 2);
    CHECK(run_cli({"records", "--no-such-flag"}).exit_code == 2);
    CHECK(run_cli({"frobnicate"}).exit_code == 2);
    CHECK(run_cli({"records"}).exit_code == 2);  // no project given
    CHECK(run_cli({"eval", "metrics", "--truth", "x.csv", "--format", "xml"}).exit_code == 2);
    const auto help = run_cli({"--help"});
    CHECK(help.exit_code == 0);
    CHECK(help.out.find("screen-llm") != std::string::npos);
    const auto ver = run_cli({"--version"});
    CHECK(ver.exit_code == 0);
    CHECK(ver.out.find(tiab_version()) != std::string::npos);
  }

  TEST_CASE("runtime errors exit 1 with a message") {
    TempDir tmp;
    const auto r = run_cli({"--project", (tmp / "missing").string(), "records"}, true);
    CHECK(r.exit_code == 1);
    CHECK(r.out.find("error (not_found)") != std::string::npos);
  }

  TEST_CASE("CLI and C API write identical store rows") {
    TempDir tmp;
    const auto a = tmp / "cli";
    const auto b = tmp / "api";
    const std::string ris = testing::fixture("refs50.ris").string();

    REQUIRE(run_cli({"init", a.string()}).exit_code == 0);
    REQUIRE(run_cli({"import", a.string(), ris, "--importer", "tester"}).exit_code == 0);
    const std::string pa = a.string();
    REQUIRE(run_cli({"--project", pa, "decide", "000003", "include", "--reviewer", "alice", "--reason", "rct"}).exit_code == 0);
    REQUIRE(run_cli({"--project", pa, "decide", "000003", "exclude", "--reviewer", "bob"}).exit_code == 0);
    REQUIRE(run_cli({"--project", pa, "decide", "000007", "maybe", "--reviewer", "alice"}).exit_code == 0);
    REQUIRE(run_cli({"--project", pa, "config", "set", "stop.rule", "statistical"}).exit_code == 0);
    CHECK(run_cli({"--project", pa, "decide", "000003", "perhaps", "--reviewer", "bob"}).exit_code == 1);

    tiab_project* p = nullptr;
    REQUIRE(tiab_project_create(b.c_str(), &p) == TIAB_OK);
    Str rep;
    REQUIRE(tiab_import_file(p, ris.c_str(), nullptr, "tester", &rep.s) == TIAB_OK);
    for (const auto& [ref, who, what, why] : std::vector<std::tuple<const char*, const char*, const char*, const char*>>{
             {"000003", "alice", "include", "rct"}, {"000003", "bob", "exclude", ""}, {"000007", "alice", "maybe", ""}}) {
      Str id;
      REQUIRE(tiab_decision_append(p, ref, who, what, why, &id.s) == TIAB_OK);
    }
    REQUIRE(tiab_config_set(p, "stop.rule", "statistical") == TIAB_OK);
    tiab_project_close(p);

    for (const char* table : {"references.csv", "decisions.csv", "config.csv"}) {
      INFO(table);
      CHECK(store_rows(a, table) == store_rows(b, table));
    }

    CHECK(run_cli({"--project", pa, "conflicts"}).out == "000003\n");
    const auto recs = run_cli({"--project", pa, "records", "--status", "maybe"});
    CHECK(recs.out.rfind("000007\tmaybe\t", 0) == 0);
    const auto cfg = run_cli({"--project", pa, "config", "get", "stop.rule"});
    CHECK(cfg.out == "statistical\n");
    const auto exp = run_cli({"--project", pa, "export", "--format", "csv", "--scope", "conflict"});
    CHECK(capi_test::parse_csv(exp.out).size() == 2);
  }

  TEST_CASE("LLM screening and threshold preview match the C API") {
    TempDir tmp;
    const auto dir = tmp / "p";
    const std::string pd = dir.string();
    REQUIRE(run_cli({"init", pd}).exit_code == 0);
    REQUIRE(run_cli({"import", pd, testing::fixture("sample.csv").string()}).exit_code == 0);
    testing::write_file(tmp / "criteria.txt", "Adults with sepsis");
    const auto provider = mock_fixture(tmp / "m.json");
    const auto s = run_cli({"--project", pd, "screen-llm", "--provider", provider, "--prompt-file",
                            (tmp / "criteria.txt").string(), "--rpm", "10000"});
    REQUIRE(s.exit_code == 0);
    CHECK(s.out.find("execution E000001: targeted 3, included 2, excluded 1, failed 0") != std::string::npos);
    CHECK(s.out.find("estimated cost $") != std::string::npos);

    const auto pv = run_cli({"--project", pd, "threshold", "--execution", "E000001", "--t", "0.2", "--preview"});
    REQUIRE(pv.exit_code == 0);
    tiab_project* p = nullptr;
    REQUIRE(tiab_project_open(pd.c_str(), 0, &p) == TIAB_OK);
    Str j;
    REQUIRE(tiab_threshold_preview(p, "E000001", 0.2, &j.s) == TIAB_OK);
    const auto api = json::parse(j.str());
    tiab_project_close(p);
    CHECK(pv.out == "include " + api["include_count"].dump() + "\nexclude " + api["exclude_count"].dump() +
                        "\njudged " + api["judged_count"].dump() + "\n");
    CHECK(api["include_count"] == 3);

    CHECK(run_cli({"--project", pd, "threshold", "--execution", "E000001", "--t", "0.2"}).exit_code == 2);
    CHECK(run_cli({"--project", pd, "threshold", "--execution", "E000001", "--t", "0.2", "--preview", "--confirm"})
              .exit_code == 2);
    const auto cf = run_cli({"--project", pd, "threshold", "--execution", "E000001", "--t", "0.2", "--confirm"});
    CHECK(cf.exit_code == 0);
    CHECK(cf.out.find("include 3, exclude 0") != std::string::npos);
    const auto execs = json::parse(run_cli({"--project", pd, "executions"}).out);
    CHECK(execs[0]["active"] == true);
    const auto cost = json::parse(run_cli({"--project", pd, "cost", "--execution", "E000001"}).out);
    CHECK(cost["input_tokens"] == 900);
  }

  TEST_CASE("eval metrics output matches the C API") {
    TempDir tmp;
    testing::write_file(tmp / "truth.csv", "ref_id,label\n1,1\n2,0\n3,1\n4,0\n5,0\n");
    testing::write_file(tmp / "pred.csv", "ref_id,score\n1,0.9\n2,0.7\n3,0.6\n4,0.1\n5,0.3\n");
    Str j;
    REQUIRE(tiab_eval_metrics((tmp / "truth.csv").c_str(), (tmp / "pred.csv").c_str(), 0.5, &j.s) == TIAB_OK);
    const auto api = json::parse(j.str());
    const std::vector<std::string> base{"eval", "metrics", "--truth", (tmp / "truth.csv").string(), "--predictions",
                                        (tmp / "pred.csv").string()};
    auto args = base;
    CHECK(run_cli(args).out == api["text"].get<std::string>());
    args.insert(args.end(), {"--format", "csv"});
    CHECK(run_cli(args).out == api["csv"].get<std::string>());
    args = base;
    args.insert(args.end(), {"--format", "json"});
    const auto cli = json::parse(run_cli(args).out);
    CHECK(cli["sensitivity"] == api["sensitivity"]);
    CHECK(cli["fbeta"] == api["fbeta"]);
  }

  TEST_CASE("eval folds, overlap and simulate") {
    TempDir tmp;
    std::string csv = "ref_id,title,abstract,label\n";
    for (int i = 1; i <= 60; ++i) {
      const bool rel = i % 6 == 0;
      csv += std::to_string(i) + "," + (rel ? "sepsis fluids trial " : "knee surgery cohort ") + std::to_string(i) +
             "," + (rel ? "randomized resuscitation" : "orthopedic outcomes") + "," + (rel ? "1" : "0") + "\n";
    }
    testing::write_file(tmp / "ds.csv", csv);
    const auto out = (tmp / "run").string();
    std::filesystem::create_directories(out);
    const auto f = run_cli({"eval", "folds", "--dataset", (tmp / "ds.csv").string(), "--k", "3", "--out", out});
    REQUIRE(f.exit_code == 0);
    CHECK(f.out.find("fold 0: 21 records, 4 relevant") != std::string::npos);
    CHECK(std::filesystem::exists(tmp / "run" / "plan.csv"));
    const auto again = run_cli({"eval", "folds", "--dataset", (tmp / "ds.csv").string(), "--k", "3", "--reference", out});
    CHECK(again.out.find("overlap 1") != std::string::npos);
    const auto fold0 = (tmp / "run" / "fold_00.csv").string();
    CHECK(run_cli({"eval", "overlap", fold0, fold0, "--k", "5"}).out == "1\n");
    const auto sim = run_cli({"eval", "simulate", "--dataset", (tmp / "ds.csv").string(), "--rule", "consecutive",
                              "--n-consecutive", "10"});
    REQUIRE(sim.exit_code == 0);
    const auto sj = json::parse(sim.out);
    CHECK(sj["total_records"] == 60);
    CHECK(sj["recall"].get<double>() > 0.0);
  }

  TEST_CASE("serve binds loopback, answers and stops on SIGTERM") {
    TempDir tmp;
    REQUIRE(run_cli({"init", (tmp / "p").string()}).exit_code == 0);
    int fds[2];
    REQUIRE(::pipe(fds) == 0);
    const pid_t pid = ::fork();
    REQUIRE(pid >= 0);
    if (pid == 0) {
      ::dup2(fds[1], STDOUT_FILENO);
      ::close(fds[0]);
      ::execl(TIAB_CLI_PATH, TIAB_CLI_PATH, "--project", (tmp / "p").c_str(), "serve", "--port", "0",
              static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(fds[1]);
    std::string line;
    char c = 0;
    while (::read(fds[0], &c, 1) == 1 && c != '\n') line += c;
    ::close(fds[0]);
    const std::string prefix = "listening on http://127.0.0.1:";
    REQUIRE_MESSAGE(line.rfind(prefix, 0) == 0, line);
    const int port = std::stoi(line.substr(prefix.size()));
    httplib::Client client("127.0.0.1", port);
    auto res = client.Get("/version");
    REQUIRE(res);
    CHECK(json::parse(res->body)["version"] == tiab_version());
    // The running service holds the writer lock.
    CHECK(run_cli({"--project", (tmp / "p").string(), "config", "set", "llm.threshold", "0.4"}).exit_code == 1);
    ::kill(pid, SIGTERM);
    int status = 0;
    ::waitpid(pid, &status, 0);
    CHECK(WIFEXITED(status));
    CHECK(WEXITSTATUS(status) == 0);
  }
}
