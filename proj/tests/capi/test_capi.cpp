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

#include <algorithm>
#include <json.hpp>
#include <string>

#include "common.hpp"
#include "tiab/tiab.h"

using nlohmann::json;
using testing::TempDir;

namespace {

struct Str {
  char* s = nullptr;
  ~Str() { tiab_string_free(s); }
  std::string str() const { return s ? s : ""; }
  json parsed() const { return json::parse(str()); }
};

struct Handle {
  tiab_project* p = nullptr;
  ~Handle() { tiab_project_close(p); }
};

std::string mock_fixture(const std::filesystem::path& file) {
  testing::write_file(file, R"({"default":{"probability":0.8,"reasons":["fits"]},
    "records":{"000001":{"probability":0.2},"000002":{"probability":0.45}}})");
  return "mock:" + file.string();
}

}  // namespace

TEST_SUITE("capi") {
  TEST_CASE("version and status names") {
    CHECK(std::string(tiab_version()).size() > 0);
    CHECK(std::string(tiab_status_name(TIAB_OK)) == "ok");
    CHECK(std::string(tiab_status_name(TIAB_E_LOCKED)) == "locked");
    CHECK(std::string(tiab_status_name(TIAB_E_ARGUMENT)) == "argument");
  }

  TEST_CASE("NULL arguments are rejected") {
    tiab_project* p = nullptr;
    CHECK(tiab_project_create(nullptr, &p) == TIAB_E_ARGUMENT);
    CHECK(std::string(tiab_last_error()).find("NULL") != std::string::npos);
    char* out = nullptr;
    CHECK(tiab_records(nullptr, nullptr, &out) == TIAB_E_ARGUMENT);
    double v = 0;
    CHECK(tiab_fbeta(0.5, 0.5, 1.0, nullptr) == TIAB_E_ARGUMENT);
    CHECK(tiab_fbeta(0.5, 0.5, 1.0, &v) == TIAB_OK);
    CHECK(v == doctest::Approx(0.5));
    CHECK(tiab_fbeta(0.0, 0.0, 7.0, &v) == TIAB_E_UNDEFINED);
    tiab_project_close(nullptr);
    tiab_string_free(nullptr);
  }

  TEST_CASE("project lifecycle, import, decisions and export") {
    TempDir tmp;
    const std::string dir = (tmp / "p").string();
    Handle h;
    REQUIRE(tiab_project_create(dir.c_str(), &h.p) == TIAB_OK);
    tiab_project* again = nullptr;
    CHECK(tiab_project_create(dir.c_str(), &again) == TIAB_E_EXISTS);
    CHECK(tiab_project_open(dir.c_str(), 1, &again) == TIAB_E_LOCKED);
    CHECK(tiab_project_open((tmp / "nope").c_str(), 0, &again) == TIAB_E_NOT_FOUND);

    Str rep;
    REQUIRE(tiab_import_file(h.p, testing::fixture("refs50.ris").c_str(), nullptr, "tester", &rep.s) == TIAB_OK);
    CHECK(rep.parsed()["imported_count"] == 50);
    Str rep2;
    REQUIRE(tiab_import_file(h.p, testing::fixture("refs50.ris").c_str(), "ris", "tester", &rep2.s) == TIAB_OK);
    CHECK(rep2.parsed()["imported_count"] == 0);
    CHECK(rep2.parsed()["duplicate_count"] == 50);
    Str bad;
    CHECK(tiab_import_file(h.p, testing::fixture("refs50.ris").c_str(), "docx", "tester", &bad.s) == TIAB_E_VALIDATION);

    Str id;
    REQUIRE(tiab_decision_append(h.p, "000001", "alice", "include", "fits", &id.s) == TIAB_OK);
    CHECK(id.str() == "D00000001");
    Str id2;
    CHECK(tiab_decision_append(h.p, "000001", "bob", "exclude", nullptr, &id2.s) == TIAB_OK);
    Str id3;
    CHECK(tiab_decision_append(h.p, "000404", "bob", "exclude", nullptr, &id3.s) == TIAB_E_NOT_FOUND);
    Str id4;
    CHECK(tiab_decision_append(h.p, "000002", "bob", "perhaps", nullptr, &id4.s) == TIAB_E_VALIDATION);

    Str st;
    REQUIRE(tiab_effective_status(h.p, "000001", nullptr, &st.s) == TIAB_OK);
    CHECK(st.str() == "conflict");
    Str st_a;
    REQUIRE(tiab_effective_status(h.p, "000001", "alice", &st_a.s) == TIAB_OK);
    CHECK(st_a.str() == "include");
    Str conf;
    REQUIRE(tiab_conflicts(h.p, &conf.s) == TIAB_OK);
    CHECK(conf.parsed()["conflicts"] == json::array({"000001"}));
    Str pend;
    REQUIRE(tiab_records(h.p, "pending", &pend.s) == TIAB_OK);
    CHECK(pend.parsed()["records"].size() == 49);

    Str csv;
    REQUIRE(tiab_export(h.p, "csv", "conflict", &csv.s) == TIAB_OK);
    const auto rows = capi_test::parse_csv(csv.str());
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].size() == 20);
    CHECK(rows[0].back() == "final_decision");
    CHECK(rows[1].back() == "conflict");
    Str ris;
    REQUIRE(tiab_export(h.p, "ris", "all", &ris.s) == TIAB_OK);
    std::size_t blocks = 0;
    for (std::size_t pos = 0; (pos = ris.str().find("ER  -", pos)) != std::string::npos; ++pos) ++blocks;
    CHECK(blocks == 50);

    Str sets;
    REQUIRE(tiab_assign_sets(h.p, &sets.s) == TIAB_OK);
    CHECK(sets.parsed().is_object());
  }

  TEST_CASE("configuration") {
    TempDir tmp;
    Handle h;
    REQUIRE(tiab_project_create((tmp / "p").c_str(), &h.p) == TIAB_OK);
    Str v;
    REQUIRE(tiab_config_get(h.p, "llm.threshold", &v.s) == TIAB_OK);
    CHECK(v.str() == "0.5");
    CHECK(tiab_config_set(h.p, "llm.threshold", "0.25") == TIAB_OK);
    CHECK(tiab_config_set(h.p, "llm.threshold", "-1") == TIAB_E_VALIDATION);
    CHECK(tiab_config_set(h.p, "bogus.key", "1") == TIAB_E_VALIDATION);
    Str all;
    REQUIRE(tiab_config_list(h.p, &all.s) == TIAB_OK);
    CHECK(all.parsed()["llm.threshold"] == "0.25");
  }

  TEST_CASE("ranking and stopping") {
    TempDir tmp;
    Handle h;
    REQUIRE(tiab_project_create((tmp / "p").c_str(), &h.p) == TIAB_OK);
    Str rep;
    REQUIRE(tiab_import_file(h.p, testing::fixture("refs50.ris").c_str(), nullptr, "t", &rep.s) == TIAB_OK);
    Str cold;
    REQUIRE(tiab_rank(h.p, nullptr, &cold.s) == TIAB_OK);
    CHECK(cold.parsed()["cold_start"] == true);
    CHECK(cold.parsed()["queue"][0]["ref_id"] == "000001");
    for (const char* ref : {"000001", "000002"}) {
      Str id;
      REQUIRE(tiab_decision_append(h.p, ref, "alice", ref[5] == '1' ? "include" : "exclude", nullptr, &id.s) == TIAB_OK);
    }
    Str warm;
    REQUIRE(tiab_rank(h.p, "alice", &warm.s) == TIAB_OK);
    const auto q = warm.parsed();
    CHECK(q["cold_start"] == false);
    CHECK(q["queue"].size() == 48);
    for (std::size_t i = 1; i < q["queue"].size(); ++i) {
      CHECK(q["queue"][i - 1]["probability"].get<double>() >= q["queue"][i]["probability"].get<double>());
    }
    Str stop;
    REQUIRE(tiab_stopping(h.p, nullptr, &stop.s) == TIAB_OK);
    CHECK(stop.parsed()["stop"] == false);
    CHECK(stop.parsed()["screened"] == 2);
  }

  TEST_CASE("LLM batch through the mock provider") {
    TempDir tmp;
    Handle h;
    REQUIRE(tiab_project_create((tmp / "p").c_str(), &h.p) == TIAB_OK);
    Str rep;
    REQUIRE(tiab_import_file(h.p, testing::fixture("sample.csv").c_str(), nullptr, "t", &rep.s) == TIAB_OK);
    const long n = rep.parsed()["imported_count"].get<long>();
    REQUIRE(n >= 3);

    Str none;
    CHECK(tiab_llm_batch(h.p, json{{"provider", mock_fixture(tmp / "m.json")}}.dump().c_str(), &none.s) ==
          TIAB_E_VALIDATION);  // no criteria anywhere
    Str badp;
    CHECK(tiab_llm_batch(h.p, R"({"provider":"carrier-pigeon","criteria":"x"})", &badp.s) == TIAB_E_VALIDATION);
    Str malformed;
    CHECK(tiab_llm_batch(h.p, "{oops", &malformed.s) == TIAB_E_PARSE);

    const json opts = {{"provider", mock_fixture(tmp / "m.json")}, {"criteria", "Adults"}, {"rpm", 10000}};
    Str out;
    REQUIRE(tiab_llm_batch(h.p, opts.dump().c_str(), &out.s) == TIAB_OK);
    const auto r = out.parsed();
    const std::string exec = r["execution"]["execution_id"];
    CHECK(r["execution"]["targeted_count"] == n);
    CHECK(r["execution"]["included_count"] == n - 2);
    CHECK(r["input_tokens"] == 300 * n);
    CHECK(r["cost_usd"].get<double>() == doctest::Approx((300.0 * n * 0.5 + 180.0 * n * 3.0) / 1e6));

    Str pv;
    REQUIRE(tiab_threshold_preview(h.p, exec.c_str(), 0.4, &pv.s) == TIAB_OK);
    CHECK(pv.parsed()["include_count"] == n - 1);
    Str pv_bad;
    CHECK(tiab_threshold_preview(h.p, exec.c_str(), 2.0, &pv_bad.s) == TIAB_E_VALIDATION);
    Str cf;
    REQUIRE(tiab_threshold_confirm(h.p, exec.c_str(), 0.4, &cf.s) == TIAB_OK);
    CHECK(cf.parsed()["execution"]["active"] == true);
    Str st;
    REQUIRE(tiab_effective_status(h.p, "000002", nullptr, &st.s) == TIAB_OK);
    CHECK(st.str() == "include");
    Str ex;
    REQUIRE(tiab_llm_executions(h.p, &ex.s) == TIAB_OK);
    CHECK(ex.parsed()["executions"].size() == 1);
    Str cost;
    REQUIRE(tiab_llm_cost(h.p, exec.c_str(), &cost.s) == TIAB_OK);
    CHECK(cost.parsed()["cost_usd"] == r["cost_usd"]);

    testing::write_file(tmp / "truth.csv", "ref_id,label\n000001,0\n000002,1\n000003,1\n");
    Str m;
    REQUIRE(tiab_project_metrics(h.p, (tmp / "truth.csv").c_str(), "llm", &m.s) == TIAB_OK);
    CHECK(m.parsed()["tp"] == 2);
    CHECK(m.parsed()["tn"] == 1);
  }

  TEST_CASE("evaluation entry points") {
    TempDir tmp;
    testing::write_file(tmp / "truth.csv", "ref_id,label\n1,1\n2,0\n3,1\n4,0\n");
    testing::write_file(tmp / "pred.csv", "ref_id,score\n1,0.9\n2,0.7\n3,0.2\n4,0.1\n");
    Str m;
    REQUIRE(tiab_eval_metrics((tmp / "truth.csv").c_str(), (tmp / "pred.csv").c_str(), 0.5, &m.s) == TIAB_OK);
    const auto j = m.parsed();
    CHECK(j["tp"] == 1);
    CHECK(j["fp"] == 1);
    CHECK(j["fn"] == 1);
    CHECK(j["sensitivity"] == 0.5);
    CHECK(j["text"].get<std::string>().find("sensitivity") != std::string::npos);
    Str missing;
    CHECK(tiab_eval_metrics((tmp / "none.csv").c_str(), (tmp / "pred.csv").c_str(), 0.5, &missing.s) == TIAB_E_IO);
    testing::write_file(tmp / "nolabel.csv", "ref_id,guess\n1,1\n");
    Str schema;
    CHECK(tiab_eval_metrics((tmp / "truth.csv").c_str(), (tmp / "nolabel.csv").c_str(), 0.5, &schema.s) ==
          TIAB_E_SCHEMA);

    testing::write_file(tmp / "a.csv", "rank,ref_id\n1,a\n2,b\n3,c\n");
    testing::write_file(tmp / "b.csv", "rank,ref_id\n1,b\n2,d\n3,a\n");
    Str ov;
    REQUIRE(tiab_eval_overlap((tmp / "a.csv").c_str(), (tmp / "b.csv").c_str(), 2, &ov.s) == TIAB_OK);
    CHECK(ov.parsed()["overlap"] == 0.5);
  }

  TEST_CASE("key store round trip") {
    CHECK(tiab_key_set("capi-test", "s3cret") == TIAB_OK);
    Str names;
    REQUIRE(tiab_key_list(&names.s) == TIAB_OK);
    const auto list = names.parsed()["names"];
    CHECK(std::find(list.begin(), list.end(), "capi-test") != list.end());
    CHECK(tiab_key_remove("capi-test") == TIAB_OK);
    CHECK(tiab_key_remove("capi-test") == TIAB_E_NOT_FOUND);
  }

  TEST_CASE("service start and stop") {
    TempDir tmp;
    {
      Handle h;
      REQUIRE(tiab_project_create((tmp / "p").c_str(), &h.p) == TIAB_OK);
    }
    tiab_service* svc = nullptr;
    int port = 0;
    REQUIRE(tiab_service_start((tmp / "p").c_str(), R"({"port":0})", &svc, &port) == TIAB_OK);
    CHECK(port > 0);
    tiab_service_stop(svc);
    tiab_service_wait(svc);
    tiab_service_free(svc);
    tiab_service* bad = nullptr;
    CHECK(tiab_service_start((tmp / "p").c_str(), R"({"provider":"nonsense"})", &bad, &port) == TIAB_E_VALIDATION);
  }
}
