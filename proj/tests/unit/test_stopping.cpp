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

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "testing.hpp"
#include "tiab/clock.hpp"
#include "tiab/error.hpp"
#include "tiab/stopping.hpp"
#include "tiab/store.hpp"

using namespace tiab;
using namespace tiab::stopping;
using testing::TempDir;

namespace {

Trajectory traj(const std::string& s) {
  Trajectory t;
  for (char c : s) t.push_back(c == 'R');
  return t;
}

}  // namespace

TEST_SUITE("stopping") {
  TEST_CASE("consecutive rule") {
    CHECK(consecutive_stop(traj("RII"), 2));
    CHECK_FALSE(consecutive_stop(traj("IIR"), 2));
    CHECK(consecutive_stop(Trajectory(50, false), 50));
    CHECK(trailing_irrelevant_run(traj("RIRIII")) == 3);
    Trajectory t = traj("RRII");
    bool was = false;
    for (int i = 0; i < 10; ++i) {
      const bool now = consecutive_stop(t, 4);
      CHECK((!was || now));
      was = now;
      t.push_back(false);
    }
  }

  TEST_CASE("hypergeometric examples") {
    CHECK(hypergeom_cdf(0, 10, 0, 4) == 1.0);
    CHECK(hypergeom_cdf(5, 10, 5, 5) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(hypergeom_cdf(0, 10, 5, 3) == doctest::Approx(10.0 / 120.0).epsilon(1e-14));
    CHECK(std::exp(hypergeom_log_pmf(1, 10, 5, 3)) == doctest::Approx(50.0 / 120.0).epsilon(1e-13));
    CHECK(std::isinf(hypergeom_log_pmf(4, 10, 5, 3)));
    CHECK_ERROR_CODE(hypergeom_cdf(0, 10, 11, 3), ErrorCode::validation);
    CHECK_ERROR_CODE(hypergeom_cdf(0, 10, 5, 11), ErrorCode::validation);
    CHECK_ERROR_CODE(hypergeom_cdf(0, -1, 0, 0), ErrorCode::validation);
  }

  TEST_CASE("hypergeometric CDF matches the exact oracle for small pools") {
    const oracle::Binomials c(60);
    double worst = 0;
    for (int pool = 0; pool <= 60; ++pool) {
      for (int succ = 0; succ <= pool; ++succ) {
        for (int draws = 0; draws <= pool; ++draws) {
          const auto fast = hypergeom_cdf_table(pool, succ, draws);
          const auto exact = oracle::hypergeom_cdf_exact(c, pool, succ, draws);
          REQUIRE(fast.size() == exact.size());
          for (std::size_t k = 0; k < fast.size(); ++k) {
            worst = std::max(worst, static_cast<double>(std::abs(static_cast<long double>(fast[k]) - exact[k])));
          }
        }
      }
    }
    CHECK(worst < 1e-12);
    // Spot checks of the single-value entry point.
    CHECK(std::abs(hypergeom_cdf(3, 60, 20, 25) -
                   static_cast<double>(oracle::hypergeom_cdf_exact(c, 60, 20, 25)[3])) < 1e-12);
    CHECK(hypergeom_cdf(-1, 60, 20, 25) == 0.0);
    CHECK(hypergeom_cdf(99, 60, 20, 25) == 1.0);
  }

  TEST_CASE("statistical rule worked example") {
    const auto r = statistical_stop_counts(19, 500, 100, 1000, 0.95, 0.95);
    CHECK(r.null_total == 21);
    CHECK(r.remaining == 2);
    CHECK(r.pool == 600);
    const double exact = (500.0 / 600.0) * (499.0 / 599.0);
    CHECK(r.p_value == doctest::Approx(exact).epsilon(1e-12));
    CHECK_FALSE(r.stop);
  }

  TEST_CASE("statistical rule edge cases and monotonicity") {
    Trajectory t = traj("RRR");
    auto r = statistical_stop(t, 100, 0.95, 0.95);
    CHECK(r.window == 0);
    CHECK(r.p_value == 1.0);
    CHECK_FALSE(r.stop);
    r = statistical_stop(Trajectory(30, false), 100, 0.95, 0.95);
    CHECK(r.p_value == 1.0);
    CHECK_FALSE(r.stop);
    CHECK_ERROR_CODE(statistical_stop({}, 100, 0.95, 0.95), ErrorCode::validation);
    for (long rel = 1; rel < 40; ++rel) CHECK(statistical_stop_counts(rel, 100, 10, 1000, 0.95, 0.95).remaining >= 1);
    double prev = 1.0;
    for (long w = 0; w <= 400; w += 10) {
      const auto s = statistical_stop_counts(20, 100 + w, w, 520, 0.95, 0.95);
      CHECK(s.p_value <= prev + 1e-15);
      prev = s.p_value;
    }
    CHECK(prev < 0.05);
  }

  TEST_CASE("replay harness") {
    std::mt19937_64 rng(9);
    Trajectory labels(300, false);
    for (int i = 0; i < 300; ++i) labels[static_cast<std::size_t>(i)] = (rng() % 10) == 0;
    StoppingConfig cfg;
    cfg.rule = Rule::consecutive;
    cfg.n_consecutive = 301;
    auto res = simulate_until_stop(labels, cfg);
    CHECK(res.screened == 300);
    CHECK(res.recall == 1.0);
    CHECK_FALSE(res.stopped_by_rule);
    cfg.rule = Rule::statistical;
    res = simulate_until_stop(labels, cfg);
    CHECK(res.screened <= 300);
    std::sort(labels.begin(), labels.end(), std::greater<>());
    res = simulate_until_stop(labels, cfg);
    CHECK(res.stopped_by_rule);
    CHECK(res.recall == 1.0);
    CHECK(res.screened < 300);
  }

  TEST_CASE("active-learning replay terminates with full bookkeeping") {
    std::vector<std::string> texts;
    std::vector<bool> truth;
    for (int i = 0; i < 120; ++i) {
      const bool rel = i % 8 == 3;
      texts.push_back(rel ? "sepsis fluid trial " + std::to_string(i % 5) : "unrelated topic number " + std::to_string(i));
      truth.push_back(rel);
    }
    StoppingConfig cfg;
    cfg.rule = Rule::statistical;
    std::vector<std::size_t> order;
    const auto res = simulate_active_learning(texts, truth, cfg, {}, &order);
    CHECK(res.total_relevant == 15);
    CHECK(res.total_records == 120);
    CHECK(order.size() == static_cast<std::size_t>(res.screened));
    CHECK(res.recall == 1.0);
  }

  TEST_CASE("trajectory and report from a project") {
    TempDir tmp;
    ManualClock clock;
    auto p = Project::create(tmp / "p", {&clock});
    std::vector<Record> recs(6);
    for (int i = 0; i < 6; ++i) {
      recs[static_cast<std::size_t>(i)].title = "r" + std::to_string(i);
      recs[static_cast<std::size_t>(i)].dedup_key = "title:r" + std::to_string(i);
      recs[static_cast<std::size_t>(i)].imported_by = "t";
    }
    p.append_records(recs);
    auto put = [&](const char* ref, Verdict v, const char* who = "a@x") {
      Decision d;
      d.ref_id = ref;
      d.reviewer_id = who;
      d.decision = v;
      p.append_decision(d);
      clock.advance(std::chrono::seconds(1));
    };
    put("000003", Verdict::include);
    put("000001", Verdict::exclude);
    put("000002", Verdict::exclude);
    put("000003", Verdict::exclude);  // changed mind, position stays
    put("000004", Verdict::include, "b@x");
    const auto t = trajectory_from_snapshot(p.snapshot());
    CHECK(t == traj("IIIR"));
    CHECK(trajectory_from_snapshot(p.snapshot(), "a@x") == traj("III"));
    StoppingConfig cfg;
    cfg.n_consecutive = 3;
    auto rep = evaluate(traj("RIII"), 6, cfg);
    CHECK(rep.stop);
    CHECK(rep.recommendation == "stop");
    CHECK(rep.run_length == 3);
    CHECK_FALSE(rep.p_value.has_value());
    cfg.rule = Rule::statistical;
    rep = evaluate(traj("RIII"), 6, cfg);
    REQUIRE(rep.p_value.has_value());
    CHECK(rep.recommendation == (rep.stop ? "stop" : "continue"));
  }
}
