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

#include "tiab/stopping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "tiab/error.hpp"

namespace tiab::stopping {

long trailing_irrelevant_run(const Trajectory& traj) noexcept {
  long run = 0;
  for (auto it = traj.rbegin(); it != traj.rend() && !*it; ++it) ++run;
  return run;
}

bool consecutive_stop(const Trajectory& traj, long n_consecutive) noexcept {
  return trailing_irrelevant_run(traj) >= n_consecutive;
}

namespace {

void check_domain(long pool, long successes, long draws) {
  if (pool < 0 || successes < 0 || successes > pool || draws < 0 || draws > pool) {
    throw Error(ErrorCode::validation, "hypergeometric parameters outside their domain: pool=" + std::to_string(pool) +
                                           " successes=" + std::to_string(successes) +
                                           " draws=" + std::to_string(draws));
  }
}

double log_choose(long n, long k) {
  return std::lgamma(static_cast<double>(n) + 1) - std::lgamma(static_cast<double>(k) + 1) -
         std::lgamma(static_cast<double>(n - k) + 1);
}

// Unnormalized pmf over the support [lo, hi], anchored at 1 on the mode and
// extended outwards by the exact term ratio. Normalizing by the full sum
// keeps relative error near machine precision without any big factorials.
std::vector<double> relative_pmf(long pool, long successes, long draws, long lo, long hi) {
  const double N = static_cast<double>(pool);
  const double K = static_cast<double>(successes);
  const double n = static_cast<double>(draws);
  long mode = static_cast<long>(std::floor((n + 1) * (K + 1) / (N + 2)));
  mode = std::clamp(mode, lo, hi);
  std::vector<double> rel(static_cast<std::size_t>(hi - lo + 1), 0.0);
  rel[static_cast<std::size_t>(mode - lo)] = 1.0;
  for (long x = mode + 1; x <= hi; ++x) {
    const double xd = static_cast<double>(x);
    const double ratio = ((K - xd + 1) * (n - xd + 1)) / (xd * (N - K - n + xd));
    rel[static_cast<std::size_t>(x - lo)] = rel[static_cast<std::size_t>(x - 1 - lo)] * ratio;
  }
  for (long x = mode - 1; x >= lo; --x) {
    const double xd = static_cast<double>(x);
    const double ratio = ((xd + 1) * (N - K - n + xd + 1)) / ((K - xd) * (n - xd));
    rel[static_cast<std::size_t>(x - lo)] = rel[static_cast<std::size_t>(x + 1 - lo)] * ratio;
  }
  return rel;
}

}  // namespace

double hypergeom_log_pmf(long k, long pool, long successes, long draws) {
  check_domain(pool, successes, draws);
  const long lo = std::max(0L, draws - (pool - successes));
  const long hi = std::min(draws, successes);
  if (k < lo || k > hi) return -std::numeric_limits<double>::infinity();
  return log_choose(successes, k) + log_choose(pool - successes, draws - k) - log_choose(pool, draws);
}

std::vector<double> hypergeom_cdf_table(long pool, long successes, long draws) {
  check_domain(pool, successes, draws);
  const long lo = std::max(0L, draws - (pool - successes));
  const long hi = std::min(draws, successes);
  std::vector<double> cdf(static_cast<std::size_t>(hi + 1), 0.0);
  const auto rel = relative_pmf(pool, successes, draws, lo, hi);
  double total = 0.0;
  for (double v : rel) total += v;
  // Accumulate the lower half from below and the upper half from above so
  // that both tails keep full relative precision.
  const long mid = lo + (hi - lo) / 2;
  double acc = 0.0;
  for (long x = lo; x <= mid; ++x) {
    acc += rel[static_cast<std::size_t>(x - lo)];
    cdf[static_cast<std::size_t>(x)] = acc / total;
  }
  double upper = 0.0;
  for (long x = hi; x > mid; --x) {
    cdf[static_cast<std::size_t>(x)] = 1.0 - upper / total;
    upper += rel[static_cast<std::size_t>(x - lo)];
  }
  return cdf;
}

double hypergeom_cdf(long k, long pool, long successes, long draws) {
  check_domain(pool, successes, draws);
  const long lo = std::max(0L, draws - (pool - successes));
  const long hi = std::min(draws, successes);
  if (k < lo) return 0.0;
  if (k >= hi) return 1.0;
  return hypergeom_cdf_table(pool, successes, draws)[static_cast<std::size_t>(k)];
}

namespace {

void check_rule_parameters(double target_recall, double confidence) {
  if (!(target_recall > 0.0 && target_recall <= 1.0)) {
    throw Error(ErrorCode::validation, "target recall must lie in (0, 1]");
  }
  if (!(confidence > 0.0 && confidence < 1.0)) throw Error(ErrorCode::validation, "confidence must lie in (0, 1)");
}

}  // namespace

StatisticalResult statistical_stop_counts(long r, long screened, long w, long total_records, double target_recall,
                                          double confidence) {
  check_rule_parameters(target_recall, confidence);
  if (r < 0 || w < 0 || w > screened || r > screened - w || total_records < screened) {
    throw Error(ErrorCode::validation, "inconsistent screening counts");
  }
  StatisticalResult res;
  res.relevant_found = r;
  res.screened = screened;
  res.window = w;
  if (r == 0 || w == 0) return res;
  res.null_total = static_cast<long>(std::floor(static_cast<double>(r) / target_recall + 1e-9)) + 1;
  res.remaining = res.null_total - r;
  res.pool = total_records - (screened - w);
  res.p_value = res.remaining > res.pool ? 0.0 : hypergeom_cdf(0, res.pool, res.remaining, w);
  res.stop = res.p_value < 1.0 - confidence;
  return res;
}

StatisticalResult statistical_stop(const Trajectory& traj, long total_records, double target_recall,
                                   double confidence) {
  if (traj.empty()) throw Error(ErrorCode::validation, "statistical stopping needs a non-empty trajectory");
  const long screened = static_cast<long>(traj.size());
  const long r = static_cast<long>(std::count(traj.begin(), traj.end(), true));
  return statistical_stop_counts(r, screened, trailing_irrelevant_run(traj), total_records, target_recall, confidence);
}

std::string_view to_string(Rule r) noexcept { return r == Rule::consecutive ? "consecutive" : "statistical"; }

std::optional<Rule> parse_rule(std::string_view s) noexcept {
  if (s == "consecutive") return Rule::consecutive;
  if (s == "statistical") return Rule::statistical;
  return std::nullopt;
}

StoppingConfig config_from_snapshot(const Snapshot& snapshot) {
  StoppingConfig c;
  const auto rule = parse_rule(snapshot.config_value("stop.rule"));
  if (!rule) throw Error(ErrorCode::validation, "unknown stop.rule value");
  c.rule = *rule;
  c.n_consecutive = std::stol(snapshot.config_value("stop.n_consecutive"));
  c.target_recall = std::stod(snapshot.config_value("stop.target_recall"));
  c.confidence = std::stod(snapshot.config_value("stop.confidence"));
  return c;
}

StopReport evaluate(const Trajectory& traj, long total_records, const StoppingConfig& config) {
  StopReport rep;
  rep.rule = config.rule;
  rep.run_length = trailing_irrelevant_run(traj);
  rep.screened = static_cast<long>(traj.size());
  rep.relevant_found = static_cast<long>(std::count(traj.begin(), traj.end(), true));
  rep.total_records = total_records;
  if (config.rule == Rule::consecutive) {
    if (config.n_consecutive < 1) throw Error(ErrorCode::validation, "n_consecutive must be positive");
    rep.stop = consecutive_stop(traj, config.n_consecutive);
  } else if (!traj.empty()) {
    const auto res = statistical_stop(traj, total_records, config.target_recall, config.confidence);
    rep.stop = res.stop;
    rep.p_value = res.p_value;
  } else {
    check_rule_parameters(config.target_recall, config.confidence);
    rep.p_value = 1.0;
  }
  rep.recommendation = rep.stop ? "stop" : "continue";
  return rep;
}

Trajectory trajectory_from_snapshot(const Snapshot& snapshot, const std::optional<std::string>& reviewer) {
  StatusScope scope;
  scope.humans_only = true;
  scope.reviewer = reviewer;
  const auto statuses = snapshot.effective_statuses(scope);

  std::vector<const Decision*> rows;
  for (const auto& d : snapshot.decisions) {
    if (is_llm_reviewer(d.reviewer_id) || d.decision == Verdict::pending) continue;
    if (reviewer && d.reviewer_id != *reviewer) continue;
    rows.push_back(&d);
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Decision* a, const Decision* b) { return decision_before(*a, *b); });

  Trajectory traj;
  std::map<std::string, bool, std::less<>> seen;
  for (const Decision* d : rows) {
    if (seen.contains(d->ref_id)) continue;
    seen.emplace(d->ref_id, true);
    auto it = statuses.find(d->ref_id);
    if (it == statuses.end() || it->second == Status::pending) continue;
    traj.push_back(it->second != Status::exclude);
  }
  return traj;
}

}  // namespace tiab::stopping
