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

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tiab/store.hpp"

// Stopping rules for the active-learning loop. A trajectory is the list of
// labels in the order they were screened (true = relevant).
namespace tiab::stopping {

using Trajectory = std::vector<bool>;

/// Length of the trailing run of irrelevant labels.
long trailing_irrelevant_run(const Trajectory& traj) noexcept;

bool consecutive_stop(const Trajectory& traj, long n_consecutive) noexcept;

/// log P(X = k) for X ~ Hypergeometric(pool, successes, draws), via lgamma.
/// Returns -inf outside the support.
double hypergeom_log_pmf(long k, long pool, long successes, long draws);

/// P(X <= k). Throws Error(validation) unless 0 <= successes <= pool and
/// 0 <= draws <= pool.
double hypergeom_cdf(long k, long pool, long successes, long draws);

/// P(X <= k) for every k in [0, min(successes, draws)] in one pass.
std::vector<double> hypergeom_cdf_table(long pool, long successes, long draws);

struct StatisticalResult {
  bool stop = false;
  double p_value = 1.0;
  long relevant_found = 0;   // r
  long screened = 0;         // S
  long window = 0;           // w, trailing irrelevant run
  long null_total = 0;       // R0 = floor(r / tau) + 1
  long remaining = 0;        // K = R0 - r
  long pool = 0;             // N - (S - w)
};

/// One-sided hypergeometric test that fewer than `target_recall` of the
/// relevant records have been found. Stops iff p < 1 - confidence.
/// Throws Error(validation) on an empty trajectory or invalid parameters.
StatisticalResult statistical_stop(const Trajectory& traj, long total_records, double target_recall,
                                   double confidence);

/// Same test from summary counts: r relevant among `screened`, trailing
/// irrelevant run `window`.
StatisticalResult statistical_stop_counts(long relevant_found, long screened, long window, long total_records,
                                          double target_recall, double confidence);

enum class Rule { consecutive, statistical };

std::string_view to_string(Rule r) noexcept;
std::optional<Rule> parse_rule(std::string_view s) noexcept;

struct StoppingConfig {
  Rule rule = Rule::consecutive;
  long n_consecutive = 50;
  double target_recall = 0.95;
  double confidence = 0.95;
};

StoppingConfig config_from_snapshot(const Snapshot& snapshot);

struct StopReport {
  Rule rule = Rule::consecutive;
  bool stop = false;
  std::optional<double> p_value;  // statistical rule only
  long run_length = 0;
  long screened = 0;
  long relevant_found = 0;
  long total_records = 0;
  std::string recommendation;
};

StopReport evaluate(const Trajectory& traj, long total_records, const StoppingConfig& config);

/// Records in the order they were first decided by a human (timestamp,
/// then decision_id). The label is the record's current human status:
/// include or conflict counts as relevant, exclude and maybe do not.
Trajectory trajectory_from_snapshot(const Snapshot& snapshot, const std::optional<std::string>& reviewer = std::nullopt);

// ---------------------------------------------------------------------------
// Replay harness.

struct SimulationResult {
  double recall = 0.0;
  long screened = 0;
  long relevant_found = 0;
  long total_relevant = 0;
  long total_records = 0;
  bool stopped_by_rule = false;
  std::optional<double> p_value;  // at the stop point, statistical rule
};

/// Screens `labels_in_order` from the front, applying the rule after every
/// label. Stops at the first positive signal or at exhaustion.
SimulationResult simulate_until_stop(const Trajectory& labels_in_order, const StoppingConfig& config);

struct ActiveLearningOptions {
  double alpha = 3.822;
  long retrain_every = 1;
};

/// Active-learning replay: import order until both classes are labeled,
/// then certainty order from a ranker retrained every `retrain_every`
/// labels. `texts` and `truth` are parallel; ids are the positions.
SimulationResult simulate_active_learning(const std::vector<std::string>& texts, const std::vector<bool>& truth,
                                          const StoppingConfig& config, const ActiveLearningOptions& options = {},
                                          std::vector<std::size_t>* order_out = nullptr);

}  // namespace tiab::stopping
