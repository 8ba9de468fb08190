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

#include <chrono>
#include <functional>
#include <optional>
#include <stop_token>
#include <string>
#include <vector>

#include "tiab/judgment.hpp"
#include "tiab/prompt.hpp"
#include "tiab/provider.hpp"
#include "tiab/store.hpp"

namespace tiab::llm {

struct BatchParams {
  std::string model_name = "gemini-3-flash-preview";
  double temperature = 1.0;
  double top_p = 0.95;
  ThinkingLevel thinking_level = ThinkingLevel::low;
  double threshold = 0.5;
  ScreeningPrompt prompt;
  long requests_per_minute = 60;
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{1000};
  int concurrency = 1;
  /// Records to screen; empty means every record in the project.
  std::vector<std::string> ref_ids;
};

/// Model parameters, threshold and prompt from the project's llm.* keys.
/// Throws Error(validation) when llm.prompt is empty.
BatchParams params_from_config(const Snapshot& snapshot);

struct BatchProgress {
  long done = 0;
  long total = 0;
};

struct BatchOutcome {
  ExecutionLog execution;
  long failed_count = 0;
  long skipped_count = 0;   // already judged before this run (resume)
  long requests_sent = 0;
};

struct BatchHooks {
  Clock* clock = nullptr;  // rate limiting and backoff; defaults to the project clock
  std::function<void(const BatchProgress&)> on_progress;
  std::stop_token stop;
};

/// Screens `params.ref_ids` (or all records) in a new execution. Writes the
/// execution row first, one decision per record as it completes, and a
/// superseding execution row with the final counts.
BatchOutcome run_batch(Project& project, Provider& provider, const BatchParams& params, const BatchHooks& hooks = {});

/// Continues an interrupted execution with its logged parameters, skipping
/// records that already have a judgment under it.
BatchOutcome resume_batch(Project& project, Provider& provider, std::string_view execution_id,
                          const BatchParams& runtime, const BatchHooks& hooks = {});

/// Latest judgment per ref_id stored under an execution's reviewer.
std::map<std::string, LlmJudgment> judgments_for_execution(const Snapshot& snapshot, std::string_view execution_id);

struct ThresholdCounts {
  long include_count = 0;
  long exclude_count = 0;
  long judged_count = 0;
};

/// Counts of stored judgments with probability >= t and < t. Pure read.
ThresholdCounts threshold_preview(const Snapshot& snapshot, std::string_view execution_id, double t);
ThresholdCounts threshold_preview(const Project& project, std::string_view execution_id, double t);

/// Appends a superseding decision for every judged record at threshold t,
/// updates the execution's threshold and counts, marks it confirmed and
/// makes it the active execution.
ExecutionLog confirm_threshold(Project& project, std::string_view execution_id, double t);

struct Prices {
  double input_per_million = 0.50;
  double output_per_million = 3.00;  // thinking tokens bill at this rate
};

double estimate_cost(const TokenUsage& usage, const Prices& prices = {});
TokenUsage usage_for_execution(const Snapshot& snapshot, std::string_view execution_id);

/// Optional single refinement pass: the model rewrites the criteria, the
/// template is re-rendered around them and a prompt_generation row logged.
ScreeningPrompt refine_prompt(Project& project, Provider& provider, std::string_view protocol_text,
                              const BatchParams& params, std::string* execution_id_out = nullptr);

}  // namespace tiab::llm
