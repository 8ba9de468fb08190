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

#include "tiab/batch.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <json.hpp>
#include <set>
#include <thread>

#include "tiab/error.hpp"
#include "tiab/rate_limiter.hpp"
#include "tiab/text.hpp"

namespace tiab::llm {

using nlohmann::json;

BatchParams params_from_config(const Snapshot& snapshot) {
  BatchParams p;
  p.model_name = snapshot.config_value("llm.model");
  p.temperature = std::stod(snapshot.config_value("llm.temperature"));
  p.top_p = std::stod(snapshot.config_value("llm.top_p"));
  const auto level = parse_thinking_level(snapshot.config_value("llm.thinking_level"));
  if (!level) throw Error(ErrorCode::validation, "unknown llm.thinking_level");
  p.thinking_level = *level;
  p.threshold = std::stod(snapshot.config_value("llm.threshold"));
  const std::string criteria = snapshot.config_value("llm.prompt");
  if (text::trim(criteria).empty()) {
    throw Error(ErrorCode::validation, "llm.prompt is empty; set the eligibility criteria first");
  }
  p.prompt = build_screening_prompt(criteria, snapshot.config_value("llm.output_language"));
  return p;
}

namespace {

// Latest row per ref_id for one reviewer.
std::map<std::string, const Decision*> latest_for_reviewer(const Snapshot& snapshot, const std::string& reviewer) {
  std::map<std::string, const Decision*> latest;
  for (const auto& d : snapshot.decisions) {
    if (d.reviewer_id != reviewer) continue;
    auto& slot = latest[d.ref_id];
    if (!slot || decision_before(*slot, d)) slot = &d;
  }
  return latest;
}

const ExecutionLog& require_batch_execution(const Snapshot& snapshot, std::string_view execution_id) {
  const ExecutionLog* e = snapshot.execution(execution_id);
  if (!e) throw Error(ErrorCode::not_found, "unknown execution '" + std::string(execution_id) + "'");
  if (e->execution_type != ExecutionType::batch_screening) {
    throw Error(ErrorCode::validation, "execution '" + std::string(execution_id) + "' is not a batch screening run");
  }
  return *e;
}

void check_threshold(double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw Error(ErrorCode::validation, "threshold must lie in [0, 1]");
}

std::string verdict_reason(double p, double t) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "LLM inclusion probability %.3f %s threshold %.3f", p, p >= t ? ">=" : "<", t);
  return buf;
}

std::string queued_note(std::string_view ref_id) { return json{{"ref_id", ref_id}, {"queued", true}}.dump(); }

struct RunContext {
  Project& project;
  Provider& provider;
  const ExecutionLog& execution;
  const BatchParams& runtime;
  const BatchHooks& hooks;
  Clock& clock;
};

BatchOutcome screen_targets(RunContext& ctx, const std::vector<std::string>& targets) {
  const std::string reviewer = llm_reviewer_id(ctx.execution.execution_id);
  const Snapshot snap = ctx.project.snapshot();

  BatchOutcome out;
  std::vector<const Record*> work;
  {
    const auto latest = latest_for_reviewer(snap, reviewer);
    for (const auto& ref_id : targets) {
      auto it = latest.find(ref_id);
      if (it != latest.end() && it->second->decision != Verdict::pending) {
        ++out.skipped_count;
        continue;
      }
      const Record* r = snap.record(ref_id);
      if (!r) throw Error(ErrorCode::not_found, "unknown ref_id '" + ref_id + "'");
      work.push_back(r);
    }
  }

  if (ctx.runtime.max_retries < 0) throw Error(ErrorCode::validation, "max_retries must be non-negative");
  RateLimiter limiter(ctx.runtime.requests_per_minute, ctx.clock);
  std::atomic<std::size_t> next{0};
  std::atomic<long> done{0};
  std::atomic<long> sent{0};
  std::atomic<bool> halt{false};
  std::mutex err_mu;
  std::exception_ptr first_error;
  const long total = static_cast<long>(work.size());

  const auto screen_one = [&](const Record& r) {
    ChatRequest req;
    req.model = ctx.execution.model_name;
    req.temperature = ctx.execution.temperature;
    req.top_p = ctx.execution.top_p;
    req.thinking_level = ctx.execution.thinking_level;
    req.system_prompt = ctx.execution.prompt;
    req.document_text = build_corpus_text(r);
    const RequestContext rc{r.ref_id};

    Decision d;
    d.ref_id = r.ref_id;
    d.reviewer_id = reviewer;
    for (int attempt = 0;; ++attempt) {
      try {
        limiter.acquire();
        ++sent;
        const ChatResponse resp = ctx.provider.complete(req, rc);
        LlmJudgment j = parse_judgment(resp.content, req.document_text);
        j.ref_id = r.ref_id;
        j.usage = resp.usage;
        const double t = ctx.execution.threshold;
        d.decision = j.probability >= t ? Verdict::include : Verdict::exclude;
        d.reason = verdict_reason(j.probability, t);
        d.note = judgment_to_note(j);
        break;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::provider && e.code() != ErrorCode::parse) throw;
        if (attempt >= ctx.runtime.max_retries) {
          d.decision = Verdict::pending;
          d.reason = "LLM screening failed";
          d.note = failure_note(r.ref_id, e.what(), attempt + 1);
          break;
        }
        ctx.clock.sleep_for(ctx.runtime.initial_backoff * (1L << std::min(attempt, 20)));
      }
    }
    ctx.project.append_decision(std::move(d));
  };

  const auto worker = [&] {
    try {
      for (;;) {
        if (halt || ctx.hooks.stop.stop_requested()) return;
        const std::size_t i = next++;
        if (i >= work.size()) return;
        screen_one(*work[i]);
        const long n = ++done;
        if (ctx.hooks.on_progress) ctx.hooks.on_progress({n, total});
      }
    } catch (...) {
      std::lock_guard lock(err_mu);
      if (!first_error) first_error = std::current_exception();
      halt = true;
    }
  };

  const int threads = std::max(1, std::min<int>(ctx.runtime.concurrency, static_cast<int>(std::max<long>(total, 1))));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  if (first_error) std::rethrow_exception(first_error);

  out.requests_sent = sent;
  ExecutionLog e = ctx.execution;
  const Snapshot after = ctx.project.snapshot();
  const auto latest = latest_for_reviewer(after, reviewer);
  e.included_count = e.excluded_count = 0;
  long failed = 0;
  for (const auto& ref_id : targets) {
    auto it = latest.find(ref_id);
    if (it == latest.end()) continue;
    if (it->second->decision == Verdict::include) ++e.included_count;
    else if (it->second->decision == Verdict::exclude) ++e.excluded_count;
    else if (is_failure_note(it->second->note)) ++failed;
  }
  out.failed_count = failed;
  e.timestamp.clear();
  ctx.project.update_execution(e);
  out.execution = *ctx.project.execution(e.execution_id);
  return out;
}

}  // namespace

BatchOutcome run_batch(Project& project, Provider& provider, const BatchParams& params, const BatchHooks& hooks) {
  check_threshold(params.threshold);
  if (text::trim(params.prompt.rendered).empty()) throw Error(ErrorCode::validation, "the screening prompt is empty");
  const Snapshot snap = project.snapshot();

  std::vector<std::string> targets;
  std::set<std::string, std::less<>> seen;
  if (params.ref_ids.empty()) {
    for (const auto& r : snap.records) targets.push_back(r.ref_id);
  } else {
    for (const auto& id : params.ref_ids) {
      if (!snap.record(id)) throw Error(ErrorCode::not_found, "unknown ref_id '" + id + "'");
      if (seen.insert(id).second) targets.push_back(id);
    }
  }
  if (targets.empty()) throw Error(ErrorCode::validation, "nothing to screen: the target scope is empty");

  ExecutionLog e;
  e.execution_id = project.next_execution_id();
  e.execution_type = ExecutionType::batch_screening;
  e.model_name = params.model_name;
  e.temperature = params.temperature;
  e.top_p = params.top_p;
  e.thinking_level = params.thinking_level;
  e.criteria_snapshot = params.prompt.criteria;
  e.prompt = params.prompt.rendered;
  e.threshold = params.threshold;
  e.targeted_count = static_cast<long>(targets.size());
  project.log_execution(e);

  // The scope is recorded as one queued (pending) row per target so an
  // interrupted run can be resumed without the caller restating it.
  std::vector<Decision> queued;
  queued.reserve(targets.size());
  for (const auto& id : targets) {
    Decision d;
    d.ref_id = id;
    d.reviewer_id = llm_reviewer_id(e.execution_id);
    d.decision = Verdict::pending;
    d.reason = "queued for LLM screening";
    d.note = queued_note(id);
    queued.push_back(std::move(d));
  }
  project.append_decisions(std::move(queued));

  const ExecutionLog logged = *project.execution(e.execution_id);
  RunContext ctx{project, provider, logged, params, hooks, hooks.clock ? *hooks.clock : project.clock()};
  return screen_targets(ctx, targets);
}

BatchOutcome resume_batch(Project& project, Provider& provider, std::string_view execution_id,
                          const BatchParams& runtime, const BatchHooks& hooks) {
  const Snapshot snap = project.snapshot();
  const ExecutionLog logged = require_batch_execution(snap, execution_id);
  std::vector<std::string> targets;
  for (const auto& [ref_id, row] : latest_for_reviewer(snap, llm_reviewer_id(execution_id))) targets.push_back(ref_id);
  std::sort(targets.begin(), targets.end(), [](const auto& a, const auto& b) { return id_less(a, b); });
  RunContext ctx{project, provider, logged, runtime, hooks, hooks.clock ? *hooks.clock : project.clock()};
  return screen_targets(ctx, targets);
}

std::map<std::string, LlmJudgment> judgments_for_execution(const Snapshot& snapshot, std::string_view execution_id) {
  std::map<std::string, LlmJudgment> out;
  for (const auto& [ref_id, row] : latest_for_reviewer(snapshot, llm_reviewer_id(execution_id))) {
    if (auto j = judgment_from_note(row->note)) out.emplace(ref_id, std::move(*j));
  }
  return out;
}

ThresholdCounts threshold_preview(const Snapshot& snapshot, std::string_view execution_id, double t) {
  check_threshold(t);
  require_batch_execution(snapshot, execution_id);
  ThresholdCounts c;
  for (const auto& [ref_id, j] : judgments_for_execution(snapshot, execution_id)) {
    ++c.judged_count;
    if (j.probability >= t) ++c.include_count;
    else ++c.exclude_count;
  }
  return c;
}

ThresholdCounts threshold_preview(const Project& project, std::string_view execution_id, double t) {
  return threshold_preview(project.snapshot(), execution_id, t);
}

ExecutionLog confirm_threshold(Project& project, std::string_view execution_id, double t) {
  check_threshold(t);
  const Snapshot snap = project.snapshot();
  ExecutionLog e = require_batch_execution(snap, execution_id);
  const std::string reviewer = llm_reviewer_id(execution_id);

  std::vector<Decision> rows;
  e.included_count = e.excluded_count = 0;
  for (const auto& [ref_id, row] : latest_for_reviewer(snap, reviewer)) {
    const auto j = judgment_from_note(row->note);
    if (!j) continue;
    Decision d;
    d.ref_id = ref_id;
    d.reviewer_id = reviewer;
    d.decision = j->probability >= t ? Verdict::include : Verdict::exclude;
    d.reason = verdict_reason(j->probability, t) + " (confirmed)";
    d.note = row->note;
    ++(d.decision == Verdict::include ? e.included_count : e.excluded_count);
    rows.push_back(std::move(d));
  }
  if (!rows.empty()) project.append_decisions(std::move(rows));
  e.threshold = t;
  e.confirmation_status = Confirmation::confirmed;
  e.active = true;
  project.update_execution(e);
  return *project.execution(execution_id);
}

double estimate_cost(const TokenUsage& usage, const Prices& prices) {
  return static_cast<double>(usage.input_tokens) * prices.input_per_million / 1e6 +
         static_cast<double>(usage.output_tokens + usage.thinking_tokens) * prices.output_per_million / 1e6;
}

TokenUsage usage_for_execution(const Snapshot& snapshot, std::string_view execution_id) {
  require_batch_execution(snapshot, execution_id);
  TokenUsage total;
  for (const auto& [ref_id, j] : judgments_for_execution(snapshot, execution_id)) total += j.usage;
  return total;
}

ScreeningPrompt refine_prompt(Project& project, Provider& provider, std::string_view protocol_text,
                              const BatchParams& params, std::string* execution_id_out) {
  const ScreeningPrompt base = build_screening_prompt(protocol_text, params.prompt.output_language);
  ChatRequest req;
  req.model = params.model_name;
  req.temperature = params.temperature;
  req.top_p = params.top_p;
  req.thinking_level = params.thinking_level;
  req.system_prompt = refinement_instruction(base.output_language);
  req.document_text = base.criteria;

  std::string refined;
  for (int attempt = 0;; ++attempt) {
    try {
      const ChatResponse resp = provider.complete(req, RequestContext{});
      const auto open = resp.content.find('{');
      const auto close = resp.content.rfind('}');
      if (open != std::string::npos && close != std::string::npos && close > open) {
        const json o = json::parse(resp.content.substr(open, close - open + 1), nullptr, false);
        if (!o.is_discarded() && o.is_object() && o.contains("criteria") && o.at("criteria").is_string()) {
          refined = o.at("criteria").get<std::string>();
        }
      }
      if (text::trim(refined).empty()) refined = std::string(text::trim(resp.content));
      if (text::trim(refined).empty()) throw Error(ErrorCode::parse, "empty refinement response");
      break;
    } catch (const Error& e) {
      if ((e.code() != ErrorCode::provider && e.code() != ErrorCode::parse) || attempt >= params.max_retries) throw;
    }
  }
  ScreeningPrompt out = build_screening_prompt(refined, base.output_language);

  ExecutionLog e;
  e.execution_id = project.next_execution_id();
  e.execution_type = ExecutionType::prompt_generation;
  e.model_name = params.model_name;
  e.temperature = params.temperature;
  e.top_p = params.top_p;
  e.thinking_level = params.thinking_level;
  e.criteria_snapshot = base.criteria;
  e.prompt = out.rendered;
  e.threshold = params.threshold;
  project.log_execution(e);
  if (execution_id_out) *execution_id_out = e.execution_id;
  return out;
}

}  // namespace tiab::llm
