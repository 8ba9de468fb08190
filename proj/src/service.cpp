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

#include "tiab/service.hpp"

#include <atomic>
#include <condition_variable>
#include <fstream>
#include <future>
#include <httplib.h>
#include <json.hpp>
#include <mutex>
#include <sstream>
#include <thread>

#include "tiab/batch.hpp"
#include "tiab/eval.hpp"
#include "tiab/highlight.hpp"
#include "tiab/ingest.hpp"
#include "tiab/ranker.hpp"
#include "tiab/stopping.hpp"
#include "tiab/store.hpp"
#include "tiab/text.hpp"
#include "tiab/version.hpp"

namespace tiab {

using nlohmann::json;

int http_status_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::validation:
    case ErrorCode::parse:
    case ErrorCode::encoding:
    case ErrorCode::empty_input:
    case ErrorCode::schema:
    case ErrorCode::cold_start:
    case ErrorCode::undefined:
      return 400;
    case ErrorCode::not_found:
      return 404;
    case ErrorCode::exists:
    case ErrorCode::conflict:
      return 409;
    case ErrorCode::locked:
      return 423;
    case ErrorCode::provider:
      return 502;
    case ErrorCode::io:
    case ErrorCode::internal:
      return 500;
  }
  return 500;
}

namespace {

json record_json(const Record& r) {
  return {{"ref_id", r.ref_id},
          {"title", r.title},
          {"abstract", r.abstract},
          {"year", r.year ? json(*r.year) : json(nullptr)},
          {"authors", r.authors},
          {"journal", r.journal},
          {"volume", r.volume},
          {"issue", r.issue},
          {"pages", r.pages},
          {"issn", r.issn},
          {"doi", r.doi},
          {"pmid", r.pmid},
          {"url", r.url},
          {"source", r.source},
          {"imported_at", r.imported_at},
          {"imported_by", r.imported_by},
          {"dedup_key", r.dedup_key},
          {"source_file", r.source_file},
          {"screening_set", r.screening_set}};
}

json execution_json(const ExecutionLog& e) {
  return {{"execution_id", e.execution_id},
          {"execution_type", to_string(e.execution_type)},
          {"timestamp", e.timestamp},
          {"model_name", e.model_name},
          {"temperature", e.temperature},
          {"top_p", e.top_p},
          {"thinking_level", to_string(e.thinking_level)},
          {"criteria_snapshot", e.criteria_snapshot},
          {"prompt", e.prompt},
          {"threshold", e.threshold},
          {"targeted_count", e.targeted_count},
          {"included_count", e.included_count},
          {"excluded_count", e.excluded_count},
          {"confirmation_status", to_string(e.confirmation_status)},
          {"active", e.active}};
}

json judgment_summary(const llm::LlmJudgment& j) {
  json ev = json::array();
  for (const auto& e : j.evidence) {
    ev.push_back({{"quote", e.quote}, {"start", e.start}, {"end", e.end}, {"valid_offsets", e.valid_offsets}});
  }
  return {{"probability", j.probability}, {"reasons", j.reasons}, {"evidence", std::move(ev)}};
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string query(const httplib::Request& req, const char* name, std::string fallback = {}) {
  return req.has_param(name) ? req.get_param_value(name) : fallback;
}

double parse_double(const std::string& s, const char* what) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (s.empty() || used != s.size()) throw Error(ErrorCode::validation, std::string(what) + " must be a number");
  return v;
}

json parse_body(const httplib::Request& req) {
  json body = json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) throw Error(ErrorCode::parse, "request body must be a JSON object");
  return body;
}

std::string body_string(const json& body, const char* key, bool required) {
  auto it = body.find(key);
  if (it == body.end() || it->is_null()) {
    if (required) throw Error(ErrorCode::validation, std::string("missing field '") + key + "'");
    return {};
  }
  if (!it->is_string()) throw Error(ErrorCode::validation, std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
  send_json(res, {{"error", {{"code", to_string(code)}, {"message", message}}}}, http_status_for(code));
}

constexpr const char* kPlaceholderPage = R"(<!doctype html>
<html lang="en"><head><meta charset="utf-8"><title>tiab-screen</title></head>
<body>
<h1>tiab-screen</h1>
<p>The screening service is running. No web interface is installed; start the service with
<code>--web-root DIR</code> to serve one, or use the JSON API directly:</p>
<ul>
<li>GET /records?status=</li><li>GET /queue?mode=manual|ml</li><li>POST /decisions</li>
<li>GET /conflicts</li><li>GET /stopping</li><li>GET /config, PUT /config/{key}</li>
<li>POST /llm/batch, GET /llm/executions, GET /llm/threshold-preview, POST /llm/confirm</li>
<li>GET /metrics?truth=</li><li>GET /export?format=csv|ris</li>
</ul>
</body></html>
)";

// Background ranking: at most one computation in flight; a request for a
// newer project state cancels the running one.
class RankingWorker {
 public:
  struct Outcome {
    bool cold_start = false;
    ranker::RankedQueue queue;
  };

  std::shared_future<Outcome> request(const Snapshot& snap, const std::optional<std::string>& reviewer) {
    const std::string key = key_of(snap, reviewer);
    std::shared_ptr<Job> old;
    std::shared_future<Outcome> result;
    {
      std::lock_guard lock(mu_);
      if (current_ && current_->key == key) return current_->result;
      auto job = std::make_shared<Job>();
      job->key = key;
      std::promise<Outcome> promise;
      job->result = promise.get_future().share();
      job->thread = std::jthread([snap, reviewer, p = std::move(promise)](std::stop_token stop) mutable {
        try {
          Outcome out;
          try {
            out.queue = ranker::rank_unlabeled(snap, reviewer, stop);
          } catch (const Error& e) {
            if (e.code() != ErrorCode::cold_start) throw;
            out.cold_start = true;
          }
          p.set_value(std::move(out));
        } catch (...) {
          p.set_exception(std::current_exception());
        }
      });
      old = std::exchange(current_, job);
      result = job->result;
    }
    if (old) old->thread.request_stop();
    return result;
  }

  ~RankingWorker() {
    std::lock_guard lock(mu_);
    if (current_) current_->thread.request_stop();
  }

 private:
  struct Job {
    std::string key;
    std::shared_future<Outcome> result;
    std::jthread thread;
  };

  static std::string key_of(const Snapshot& snap, const std::optional<std::string>& reviewer) {
    return std::to_string(snap.records.size()) + "/" + std::to_string(snap.decisions.size()) + "/" +
           reviewer.value_or("*") + "/" + snap.config_value("ranker.alpha") + "/" +
           snap.config_value("ranker.balance");
  }

  std::mutex mu_;
  std::shared_ptr<Job> current_;
};

struct BatchJob {
  std::mutex mu;
  bool running = false;
  long done = 0;
  long total = 0;
  std::string execution_id;
  std::string error;
  std::optional<json> outcome;
  std::jthread thread;
};

}  // namespace

struct Service::Impl {
  std::filesystem::path dir;
  ServiceOptions options;
  std::optional<Project> project;
  bool read_only = false;
  httplib::Server server;
  std::thread listener;
  int port = 0;
  RankingWorker ranking;
  BatchJob batch;

  Impl(const std::filesystem::path& d, ServiceOptions o) : dir(d), options(std::move(o)) {
    StoreOptions so;
    so.clock = options.clock;
    try {
      project.emplace(Project::open(dir, OpenMode::read_write, so));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::locked) throw;
      project.emplace(Project::open(dir, OpenMode::read_only, so));
      read_only = true;
    }
    routes();
  }

  ~Impl() {
    server.stop();
    if (listener.joinable()) listener.join();
    std::jthread t;
    {
      std::lock_guard lock(batch.mu);
      t = std::move(batch.thread);
    }
    if (t.joinable()) {
      t.request_stop();
      t.join();
    }
  }

  template <typename F>
  httplib::Server::Handler wrap(F fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const Error& e) {
        send_error(res, e.code(), e.what());
      } catch (const json::exception& e) {
        send_error(res, ErrorCode::parse, e.what());
      } catch (const std::exception& e) {
        send_error(res, ErrorCode::internal, e.what());
      }
    };
  }

  void require_writable() const {
    if (read_only) throw Error(ErrorCode::locked, "project is locked by another writer; the service is read-only");
  }

  std::optional<std::string> reviewer_param(const httplib::Request& req) const {
    std::string r = query(req, "reviewer");
    if (options.blind && r.empty()) {
      throw Error(ErrorCode::validation, "blind mode: the reviewer parameter is required");
    }
    if (r.empty()) return std::nullopt;
    return r;
  }

  StatusScope scope_for(const Snapshot& snap, const std::optional<std::string>& reviewer) const {
    StatusScope scope = snap.all_reviewers();
    if (reviewer) scope.reviewer = reviewer;
    return scope;
  }

  void routes() {
    server.Get("/records", wrap([this](const httplib::Request& req, httplib::Response& res) {
      const Snapshot snap = project->snapshot();
      const auto reviewer = reviewer_param(req);
      const std::string status = query(req, "status", "all");
      std::optional<Status> wanted;
      if (status != "all") {
        wanted = parse_status(status);
        if (!wanted) throw Error(ErrorCode::validation, "unknown status filter '" + status + "'");
      }
      const std::string set = query(req, "set");
      const auto statuses = snap.effective_statuses(scope_for(snap, reviewer));
      json items = json::array();
      for (const auto& r : snap.records) {
        const Status s = statuses.at(r.ref_id);
        if (wanted && s != *wanted) continue;
        if (!set.empty() && r.screening_set != set) continue;
        json j = record_json(r);
        j["status"] = to_string(s);
        items.push_back(std::move(j));
      }
      const std::size_t count = items.size();
      send_json(res, {{"records", std::move(items)}, {"count", count}});
    }));

    server.Get("/queue", wrap([this](const httplib::Request& req, httplib::Response& res) { queue(req, res); }));

    server.Post("/decisions", wrap([this](const httplib::Request& req, httplib::Response& res) {
      require_writable();
      const json body = parse_body(req);
      Decision d;
      d.ref_id = body_string(body, "ref_id", true);
      d.reviewer_id = body_string(body, "reviewer_id", true);
      if (is_llm_reviewer(d.reviewer_id)) {
        throw Error(ErrorCode::validation, "LLM decisions are written by batch executions only");
      }
      const std::string verdict = body_string(body, "decision", true);
      const auto v = parse_verdict(verdict);
      if (!v) throw Error(ErrorCode::validation, "decision must be include, exclude, maybe or pending");
      d.decision = *v;
      d.reason = body_string(body, "reason", false);
      d.context_url = body_string(body, "context_url", false);
      const std::string id = project->append_decision(std::move(d));
      // Restart background ranking on the new state.
      ranking.request(project->snapshot(), std::nullopt);
      send_json(res, {{"decision_id", id}}, 201);
    }));

    server.Get("/conflicts", wrap([this](const httplib::Request&, httplib::Response& res) {
      send_json(res, {{"conflicts", project->detect_conflicts()}});
    }));

    server.Get("/stopping", wrap([this](const httplib::Request& req, httplib::Response& res) {
      const Snapshot snap = project->snapshot();
      const auto reviewer = reviewer_param(req);
      const auto traj = stopping::trajectory_from_snapshot(snap, reviewer);
      const auto rep = stopping::evaluate(traj, static_cast<long>(snap.records.size()),
                                          stopping::config_from_snapshot(snap));
      send_json(res, {{"rule", stopping::to_string(rep.rule)},
                      {"stop", rep.stop},
                      {"p_value", optional_number(rep.p_value)},
                      {"run_length", rep.run_length},
                      {"screened", rep.screened},
                      {"relevant_found", rep.relevant_found},
                      {"total_records", rep.total_records},
                      {"recommendation", rep.recommendation}});
    }));

    server.Get("/config", wrap([this](const httplib::Request&, httplib::Response& res) {
      const Snapshot snap = project->snapshot();
      json cfg = json::object();
      for (const auto& k : recognized_config_keys()) cfg[std::string(k.key)] = snap.config_value(k.key);
      send_json(res, {{"config", std::move(cfg)}});
    }));

    server.Put(R"(/config/([A-Za-z0-9_.\-]+))", wrap([this](const httplib::Request& req, httplib::Response& res) {
      require_writable();
      const std::string key = req.matches[1];
      const json body = parse_body(req);
      const std::string value = body_string(body, "value", true);
      project->config_set(key, value);
      send_json(res, {{"key", key}, {"value", value}});
    }));

    server.Post("/llm/batch", wrap([this](const httplib::Request& req, httplib::Response& res) { start_batch(req, res); }));

    server.Get("/llm/batch", wrap([this](const httplib::Request&, httplib::Response& res) {
      std::lock_guard lock(batch.mu);
      json j = {{"running", batch.running},
                {"done", batch.done},
                {"total", batch.total},
                {"execution_id", batch.execution_id},
                {"error", batch.error}};
      if (batch.outcome) j["outcome"] = *batch.outcome;
      send_json(res, j);
    }));

    server.Get("/llm/executions", wrap([this](const httplib::Request&, httplib::Response& res) {
      json items = json::array();
      for (const auto& e : project->executions()) items.push_back(execution_json(e));
      send_json(res, {{"executions", std::move(items)}});
    }));

    server.Get("/llm/threshold-preview", wrap([this](const httplib::Request& req, httplib::Response& res) {
      const std::string exec = query(req, "execution");
      if (exec.empty()) throw Error(ErrorCode::validation, "missing parameter 'execution'");
      const double t = parse_double(query(req, "t"), "t");
      const auto c = llm::threshold_preview(*project, exec, t);
      send_json(res, {{"execution_id", exec},
                      {"t", t},
                      {"include_count", c.include_count},
                      {"exclude_count", c.exclude_count},
                      {"judged_count", c.judged_count}});
    }));

    server.Post("/llm/confirm", wrap([this](const httplib::Request& req, httplib::Response& res) {
      require_writable();
      const json body = parse_body(req);
      const std::string exec = body_string(body, "execution", true);
      auto it = body.find("t");
      if (it == body.end() || !it->is_number()) throw Error(ErrorCode::validation, "field 't' must be a number");
      const auto e = llm::confirm_threshold(*project, exec, it->get<double>());
      send_json(res, {{"execution", execution_json(e)}});
    }));

    server.Get("/metrics", wrap([this](const httplib::Request& req, httplib::Response& res) {
      const std::string truth_path = query(req, "truth");
      if (truth_path.empty()) throw Error(ErrorCode::validation, "missing parameter 'truth'");
      std::ifstream in(truth_path, std::ios::binary);
      if (!in) throw Error(ErrorCode::not_found, "cannot read truth file " + truth_path);
      std::ostringstream ss;
      ss << in.rdbuf();
      std::optional<eval::PredictionSource> src;
      const std::string s = query(req, "source");
      if (s == "llm") src = eval::PredictionSource::llm;
      else if (s == "status") src = eval::PredictionSource::status;
      else if (!s.empty()) throw Error(ErrorCode::validation, "source must be llm or status");
      const auto rep = eval::project_metrics(project->snapshot(), eval::parse_truth(ss.str()), src);
      json j = {{"records", rep.counts.total()},
                {"tp", rep.counts.tp},
                {"fp", rep.counts.fp},
                {"tn", rep.counts.tn},
                {"fn", rep.counts.fn},
                {"sensitivity", optional_number(rep.sensitivity)},
                {"specificity", optional_number(rep.specificity)},
                {"precision", optional_number(rep.precision)},
                {"prevalence", optional_number(rep.prevalence)},
                {"fbeta", optional_number(rep.f_beta)},
                {"beta", rep.beta}};
      if (rep.wss) {
        j["wss"] = rep.wss->wss;
        j["wss_recall"] = rep.wss_recall;
        j["n_star"] = rep.wss->n_star;
      }
      send_json(res, j);
    }));

    server.Get("/export", wrap([this](const httplib::Request& req, httplib::Response& res) {
      const std::string format = query(req, "format", "csv");
      const auto f = ingest::parse_export_format(format);
      if (!f) throw Error(ErrorCode::validation, "format must be csv or ris");
      const std::string body = ingest::export_records(*project, *f, query(req, "scope", "all"));
      res.set_content(body, *f == ingest::ExportFormat::csv ? "text/csv; charset=utf-8"
                                                            : "application/x-research-info-systems; charset=utf-8");
      res.set_header("Content-Disposition", *f == ingest::ExportFormat::csv ? "attachment; filename=export.csv"
                                                                            : "attachment; filename=export.ris");
    }));

    server.Get("/version", wrap([](const httplib::Request&, httplib::Response& res) {
      send_json(res, {{"version", kVersion}});
    }));

    if (options.web_root) {
      if (!server.set_mount_point("/", options.web_root->string())) {
        throw Error(ErrorCode::not_found, "web root " + options.web_root->string() + " is not a directory");
      }
    } else {
      server.Get("/", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(kPlaceholderPage, "text/html; charset=utf-8");
      });
    }
  }

  void queue(const httplib::Request& req, httplib::Response& res) {
    const Snapshot snap = project->snapshot();
    const auto reviewer = reviewer_param(req);
    const std::string mode = query(req, "mode", "manual");
    if (mode != "manual" && mode != "ml") throw Error(ErrorCode::validation, "mode must be manual or ml");
    const std::string set = query(req, "set");
    long limit = -1;
    if (req.has_param("limit")) limit = static_cast<long>(parse_double(query(req, "limit"), "limit"));

    const auto statuses = snap.effective_statuses(scope_for(snap, reviewer));
    std::vector<std::pair<const Record*, std::optional<double>>> order;
    bool cold = false;
    if (mode == "ml") {
      auto outcome = ranking.request(snap, reviewer).get();
      cold = outcome.cold_start;
      if (!cold) {
        for (const auto& item : outcome.queue) order.emplace_back(snap.record(item.ref_id), item.probability);
      }
    }
    if (mode == "manual" || cold) {
      const auto labels = ranker::labels_from_snapshot(snap, reviewer);
      for (const auto& r : snap.records) {
        if (mode == "ml" && labels.contains(r.ref_id)) continue;
        order.emplace_back(&r, std::nullopt);
      }
    }

    std::map<std::string, llm::LlmJudgment> judgments;
    if (auto active = snap.active_execution_id()) judgments = llm::judgments_for_execution(snap, *active);
    const auto [include_kw, exclude_kw] = keyword_lists(snap);

    json items = json::array();
    for (const auto& [r, prob] : order) {
      if (!r) continue;
      const Status s = statuses.at(r->ref_id);
      if (s != Status::pending) continue;
      if (!set.empty() && r->screening_set != set) continue;
      if (limit >= 0 && static_cast<long>(items.size()) >= limit) break;
      json spans = json::array();
      for (const auto& h : compute_highlights(build_corpus_text(*r), include_kw, exclude_kw)) {
        spans.push_back({{"start", h.start}, {"end", h.end}, {"keyword", h.keyword}, {"kind", to_string(h.kind)}});
      }
      json item = {{"ref_id", r->ref_id},
                   {"title", r->title},
                   {"abstract", r->abstract},
                   {"text", build_corpus_text(*r)},
                   {"status", to_string(s)},
                   {"screening_set", r->screening_set},
                   {"ml_probability", optional_number(prob)},
                   {"highlights", std::move(spans)}};
      if (auto it = judgments.find(r->ref_id); it != judgments.end()) item["llm"] = judgment_summary(it->second);
      items.push_back(std::move(item));
    }
    send_json(res, {{"mode", mode}, {"cold_start", mode == "ml" && cold}, {"items", std::move(items)}});
  }

  void start_batch(const httplib::Request& req, httplib::Response& res) {
    require_writable();
    if (!options.provider_factory) {
      throw Error(ErrorCode::validation, "no LLM provider configured; start the service with --provider");
    }
    const json body = req.body.empty() ? json::object() : parse_body(req);
    const Snapshot snap = project->snapshot();
    llm::BatchParams params = llm::params_from_config(snap);
    params.requests_per_minute = options.requests_per_minute;
    params.max_retries = options.max_retries;
    if (auto it = body.find("threshold"); it != body.end()) {
      if (!it->is_number()) throw Error(ErrorCode::validation, "threshold must be a number");
      params.threshold = it->get<double>();
    }
    if (auto it = body.find("ref_ids"); it != body.end()) params.ref_ids = it->get<std::vector<std::string>>();

    std::lock_guard lock(batch.mu);
    if (batch.running) throw Error(ErrorCode::conflict, "an LLM batch is already running");
    if (batch.thread.joinable()) batch.thread.join();
    batch.running = true;
    batch.done = 0;
    batch.total = 0;
    batch.error.clear();
    batch.outcome.reset();
    batch.execution_id = project->next_execution_id();
    auto provider = std::shared_ptr<llm::Provider>(options.provider_factory());
    batch.thread = std::jthread([this, params, provider](std::stop_token stop) {
      llm::BatchHooks hooks;
      hooks.clock = options.clock;
      hooks.stop = stop;
      hooks.on_progress = [this](const llm::BatchProgress& p) {
        std::lock_guard l(batch.mu);
        batch.done = p.done;
        batch.total = p.total;
      };
      std::optional<json> outcome;
      std::string error;
      try {
        const auto out = llm::run_batch(*project, *provider, params, hooks);
        outcome = json{{"execution", execution_json(out.execution)},
                       {"failed_count", out.failed_count},
                       {"requests_sent", out.requests_sent}};
      } catch (const std::exception& e) {
        error = e.what();
      }
      std::lock_guard l(batch.mu);
      batch.outcome = std::move(outcome);
      batch.error = std::move(error);
      batch.running = false;
    });
    send_json(res, {{"execution_id", batch.execution_id}, {"status", "running"}}, 202);
  }
};

Service::Service(const std::filesystem::path& project_dir, ServiceOptions options)
    : impl_(std::make_unique<Impl>(project_dir, std::move(options))) {}

Service::~Service() = default;

int Service::start() {
  Impl& i = *impl_;
  if (i.options.port == 0) {
    i.port = i.server.bind_to_any_port(i.options.host);
  } else {
    i.port = i.server.bind_to_port(i.options.host, i.options.port) ? i.options.port : -1;
  }
  if (i.port <= 0) {
    throw Error(ErrorCode::io, "cannot bind " + i.options.host + ":" + std::to_string(i.options.port));
  }
  i.listener = std::thread([&i] { i.server.listen_after_bind(); });
  i.server.wait_until_ready();
  return i.port;
}

void Service::wait() {
  if (impl_->listener.joinable()) impl_->listener.join();
}

void Service::stop() { impl_->server.stop(); }

bool Service::read_only() const { return impl_->read_only; }

int Service::port() const { return impl_->port; }

}  // namespace tiab
