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

#include "tiab/tiab.h"

#include <cstring>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "tiab/batch.hpp"
#include "tiab/csv.hpp"
#include "tiab/error.hpp"
#include "tiab/eval.hpp"
#include "tiab/ingest.hpp"
#include "tiab/keystore.hpp"
#include "tiab/ranker.hpp"
#include "tiab/service.hpp"
#include "tiab/stopping.hpp"
#include "tiab/store.hpp"
#include "tiab/text.hpp"
#include "tiab/version.hpp"

struct tiab_project {
  tiab::Project project;
};

struct tiab_service {
  std::unique_ptr<tiab::Service> service;
};

namespace {

using nlohmann::json;
using tiab::Error;
using tiab::ErrorCode;

thread_local std::string g_last_error;

struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

tiab_status status_of(ErrorCode c) { return static_cast<tiab_status>(static_cast<int>(c) + 1); }

template <typename F>
tiab_status guard(F&& fn) {
  try {
    fn();
    g_last_error.clear();
    return TIAB_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const ArgumentError& e) {
    g_last_error = e.what();
    return TIAB_E_ARGUMENT;
  } catch (const json::exception& e) {
    g_last_error = e.what();
    return TIAB_E_PARSE;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return TIAB_E_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return TIAB_E_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) throw ArgumentError(std::string(what) + " must not be NULL");
}

char* dup(std::string_view s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size());
  out[s.size()] = '\0';
  return out;
}

void put(char** out, std::string_view s) {
  need(out, "output pointer");
  *out = dup(s);
}

std::string read_file(const char* path) {
  need(path, "path");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, std::string("cannot read ") + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_options(const char* options_json) {
  if (!options_json || !*options_json) return json::object();
  json o = json::parse(options_json);
  if (!o.is_object()) throw ArgumentError("options must be a JSON object");
  return o;
}

std::optional<std::string> opt_str(const char* s) {
  if (!s || !*s) return std::nullopt;
  return std::string(s);
}

json record_json(const tiab::Record& r, tiab::Status status) {
  return {{"ref_id", r.ref_id},     {"title", r.title},     {"abstract", r.abstract},
          {"year", r.year ? json(*r.year) : json(nullptr)}, {"authors", r.authors},
          {"journal", r.journal},   {"doi", r.doi},         {"pmid", r.pmid},
          {"screening_set", r.screening_set},               {"status", tiab::to_string(status)}};
}

json execution_json(const tiab::ExecutionLog& e) {
  return {{"execution_id", e.execution_id},
          {"execution_type", tiab::to_string(e.execution_type)},
          {"timestamp", e.timestamp},
          {"model_name", e.model_name},
          {"temperature", e.temperature},
          {"top_p", e.top_p},
          {"thinking_level", tiab::to_string(e.thinking_level)},
          {"threshold", e.threshold},
          {"targeted_count", e.targeted_count},
          {"included_count", e.included_count},
          {"excluded_count", e.excluded_count},
          {"confirmation_status", tiab::to_string(e.confirmation_status)},
          {"active", e.active}};
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json report_json(const tiab::eval::MetricsReport& r) {
  json j = {{"records", r.counts.total()},
            {"tp", r.counts.tp},
            {"fp", r.counts.fp},
            {"tn", r.counts.tn},
            {"fn", r.counts.fn},
            {"sensitivity", optional_number(r.sensitivity)},
            {"specificity", optional_number(r.specificity)},
            {"precision", optional_number(r.precision)},
            {"prevalence", optional_number(r.prevalence)},
            {"fbeta", optional_number(r.f_beta)},
            {"beta", r.beta},
            {"text", tiab::eval::format_report_text(r)},
            {"csv", tiab::eval::format_report_csv(r)}};
  if (r.wss) {
    j["wss"] = r.wss->wss;
    j["wss_recall"] = r.wss_recall;
    j["n_star"] = r.wss->n_star;
  }
  return j;
}

// "mock:<fixture>" or "live" (endpoint + key from the keystore).
std::unique_ptr<tiab::llm::Provider> make_provider(const json& o) {
  const std::string provider = o.value("provider", "");
  if (provider.rfind("mock:", 0) == 0) return tiab::llm::MockProvider::from_fixture(provider.substr(5));
  if (provider == "live") {
    tiab::llm::LiveProviderConfig cfg;
    cfg.endpoint = o.value("endpoint", "");
    const std::string key_name = o.value("key_name", "default");
    auto key = tiab::llm::Keystore().get(key_name);
    if (!key) throw Error(ErrorCode::not_found, "no API key named '" + key_name + "' in the keystore");
    cfg.api_key = *key;
    return std::make_unique<tiab::llm::LiveProvider>(std::move(cfg));
  }
  throw Error(ErrorCode::validation, "provider must be 'mock:<fixture.json>' or 'live'");
}

}  // namespace

extern "C" {

const char* tiab_version(void) { return tiab::kVersion; }

const char* tiab_status_name(tiab_status status) {
  if (status == TIAB_OK) return "ok";
  if (status == TIAB_E_ARGUMENT) return "argument";
  if (status >= TIAB_E_VALIDATION && status <= TIAB_E_INTERNAL) {
    static thread_local std::string name;
    name = tiab::to_string(static_cast<ErrorCode>(static_cast<int>(status) - 1));
    return name.c_str();
  }
  return "unknown";
}

const char* tiab_last_error(void) { return g_last_error.c_str(); }

void tiab_string_free(char* s) { std::free(s); }

tiab_status tiab_project_create(const char* dir, tiab_project** out) {
  return guard([&] {
    need(dir, "dir");
    need(out, "out");
    *out = new tiab_project{tiab::Project::create(dir)};
  });
}

tiab_status tiab_project_open(const char* dir, int writable, tiab_project** out) {
  return guard([&] {
    need(dir, "dir");
    need(out, "out");
    *out = new tiab_project{
        tiab::Project::open(dir, writable ? tiab::OpenMode::read_write : tiab::OpenMode::read_only)};
  });
}

void tiab_project_close(tiab_project* project) { delete project; }

tiab_status tiab_import_file(tiab_project* p, const char* path, const char* format, const char* importer,
                             char** report_json) {
  return guard([&] {
    need(p, "project");
    const std::string bytes = read_file(path);
    std::optional<tiab::ingest::Format> f =
        format && *format ? tiab::ingest::parse_format(format) : tiab::ingest::format_from_extension(path);
    if (!f) throw Error(ErrorCode::validation, "cannot determine the input format; pass one of ris, nbib, pubmed_xml, csv");
    const auto drafts = tiab::ingest::parse_records(bytes, *f);
    const std::string file_name = std::filesystem::path(path).filename().string();
    const auto rep = tiab::ingest::import_batch(drafts, p->project, importer ? importer : "", file_name);
    json dups = json::array();
    for (const auto& d : rep.duplicates) {
      dups.push_back({{"draft_index", d.draft_index}, {"existing_ref_id", d.existing_ref_id}, {"dedup_key", d.dedup_key}});
    }
    put(report_json, json{{"format", tiab::ingest::to_string(*f)},
                          {"imported_count", rep.imported_count},
                          {"duplicate_count", rep.duplicate_count},
                          {"rejected_count", rep.rejected_count},
                          {"imported_ref_ids", rep.imported_ref_ids},
                          {"duplicates", std::move(dups)},
                          {"rejections", rep.rejections}}
                         .dump());
  });
}

tiab_status tiab_export(tiab_project* p, const char* format, const char* scope, char** content) {
  return guard([&] {
    need(p, "project");
    const auto f = tiab::ingest::parse_export_format(format ? format : "csv");
    if (!f) throw Error(ErrorCode::validation, "export format must be csv or ris");
    put(content, tiab::ingest::export_records(p->project, *f, scope ? scope : "all"));
  });
}

tiab_status tiab_decision_append(tiab_project* p, const char* ref_id, const char* reviewer_id, const char* decision,
                                 const char* reason, char** decision_id) {
  return guard([&] {
    need(p, "project");
    need(ref_id, "ref_id");
    need(reviewer_id, "reviewer_id");
    need(decision, "decision");
    const auto v = tiab::parse_verdict(decision);
    if (!v) throw Error(ErrorCode::validation, std::string("invalid decision '") + decision + "'");
    tiab::Decision d;
    d.ref_id = ref_id;
    d.reviewer_id = reviewer_id;
    d.decision = *v;
    d.reason = reason ? reason : "";
    const std::string id = p->project.append_decision(std::move(d));
    if (decision_id) put(decision_id, id);
  });
}

tiab_status tiab_effective_status(tiab_project* p, const char* ref_id, const char* reviewer_id, char** status) {
  return guard([&] {
    need(p, "project");
    need(ref_id, "ref_id");
    put(status, tiab::to_string(p->project.effective_status(ref_id, opt_str(reviewer_id))));
  });
}

tiab_status tiab_conflicts(tiab_project* p, char** out) {
  return guard([&] {
    need(p, "project");
    put(out, json{{"conflicts", p->project.detect_conflicts()}}.dump());
  });
}

tiab_status tiab_records(tiab_project* p, const char* status_filter, char** out) {
  return guard([&] {
    need(p, "project");
    const std::string filter = status_filter && *status_filter ? status_filter : "all";
    std::optional<tiab::Status> wanted;
    if (filter != "all") {
      wanted = tiab::parse_status(filter);
      if (!wanted) throw Error(ErrorCode::validation, "unknown status filter '" + filter + "'");
    }
    const auto snap = p->project.snapshot();
    const auto statuses = snap.effective_statuses(snap.all_reviewers());
    json items = json::array();
    for (const auto& r : snap.records) {
      const auto s = statuses.at(r.ref_id);
      if (!wanted || s == *wanted) items.push_back(record_json(r, s));
    }
    put(out, json{{"records", std::move(items)}}.dump());
  });
}

tiab_status tiab_config_get(tiab_project* p, const char* key, char** value) {
  return guard([&] {
    need(p, "project");
    need(key, "key");
    auto v = p->project.config_get(key);
    if (!v) throw Error(ErrorCode::not_found, std::string("unknown config key '") + key + "'");
    put(value, *v);
  });
}

tiab_status tiab_config_set(tiab_project* p, const char* key, const char* value) {
  return guard([&] {
    need(p, "project");
    need(key, "key");
    need(value, "value");
    p->project.config_set(key, value);
  });
}

tiab_status tiab_config_list(tiab_project* p, char** out) {
  return guard([&] {
    need(p, "project");
    const auto snap = p->project.snapshot();
    json o = json::object();
    for (const auto& k : tiab::recognized_config_keys()) o[std::string(k.key)] = snap.config_value(k.key);
    put(out, o.dump());
  });
}

tiab_status tiab_assign_sets(tiab_project* p, char** out) {
  return guard([&] {
    need(p, "project");
    put(out, json(p->project.assign_screening_sets()).dump());
  });
}

tiab_status tiab_rank(tiab_project* p, const char* reviewer_id, char** out) {
  return guard([&] {
    need(p, "project");
    const auto snap = p->project.snapshot();
    const auto reviewer = opt_str(reviewer_id);
    json items = json::array();
    bool cold = false;
    try {
      for (const auto& it : tiab::ranker::rank_unlabeled(snap, reviewer)) {
        items.push_back({{"ref_id", it.ref_id}, {"probability", it.probability}});
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::cold_start) throw;
      cold = true;
      for (const auto& it : tiab::ranker::import_order(snap, tiab::ranker::labels_from_snapshot(snap, reviewer))) {
        items.push_back({{"ref_id", it.ref_id}, {"probability", nullptr}});
      }
    }
    put(out, json{{"cold_start", cold}, {"queue", std::move(items)}}.dump());
  });
}

tiab_status tiab_stopping(tiab_project* p, const char* reviewer_id, char** out) {
  return guard([&] {
    need(p, "project");
    const auto snap = p->project.snapshot();
    const auto traj = tiab::stopping::trajectory_from_snapshot(snap, opt_str(reviewer_id));
    const auto rep = tiab::stopping::evaluate(traj, static_cast<long>(snap.records.size()),
                                              tiab::stopping::config_from_snapshot(snap));
    put(out, json{{"rule", tiab::stopping::to_string(rep.rule)},
                  {"stop", rep.stop},
                  {"p_value", optional_number(rep.p_value)},
                  {"run_length", rep.run_length},
                  {"screened", rep.screened},
                  {"relevant_found", rep.relevant_found},
                  {"total_records", rep.total_records},
                  {"recommendation", rep.recommendation}}
                 .dump());
  });
}

tiab_status tiab_llm_batch(tiab_project* p, const char* options_json, char** outcome_json) {
  return guard([&] {
    need(p, "project");
    const json o = parse_options(options_json);
    auto provider = make_provider(o);
    const auto snap = p->project.snapshot();

    tiab::llm::BatchParams params;
    const std::string criteria = o.value("criteria", "");
    if (criteria.empty()) {
      params = tiab::llm::params_from_config(snap);
    } else {
      tiab::Snapshot with_criteria = snap;
      with_criteria.config["llm.prompt"] = criteria;
      params = tiab::llm::params_from_config(with_criteria);
    }
    params.requests_per_minute = o.value("rpm", params.requests_per_minute);
    params.max_retries = o.value("max_retries", params.max_retries);
    params.concurrency = o.value("concurrency", params.concurrency);
    params.threshold = o.value("threshold", params.threshold);
    params.ref_ids = o.value("ref_ids", std::vector<std::string>{});

    json extra = json::object();
    if (o.value("refine", false)) {
      std::string gen_id;
      params.prompt = tiab::llm::refine_prompt(p->project, *provider, params.prompt.criteria, params, &gen_id);
      extra["prompt_generation_id"] = gen_id;
    }
    const std::string resume = o.value("resume", "");
    const auto outcome = resume.empty() ? tiab::llm::run_batch(p->project, *provider, params)
                                        : tiab::llm::resume_batch(p->project, *provider, resume, params);
    const auto usage = tiab::llm::usage_for_execution(p->project.snapshot(), outcome.execution.execution_id);
    json j = {{"execution", execution_json(outcome.execution)},
              {"failed_count", outcome.failed_count},
              {"skipped_count", outcome.skipped_count},
              {"requests_sent", outcome.requests_sent},
              {"input_tokens", usage.input_tokens},
              {"output_tokens", usage.output_tokens},
              {"thinking_tokens", usage.thinking_tokens},
              {"cost_usd", tiab::llm::estimate_cost(usage)}};
    j.update(extra);
    put(outcome_json, j.dump());
  });
}

tiab_status tiab_llm_executions(tiab_project* p, char** out) {
  return guard([&] {
    need(p, "project");
    json items = json::array();
    for (const auto& e : p->project.executions()) items.push_back(execution_json(e));
    put(out, json{{"executions", std::move(items)}}.dump());
  });
}

tiab_status tiab_threshold_preview(tiab_project* p, const char* execution_id, double t, char** out) {
  return guard([&] {
    need(p, "project");
    need(execution_id, "execution_id");
    const auto c = tiab::llm::threshold_preview(p->project, execution_id, t);
    put(out, json{{"execution_id", execution_id},
                  {"t", t},
                  {"include_count", c.include_count},
                  {"exclude_count", c.exclude_count},
                  {"judged_count", c.judged_count}}
                 .dump());
  });
}

tiab_status tiab_threshold_confirm(tiab_project* p, const char* execution_id, double t, char** out) {
  return guard([&] {
    need(p, "project");
    need(execution_id, "execution_id");
    put(out, json{{"execution", execution_json(tiab::llm::confirm_threshold(p->project, execution_id, t))}}.dump());
  });
}

tiab_status tiab_llm_cost(tiab_project* p, const char* execution_id, char** out) {
  return guard([&] {
    need(p, "project");
    need(execution_id, "execution_id");
    const auto usage = tiab::llm::usage_for_execution(p->project.snapshot(), execution_id);
    put(out, json{{"execution_id", execution_id},
                  {"input_tokens", usage.input_tokens},
                  {"output_tokens", usage.output_tokens},
                  {"thinking_tokens", usage.thinking_tokens},
                  {"cost_usd", tiab::llm::estimate_cost(usage)}}
                 .dump());
  });
}

tiab_status tiab_fbeta(double precision, double recall, double beta, double* out) {
  return guard([&] {
    need(out, "out");
    *out = tiab::eval::fbeta(precision, recall, beta);
  });
}

tiab_status tiab_eval_folds(const char* dataset_csv, int k, uint64_t seed, const char* out_dir,
                            const char* reference_dir, char** out) {
  return guard([&] {
    const auto data = tiab::eval::parse_dataset(read_file(dataset_csv));
    tiab::eval::FoldExperimentOptions opts;
    opts.k = k;
    opts.seed = seed;
    if (out_dir && *out_dir) opts.output_dir = out_dir;
    if (reference_dir && *reference_dir) opts.reference_dir = reference_dir;
    const auto rep = tiab::eval::run_fold_experiment(data, opts);
    json folds = json::array();
    for (std::size_t f = 0; f < rep.folds.size(); ++f) {
      const auto& members = rep.plan.folds[f];
      long pos = 0;
      for (const auto& id : members) {
        for (const auto& r : data) {
          if (r.ref_id == id && r.relevant) ++pos;
        }
      }
      json fj = {{"fold", rep.folds[f].fold}, {"size", members.size()}, {"positives", pos}};
      if (f < rep.overlaps.size()) {
        fj["overlap"] = rep.overlaps[f];
        fj["overlap_k"] = rep.overlap_ks[f];
      }
      folds.push_back(std::move(fj));
    }
    put(out, json{{"k", k}, {"seed", seed}, {"plan_csv", tiab::eval::plan_to_csv(rep.plan)}, {"folds", std::move(folds)}}
                 .dump());
  });
}

tiab_status tiab_eval_metrics(const char* truth_csv, const char* predictions_csv, double threshold, char** out) {
  return guard([&] {
    const auto truth = tiab::eval::parse_truth(read_file(truth_csv));
    const auto rows = tiab::csv::parse(tiab::text::decode_utf8(read_file(predictions_csv)));
    if (rows.empty()) throw Error(ErrorCode::empty_input, "predictions CSV is empty");
    const auto id_col = tiab::csv::column_index(rows.front(), "ref_id");
    const auto score_col = tiab::csv::column_index(rows.front(), "score");
    const auto label_col = tiab::csv::column_index(rows.front(), "label");
    if (!id_col || (!score_col && !label_col)) {
      throw Error(ErrorCode::schema, "predictions need ref_id and a score or label column");
    }
    std::map<std::string, bool> predicted;
    std::map<std::string, double> scores;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const auto& row = rows[i];
      if (row.size() == 1 && row[0].empty()) continue;
      const auto cell = [&](std::size_t c) { return c < row.size() ? row[c] : std::string(); };
      const std::string id(tiab::text::trim(cell(*id_col)));
      if (score_col) {
        const double s = std::stod(cell(*score_col));
        scores[id] = s;
        predicted[id] = s >= threshold;
      } else {
        predicted[id] = tiab::text::trim(cell(*label_col)) == "1";
      }
    }
    std::optional<std::map<std::string, double>> sc;
    if (score_col) sc = std::move(scores);
    put(out, report_json(tiab::eval::metrics_report(truth, predicted, sc)).dump());
  });
}

tiab_status tiab_project_metrics(tiab_project* p, const char* truth_csv, const char* source, char** out) {
  return guard([&] {
    need(p, "project");
    std::optional<tiab::eval::PredictionSource> src;
    if (source && std::string_view(source) == "llm") src = tiab::eval::PredictionSource::llm;
    else if (source && std::string_view(source) == "status") src = tiab::eval::PredictionSource::status;
    else if (source && *source) throw Error(ErrorCode::validation, "source must be llm or status");
    const auto truth = tiab::eval::parse_truth(read_file(truth_csv));
    put(out, report_json(tiab::eval::project_metrics(p->project.snapshot(), truth, src)).dump());
  });
}

tiab_status tiab_eval_overlap(const char* ranking_a_csv, const char* ranking_b_csv, int k, char** out) {
  return guard([&] {
    if (k < 1) throw Error(ErrorCode::validation, "k must be at least 1");
    const auto a = tiab::eval::read_ranking_csv(read_file(ranking_a_csv));
    const auto b = tiab::eval::read_ranking_csv(read_file(ranking_b_csv));
    put(out, json{{"k", k}, {"overlap", tiab::eval::topk_overlap(a, b, static_cast<std::size_t>(k))}}.dump());
  });
}

tiab_status tiab_eval_simulate(const char* dataset_csv, const char* options_json, char** out) {
  return guard([&] {
    const auto data = tiab::eval::parse_dataset(read_file(dataset_csv));
    const json o = parse_options(options_json);
    tiab::stopping::StoppingConfig cfg;
    const auto rule = tiab::stopping::parse_rule(o.value("rule", "statistical"));
    if (!rule) throw Error(ErrorCode::validation, "rule must be consecutive or statistical");
    cfg.rule = *rule;
    cfg.n_consecutive = o.value("n_consecutive", cfg.n_consecutive);
    cfg.target_recall = o.value("target_recall", cfg.target_recall);
    cfg.confidence = o.value("confidence", cfg.confidence);
    tiab::stopping::ActiveLearningOptions al;
    al.alpha = o.value("alpha", al.alpha);
    al.retrain_every = o.value("retrain_every", al.retrain_every);
    std::vector<std::string> texts;
    std::vector<bool> truth;
    for (const auto& r : data) {
      texts.push_back(tiab::build_corpus_text(r.title, r.abstract));
      truth.push_back(r.relevant);
    }
    const auto res = tiab::stopping::simulate_active_learning(texts, truth, cfg, al);
    put(out, json{{"rule", tiab::stopping::to_string(cfg.rule)},
                  {"recall", res.recall},
                  {"screened", res.screened},
                  {"total_records", res.total_records},
                  {"relevant_found", res.relevant_found},
                  {"total_relevant", res.total_relevant},
                  {"stopped_by_rule", res.stopped_by_rule},
                  {"p_value", optional_number(res.p_value)}}
                 .dump());
  });
}

tiab_status tiab_key_set(const char* name, const char* secret) {
  return guard([&] {
    need(name, "name");
    need(secret, "secret");
    tiab::llm::Keystore().set(name, secret);
  });
}

tiab_status tiab_key_list(char** out) {
  return guard([&] {
    tiab::llm::Keystore ks;
    put(out, json{{"dir", ks.dir().string()}, {"names", ks.names()}}.dump());
  });
}

tiab_status tiab_key_remove(const char* name) {
  return guard([&] {
    need(name, "name");
    if (!tiab::llm::Keystore().remove(name)) {
      throw Error(ErrorCode::not_found, std::string("no key named '") + name + "'");
    }
  });
}

tiab_status tiab_service_start(const char* dir, const char* options_json, tiab_service** out, int* port) {
  return guard([&] {
    need(dir, "dir");
    need(out, "out");
    const json o = parse_options(options_json);
    tiab::ServiceOptions so;
    so.host = o.value("host", so.host);
    so.port = o.value("port", so.port);
    so.blind = o.value("blind", so.blind);
    so.requests_per_minute = o.value("rpm", so.requests_per_minute);
    if (o.contains("web_root") && !o.at("web_root").get<std::string>().empty()) {
      so.web_root = o.at("web_root").get<std::string>();
    }
    if (!o.value("provider", "").empty()) {
      make_provider(o);  // fail fast on a bad provider name
      so.provider_factory = [o] { return make_provider(o); };
    }
    auto svc = std::make_unique<tiab::Service>(dir, std::move(so));
    const int bound = svc->start();
    if (port) *port = bound;
    *out = new tiab_service{std::move(svc)};
  });
}

void tiab_service_wait(tiab_service* s) {
  if (s) s->service->wait();
}

void tiab_service_stop(tiab_service* s) {
  if (s) s->service->stop();
}

void tiab_service_free(tiab_service* s) { delete s; }

}  // extern "C"
