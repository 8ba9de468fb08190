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

// Command-line front end. Talks to the library only through tiab.h.

#include <CLI11.hpp>
#include <json.hpp>

#include <csignal>
#include <cstdlib>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "tiab/tiab.h"

namespace {

using nlohmann::json;

constexpr int kUsageExit = 2;

struct Failure {
  tiab_status status;
  std::string message;
};

struct Owned {
  char* s = nullptr;
  ~Owned() { tiab_string_free(s); }
  std::string str() const { return s ? std::string(s) : std::string(); }
  json parsed() const { return json::parse(str()); }
};

void check(tiab_status st) {
  if (st != TIAB_OK) throw Failure{st, tiab_last_error()};
}

struct ProjectHandle {
  tiab_project* p = nullptr;
  ProjectHandle(const std::string& dir, bool writable) {
    if (dir.empty()) throw Failure{TIAB_E_ARGUMENT, "no project directory; pass --project DIR"};
    check(tiab_project_open(dir.c_str(), writable ? 1 : 0, &p));
  }
  ~ProjectHandle() { tiab_project_close(p); }
  ProjectHandle(const ProjectHandle&) = delete;
  ProjectHandle& operator=(const ProjectHandle&) = delete;
};

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{TIAB_E_IO, "cannot read " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_or_print(const std::string& content, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << content)) throw Failure{TIAB_E_IO, "cannot write " + path};
}

void print_json(const json& j) { std::cout << j.dump(2) << '\n'; }

const char* c_or_null(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

std::string fmt_prob(const json& v) {
  if (v.is_null()) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v.get<double>());
  return buf;
}

struct ProviderFlags {
  std::string provider;
  std::string endpoint;
  std::string key_name = "default";

  void attach(CLI::App* cmd) {
    cmd->add_option("--provider", provider, "LLM provider: mock:<fixture.json> or live");
    cmd->add_option("--endpoint", endpoint, "Chat-completion URL for the live provider");
    cmd->add_option("--key-name", key_name, "Keystore entry holding the API key")->capture_default_str();
  }
  void into(json& o) const {
    if (!provider.empty()) o["provider"] = provider;
    if (!endpoint.empty()) o["endpoint"] = endpoint;
    o["key_name"] = key_name;
  }
};

int run_serve(const std::string& project, const json& options) {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  tiab_service* svc = nullptr;
  int port = 0;
  check(tiab_service_start(project.c_str(), options.dump().c_str(), &svc, &port));
  std::cout << "listening on http://" << options.value("host", "127.0.0.1") << ':' << port << '\n' << std::flush;

  std::thread waiter([svc, set] {
    int sig = 0;
    sigwait(&set, &sig);
    tiab_service_stop(svc);
  });
  tiab_service_wait(svc);
  // Wake the signal thread if the service ended on its own.
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  tiab_service_free(svc);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Title and abstract screening toolkit"};
  app.set_version_flag("--version", std::string(tiab_version()));
  app.require_subcommand(1);
  std::string project;
  app.add_option("--project", project, "Project directory")->envname("TIAB_PROJECT");

  // init
  auto* init = app.add_subcommand("init", "Create an empty project");
  std::string init_dir;
  init->add_option("dir", init_dir, "Project directory (defaults to --project)");

  // import
  auto* import = app.add_subcommand("import", "Import references from RIS, nbib, PubMed XML or CSV");
  std::vector<std::string> import_args;
  std::string import_format, importer;
  import->add_option("args", import_args, "[PROJECT] FILE")->required()->expected(1, 2);
  import->add_option("--format", import_format, "ris, nbib, pubmed_xml or csv (default: by extension)");
  import->add_option("--importer", importer, "Name recorded as the importer");

  // export
  auto* exp = app.add_subcommand("export", "Export records with their screening status");
  std::string export_format = "csv", export_scope = "all", export_out;
  exp->add_option("--format", export_format, "csv or ris")->capture_default_str();
  exp->add_option("--scope", export_scope, "all, include, exclude, maybe, pending or conflict")->capture_default_str();
  exp->add_option("-o,--output", export_out, "Output file (default: stdout)");

  // decide
  auto* decide = app.add_subcommand("decide", "Record a reviewer decision");
  std::string d_ref, d_decision, d_reviewer, d_reason;
  decide->add_option("ref_id", d_ref)->required();
  decide->add_option("decision", d_decision, "include, exclude, maybe or pending")->required();
  decide->add_option("--reviewer", d_reviewer, "Reviewer id")->required();
  decide->add_option("--reason", d_reason);

  // records / conflicts
  auto* records = app.add_subcommand("records", "List records with their effective status");
  std::string records_status = "all";
  records->add_option("--status", records_status)->capture_default_str();
  auto* conflicts = app.add_subcommand("conflicts", "List records with disagreeing reviewers");

  // config
  auto* config = app.add_subcommand("config", "Read or change project configuration");
  config->require_subcommand(1);
  auto* config_get = config->add_subcommand("get");
  auto* config_set = config->add_subcommand("set");
  auto* config_list = config->add_subcommand("list");
  std::string cfg_key, cfg_value;
  config_get->add_option("key", cfg_key)->required();
  config_set->add_option("key", cfg_key)->required();
  config_set->add_option("value", cfg_value)->required();

  // rank
  auto* rank = app.add_subcommand("rank", "Rank unlabeled records by predicted relevance");
  std::string rank_reviewer;
  std::size_t rank_limit = 0;
  rank->add_option("--reviewer", rank_reviewer, "Restrict training labels to one reviewer");
  rank->add_option("--limit", rank_limit, "Print only the first N records");

  // screen-llm
  auto* screen = app.add_subcommand("screen-llm", "Screen records with a language model");
  std::string prompt_file, resume;
  std::optional<double> threshold;
  std::optional<int> rpm, max_retries, concurrency;
  std::vector<std::string> screen_refs;
  bool refine = false;
  ProviderFlags screen_provider;
  screen_provider.attach(screen);
  screen->add_option("--prompt-file", prompt_file, "File holding the eligibility criteria");
  screen->add_option("--threshold", threshold, "Inclusion threshold in [0,1]");
  screen->add_option("--rpm", rpm, "Maximum requests per minute");
  screen->add_option("--max-retries", max_retries);
  screen->add_option("--concurrency", concurrency);
  screen->add_option("--ref", screen_refs, "Screen only these ref_ids");
  screen->add_option("--resume", resume, "Resume an interrupted execution");
  screen->add_flag("--refine", refine, "Ask the model to refine the criteria first");

  // executions / cost
  auto* executions = app.add_subcommand("executions", "List LLM executions");
  auto* cost = app.add_subcommand("cost", "Token usage and estimated cost of an execution");
  std::string cost_exec;
  cost->add_option("--execution", cost_exec)->required();

  // threshold
  auto* thr = app.add_subcommand("threshold", "Preview or confirm an LLM inclusion threshold");
  std::string thr_exec;
  double thr_t = 0.5;
  thr->add_option("--execution", thr_exec)->required();
  thr->add_option("--t", thr_t, "Threshold in [0,1]")->required();
  auto* thr_mode = thr->add_option_group("mode");
  bool thr_preview = false, thr_confirm = false;
  thr_mode->add_flag("--preview", thr_preview);
  thr_mode->add_flag("--confirm", thr_confirm);
  thr_mode->require_option(1);

  // stopping
  auto* stopping = app.add_subcommand("stopping", "Evaluate the configured stopping rule");
  std::string stop_reviewer;
  stopping->add_option("--reviewer", stop_reviewer);

  // assign
  auto* assign = app.add_subcommand("assign", "Assign unassigned records to screening sets");

  // eval
  auto* eval = app.add_subcommand("eval", "Offline evaluation tools");
  eval->require_subcommand(1);
  auto* folds = eval->add_subcommand("folds", "Stratified k-fold ranking experiment");
  std::string ds_path, folds_out, folds_ref;
  int folds_k = 10;
  std::uint64_t folds_seed = 42;
  folds->add_option("--dataset", ds_path, "CSV with ref_id,title,abstract,label")->required();
  folds->add_option("--k", folds_k)->capture_default_str();
  folds->add_option("--seed", folds_seed)->capture_default_str();
  folds->add_option("--out", folds_out, "Directory for per-fold ranking CSVs");
  folds->add_option("--reference", folds_ref, "Directory of reference rankings to compare against");

  auto* metrics = eval->add_subcommand("metrics", "Confusion-matrix metrics against ground truth");
  std::string truth_path, pred_path, metrics_source, metrics_format = "text";
  double metrics_threshold = 0.5;
  metrics->add_option("--truth", truth_path, "CSV with ref_id,label")->required();
  metrics->add_option("--predictions", pred_path, "CSV with ref_id and score or label");
  metrics->add_option("--threshold", metrics_threshold)->capture_default_str();
  metrics->add_option("--source", metrics_source, "llm or status (project predictions)");
  metrics->add_option("--format", metrics_format, "text, csv or json")->capture_default_str()
      ->check(CLI::IsMember({"text", "csv", "json"}));

  auto* overlap = eval->add_subcommand("overlap", "Top-k ID overlap of two ranking CSVs");
  std::string rank_a, rank_b;
  int overlap_k = 100;
  overlap->add_option("a", rank_a)->required();
  overlap->add_option("b", rank_b)->required();
  overlap->add_option("--k", overlap_k)->capture_default_str();

  auto* simulate = eval->add_subcommand("simulate", "Simulate active-learning screening with a stopping rule");
  std::string sim_rule = "statistical";
  int sim_n = 50, sim_every = 1;
  double sim_recall = 0.95, sim_conf = 0.95;
  simulate->add_option("--dataset", ds_path)->required();
  simulate->add_option("--rule", sim_rule)->capture_default_str();
  simulate->add_option("--n-consecutive", sim_n)->capture_default_str();
  simulate->add_option("--target-recall", sim_recall)->capture_default_str();
  simulate->add_option("--confidence", sim_conf)->capture_default_str();
  simulate->add_option("--retrain-every", sim_every)->capture_default_str();

  // serve
  auto* serve = app.add_subcommand("serve", "Run the local HTTP service");
  std::string host = "127.0.0.1", web_root;
  int port = 8765, serve_rpm = 60;
  bool blind = false;
  ProviderFlags serve_provider;
  serve_provider.attach(serve);
  serve->add_option("--host", host, "Bind address (loopback by default)")->capture_default_str();
  serve->add_option("--port", port)->capture_default_str();
  serve->add_flag("--blind", blind, "Hide other reviewers' decisions");
  serve->add_option("--rpm", serve_rpm)->capture_default_str();
  serve->add_option("--web-root", web_root, "Directory of static web assets");

  // key
  auto* key = app.add_subcommand("key", "Manage encrypted API keys");
  key->require_subcommand(1);
  auto* key_set = key->add_subcommand("set");
  auto* key_list = key->add_subcommand("list");
  auto* key_remove = key->add_subcommand("remove");
  std::string key_name, key_secret;
  key_set->add_option("name", key_name)->required();
  key_set->add_option("secret", key_secret, "Secret (read from stdin when omitted)");
  key_remove->add_option("name", key_name)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kUsageExit;
  }

  try {
    if (*init) {
      const std::string dir = init_dir.empty() ? project : init_dir;
      if (dir.empty()) throw Failure{TIAB_E_ARGUMENT, "init needs a directory"};
      tiab_project* p = nullptr;
      check(tiab_project_create(dir.c_str(), &p));
      tiab_project_close(p);
      std::cout << "created project " << dir << '\n';
    } else if (*import) {
      std::string dir = project, file = import_args.back();
      if (import_args.size() == 2) dir = import_args.front();
      ProjectHandle h(dir, true);
      Owned out;
      if (importer.empty()) {
        const char* user = std::getenv("USER");
        importer = user && *user ? user : "cli";
      }
      check(tiab_import_file(h.p, file.c_str(), c_or_null(import_format), importer.c_str(), &out.s));
      const json r = out.parsed();
      std::cout << "imported " << r["imported_count"] << ", duplicates " << r["duplicate_count"] << ", rejected "
                << r["rejected_count"] << '\n';
      for (const auto& rej : r["rejections"]) std::cerr << "rejected: " << rej.get<std::string>() << '\n';
    } else if (*exp) {
      ProjectHandle h(project, false);
      Owned out;
      check(tiab_export(h.p, export_format.c_str(), export_scope.c_str(), &out.s));
      write_or_print(out.str(), export_out);
    } else if (*decide) {
      ProjectHandle h(project, true);
      Owned id;
      check(tiab_decision_append(h.p, d_ref.c_str(), d_reviewer.c_str(), d_decision.c_str(), d_reason.c_str(), &id.s));
      std::cout << id.str() << '\n';
    } else if (*records) {
      ProjectHandle h(project, false);
      Owned out;
      check(tiab_records(h.p, records_status.c_str(), &out.s));
      const json all = out.parsed();
      for (const auto& r : all["records"]) {
        std::cout << r["ref_id"].get<std::string>() << '\t' << r["status"].get<std::string>() << '\t'
                  << r["title"].get<std::string>() << '\n';
      }
    } else if (*conflicts) {
      ProjectHandle h(project, false);
      Owned out;
      check(tiab_conflicts(h.p, &out.s));
      const json all = out.parsed();
      for (const auto& id : all["conflicts"]) std::cout << id.get<std::string>() << '\n';
    } else if (*config) {
      ProjectHandle h(project, !*config_get && !*config_list);
      if (*config_get) {
        Owned v;
        check(tiab_config_get(h.p, cfg_key.c_str(), &v.s));
        std::cout << v.str() << '\n';
      } else if (*config_set) {
        check(tiab_config_set(h.p, cfg_key.c_str(), cfg_value.c_str()));
      } else if (*config_list) {
        Owned out;
        check(tiab_config_list(h.p, &out.s));
        const json all = out.parsed();
        for (const auto& [k, v] : all.items()) std::cout << k << '=' << v.get<std::string>() << '\n';
      }
    } else if (*rank) {
      ProjectHandle h(project, false);
      Owned out;
      check(tiab_rank(h.p, c_or_null(rank_reviewer), &out.s));
      const json r = out.parsed();
      if (r["cold_start"].get<bool>()) std::cerr << "cold start: both classes need a label; showing import order\n";
      std::size_t n = 0;
      for (const auto& it : r["queue"]) {
        if (rank_limit && n++ >= rank_limit) break;
        std::cout << it["ref_id"].get<std::string>() << '\t' << fmt_prob(it["probability"]) << '\n';
      }
    } else if (*screen) {
      ProjectHandle h(project, true);
      json o = json::object();
      screen_provider.into(o);
      if (!prompt_file.empty()) o["criteria"] = read_text(prompt_file);
      if (threshold) o["threshold"] = *threshold;
      if (rpm) o["rpm"] = *rpm;
      if (max_retries) o["max_retries"] = *max_retries;
      if (concurrency) o["concurrency"] = *concurrency;
      if (!screen_refs.empty()) o["ref_ids"] = screen_refs;
      if (!resume.empty()) o["resume"] = resume;
      if (refine) o["refine"] = true;
      Owned out;
      check(tiab_llm_batch(h.p, o.dump().c_str(), &out.s));
      const json r = out.parsed();
      const json& e = r["execution"];
      std::cout << "execution " << e["execution_id"].get<std::string>() << ": targeted " << e["targeted_count"]
                << ", included " << e["included_count"] << ", excluded " << e["excluded_count"] << ", failed "
                << r["failed_count"] << '\n';
      char cost_buf[64];
      std::snprintf(cost_buf, sizeof cost_buf, "%.4f", r["cost_usd"].get<double>());
      std::cout << "tokens: input " << r["input_tokens"] << ", output " << r["output_tokens"] << ", thinking "
                << r["thinking_tokens"] << "; estimated cost $" << cost_buf << '\n';
    } else if (*executions) {
      ProjectHandle h(project, false);
      Owned out;
      check(tiab_llm_executions(h.p, &out.s));
      print_json(out.parsed()["executions"]);
    } else if (*cost) {
      ProjectHandle h(project, false);
      Owned out;
      check(tiab_llm_cost(h.p, cost_exec.c_str(), &out.s));
      print_json(out.parsed());
    } else if (*thr) {
      ProjectHandle h(project, thr_confirm);
      Owned out;
      if (thr_preview) {
        check(tiab_threshold_preview(h.p, thr_exec.c_str(), thr_t, &out.s));
        const json r = out.parsed();
        std::cout << "include " << r["include_count"] << "\nexclude " << r["exclude_count"] << "\njudged "
                  << r["judged_count"] << '\n';
      } else {
        check(tiab_threshold_confirm(h.p, thr_exec.c_str(), thr_t, &out.s));
        const json all = out.parsed();
        const json& e = all["execution"];
        std::cout << "confirmed " << e["execution_id"].get<std::string>() << " at t=" << thr_t << ": include "
                  << e["included_count"] << ", exclude " << e["excluded_count"] << '\n';
      }
    } else if (*stopping) {
      ProjectHandle h(project, false);
      Owned out;
      check(tiab_stopping(h.p, c_or_null(stop_reviewer), &out.s));
      print_json(out.parsed());
    } else if (*assign) {
      ProjectHandle h(project, true);
      Owned out;
      check(tiab_assign_sets(h.p, &out.s));
      print_json(out.parsed());
    } else if (*folds) {
      Owned out;
      check(tiab_eval_folds(ds_path.c_str(), folds_k, folds_seed, c_or_null(folds_out), c_or_null(folds_ref), &out.s));
      const json r = out.parsed();
      for (const auto& f : r["folds"]) {
        std::cout << "fold " << f["fold"] << ": " << f["size"] << " records, " << f["positives"] << " relevant";
        if (f.contains("overlap")) std::cout << ", top-" << f["overlap_k"] << " overlap " << f["overlap"].get<double>();
        std::cout << '\n';
      }
      if (!folds_out.empty()) write_or_print(r["plan_csv"].get<std::string>(), folds_out + "/plan.csv");
    } else if (*metrics) {
      Owned out;
      if (!pred_path.empty()) {
        check(tiab_eval_metrics(truth_path.c_str(), pred_path.c_str(), metrics_threshold, &out.s));
      } else {
        ProjectHandle h(project, false);
        check(tiab_project_metrics(h.p, truth_path.c_str(), c_or_null(metrics_source), &out.s));
      }
      const json r = out.parsed();
      if (metrics_format == "json") {
        json trimmed = r;
        trimmed.erase("text");
        trimmed.erase("csv");
        print_json(trimmed);
      } else {
        std::cout << r[metrics_format].get<std::string>();
      }
    } else if (*overlap) {
      Owned out;
      check(tiab_eval_overlap(rank_a.c_str(), rank_b.c_str(), overlap_k, &out.s));
      std::cout << out.parsed()["overlap"].get<double>() << '\n';
    } else if (*simulate) {
      const json o = {{"rule", sim_rule},
                      {"n_consecutive", sim_n},
                      {"target_recall", sim_recall},
                      {"confidence", sim_conf},
                      {"retrain_every", sim_every}};
      Owned out;
      check(tiab_eval_simulate(ds_path.c_str(), o.dump().c_str(), &out.s));
      print_json(out.parsed());
    } else if (*serve) {
      if (project.empty()) throw Failure{TIAB_E_ARGUMENT, "serve needs --project DIR"};
      json o = {{"host", host}, {"port", port}, {"blind", blind}, {"rpm", serve_rpm}, {"web_root", web_root}};
      serve_provider.into(o);
      return run_serve(project, o);
    } else if (*key) {
      if (*key_set) {
        if (key_secret.empty()) std::getline(std::cin, key_secret);
        check(tiab_key_set(key_name.c_str(), key_secret.c_str()));
      } else if (*key_list) {
        Owned out;
        check(tiab_key_list(&out.s));
        const json all = out.parsed();
        for (const auto& n : all["names"]) std::cout << n.get<std::string>() << '\n';
      } else if (*key_remove) {
        check(tiab_key_remove(key_name.c_str()));
      }
    }
  } catch (const Failure& f) {
    std::cerr << "error (" << tiab_status_name(f.status) << "): " << f.message << '\n';
    return f.status == TIAB_E_ARGUMENT ? kUsageExit : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
