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

/* C interface to the tiab-screen engine. All strings are UTF-8 and
 * NUL-terminated. Functions returning `char**` hand ownership to the caller,
 * who releases them with tiab_string_free(). Structured results are JSON
 * documents. On failure a function returns a non-zero tiab_status and
 * tiab_last_error() describes the problem for the calling thread. */

#ifndef TIAB_H
#define TIAB_H

#include <stdint.h>

#if defined(TIAB_BUILDING_LIBRARY)
#define TIAB_API __attribute__((visibility("default")))
#else
#define TIAB_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tiab_status {
  TIAB_OK = 0,
  TIAB_E_VALIDATION = 1,
  TIAB_E_NOT_FOUND = 2,
  TIAB_E_IO = 3,
  TIAB_E_PARSE = 4,
  TIAB_E_ENCODING = 5,
  TIAB_E_EMPTY_INPUT = 6,
  TIAB_E_SCHEMA = 7,
  TIAB_E_EXISTS = 8,
  TIAB_E_LOCKED = 9,
  TIAB_E_COLD_START = 10,
  TIAB_E_UNDEFINED = 11,
  TIAB_E_PROVIDER = 12,
  TIAB_E_CONFLICT = 13,
  TIAB_E_INTERNAL = 14,
  TIAB_E_ARGUMENT = 15 /* NULL or malformed argument */
} tiab_status;

typedef struct tiab_project tiab_project;
typedef struct tiab_service tiab_service;

TIAB_API const char* tiab_version(void);
TIAB_API const char* tiab_status_name(tiab_status status);
/* Message for the most recent failure on this thread ("" if none). */
TIAB_API const char* tiab_last_error(void);
TIAB_API void tiab_string_free(char* s);

/* ---- project lifecycle ---- */
TIAB_API tiab_status tiab_project_create(const char* dir, tiab_project** out);
/* writable != 0 takes the single-writer lock (TIAB_E_LOCKED if held). */
TIAB_API tiab_status tiab_project_open(const char* dir, int writable, tiab_project** out);
TIAB_API void tiab_project_close(tiab_project* project);

/* ---- ingestion ---- */
/* format: "ris", "nbib", "pubmed_xml", "csv", or NULL to infer from the
 * file extension. Result: import report JSON. */
TIAB_API tiab_status tiab_import_file(tiab_project* project, const char* path, const char* format,
                                      const char* importer, char** report_json);
/* format: "csv" or "ris"; scope: "all" or a status name. */
TIAB_API tiab_status tiab_export(tiab_project* project, const char* format, const char* scope, char** content);

/* ---- decisions and status ---- */
TIAB_API tiab_status tiab_decision_append(tiab_project* project, const char* ref_id, const char* reviewer_id,
                                          const char* decision, const char* reason, char** decision_id);
/* reviewer_id NULL: all-reviewer status. */
TIAB_API tiab_status tiab_effective_status(tiab_project* project, const char* ref_id, const char* reviewer_id,
                                           char** status);
TIAB_API tiab_status tiab_conflicts(tiab_project* project, char** json);
TIAB_API tiab_status tiab_records(tiab_project* project, const char* status_filter, char** json);

/* ---- configuration ---- */
TIAB_API tiab_status tiab_config_get(tiab_project* project, const char* key, char** value);
TIAB_API tiab_status tiab_config_set(tiab_project* project, const char* key, const char* value);
TIAB_API tiab_status tiab_config_list(tiab_project* project, char** json);
TIAB_API tiab_status tiab_assign_sets(tiab_project* project, char** json);

/* ---- ranking and stopping ---- */
/* Queue of unlabeled records; {"cold_start": true, ...} falls back to import order. */
TIAB_API tiab_status tiab_rank(tiab_project* project, const char* reviewer_id, char** json);
TIAB_API tiab_status tiab_stopping(tiab_project* project, const char* reviewer_id, char** json);

/* ---- LLM screening ----
 * options_json keys (all optional unless noted):
 *   "provider": "mock:<fixture.json>" | "live"   (required)
 *   "endpoint", "key_name"                        (live provider)
 *   "rpm", "max_retries", "concurrency", "threshold",
 *   "criteria" (protocol text; default: llm.prompt), "ref_ids": [...],
 *   "resume": "<execution_id>", "refine": true */
TIAB_API tiab_status tiab_llm_batch(tiab_project* project, const char* options_json, char** outcome_json);
TIAB_API tiab_status tiab_llm_executions(tiab_project* project, char** json);
TIAB_API tiab_status tiab_threshold_preview(tiab_project* project, const char* execution_id, double t, char** json);
TIAB_API tiab_status tiab_threshold_confirm(tiab_project* project, const char* execution_id, double t, char** json);
TIAB_API tiab_status tiab_llm_cost(tiab_project* project, const char* execution_id, char** json);

/* ---- evaluation ---- */
TIAB_API tiab_status tiab_fbeta(double precision, double recall, double beta, double* out);
/* Writes fold_XX.csv rankings to out_dir (nullable); compares against
 * reference_dir (nullable). */
TIAB_API tiab_status tiab_eval_folds(const char* dataset_csv, int k, uint64_t seed, const char* out_dir,
                                     const char* reference_dir, char** json);
/* predictions_csv: ref_id plus "label" (0/1) or "score" columns; a score
 * column is thresholded at `threshold` and also yields WSS@95. */
TIAB_API tiab_status tiab_eval_metrics(const char* truth_csv, const char* predictions_csv, double threshold,
                                       char** json);
/* Metrics of a project's predictions; source "llm", "status" or NULL. */
TIAB_API tiab_status tiab_project_metrics(tiab_project* project, const char* truth_csv, const char* source,
                                          char** json);
TIAB_API tiab_status tiab_eval_overlap(const char* ranking_a_csv, const char* ranking_b_csv, int k, char** json);
/* options_json: {"rule", "n_consecutive", "target_recall", "confidence",
 * "retrain_every", "alpha"} */
TIAB_API tiab_status tiab_eval_simulate(const char* dataset_csv, const char* options_json, char** json);

/* ---- API key store (outside any project) ---- */
TIAB_API tiab_status tiab_key_set(const char* name, const char* secret);
TIAB_API tiab_status tiab_key_list(char** json);
TIAB_API tiab_status tiab_key_remove(const char* name);

/* ---- HTTP service ----
 * options_json: {"host", "port", "blind", "rpm", "provider", "endpoint",
 * "key_name", "web_root"} */
TIAB_API tiab_status tiab_service_start(const char* dir, const char* options_json, tiab_service** out, int* port);
TIAB_API void tiab_service_wait(tiab_service* service);
TIAB_API void tiab_service_stop(tiab_service* service);
TIAB_API void tiab_service_free(tiab_service* service);

#ifdef __cplusplus
}
#endif

#endif /* TIAB_H */
