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

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "tiab/clock.hpp"
#include "tiab/record.hpp"

// Local project store. A project is a directory holding four UTF-8 CSV
// tables (references, decisions, config, llm_executions). Decisions, config
// and executions are append-only logs; a later row for the same key
// supersedes an earlier one. Only the references table is ever rewritten
// (screening-set assignment), and always via write-then-rename.
namespace tiab {

enum class Verdict { include, exclude, maybe, pending };
enum class Status { include, exclude, maybe, pending, conflict };

std::string_view to_string(Verdict v) noexcept;
std::string_view to_string(Status s) noexcept;
std::optional<Verdict> parse_verdict(std::string_view s) noexcept;
std::optional<Status> parse_status(std::string_view s) noexcept;

struct Decision {
  std::string decision_id;
  std::string ref_id;
  std::string reviewer_id;
  Verdict decision = Verdict::pending;
  std::string reason;
  std::string labels;  // legacy column; persisted verbatim, never interpreted
  std::string note;
  std::string timestamp;
  std::string client_version;
  std::string context_url;

  bool operator==(const Decision&) const = default;
};

inline constexpr std::array<std::string_view, 10> kDecisionColumns = {
    "decision_id", "ref_id", "reviewer_id", "decision", "reason",
    "labels",      "note",   "timestamp",   "client_version", "context_url"};

inline constexpr std::string_view kLlmReviewerPrefix = "llm:";
std::string llm_reviewer_id(std::string_view execution_id);
bool is_llm_reviewer(std::string_view reviewer_id) noexcept;

enum class ExecutionType { prompt_generation, batch_screening };
enum class ThinkingLevel { minimal, low, medium, high };
enum class Confirmation { pending, confirmed };

std::string_view to_string(ExecutionType t) noexcept;
std::string_view to_string(ThinkingLevel t) noexcept;
std::string_view to_string(Confirmation c) noexcept;
std::optional<ThinkingLevel> parse_thinking_level(std::string_view s) noexcept;

struct ExecutionLog {
  std::string execution_id;
  ExecutionType execution_type = ExecutionType::batch_screening;
  std::string timestamp;
  std::string model_name;
  double temperature = 1.0;
  double top_p = 0.95;
  ThinkingLevel thinking_level = ThinkingLevel::low;
  std::string criteria_snapshot;
  std::string prompt;
  double threshold = 0.5;
  long targeted_count = 0;
  long included_count = 0;
  long excluded_count = 0;
  Confirmation confirmation_status = Confirmation::pending;
  bool active = false;

  bool operator==(const ExecutionLog&) const = default;
};

inline constexpr std::array<std::string_view, 15> kExecutionColumns = {
    "execution_id",      "execution_type", "timestamp",      "model_name",     "temperature",
    "top_p",             "thinking_level", "criteria_snapshot", "prompt",      "threshold",
    "targeted_count",    "included_count", "excluded_count", "confirmation_status", "active"};

/// Throws Error(validation) when a field is outside its domain.
void validate(const ExecutionLog& e);

// ---------------------------------------------------------------------------
// Configuration keys and defaults.

struct ConfigKey {
  std::string_view key;
  std::string_view default_value;
};

const std::vector<ConfigKey>& recognized_config_keys();
std::optional<std::string> config_default(std::string_view key);
/// Throws Error(validation) for unknown keys or out-of-range values.
void validate_config(std::string_view key, std::string_view value);

// ---------------------------------------------------------------------------
// Status reduction. Pure functions of the decision rows.

/// Reviewers whose decisions participate in all-reviewer status: every
/// human reviewer plus the LLM reviewer of the active execution, if any.
struct StatusScope {
  std::optional<std::string> reviewer;         // set: single-reviewer scope
  std::set<std::string> active_llm_reviewers;  // used by all-reviewer scope
  bool humans_only = false;                    // ranking labels ignore LLM rows
};

bool decision_before(const Decision& a, const Decision& b) noexcept;

/// Latest decision per reviewer for one ref (timestamp, then decision_id).
std::map<std::string, const Decision*> latest_by_reviewer(const std::vector<const Decision*>& rows);

Status reduce_status(const std::vector<const Decision*>& rows_for_ref, const StatusScope& scope);

/// Immutable view of a project at one instant.
struct Snapshot {
  std::vector<Record> records;  // ascending ref_id
  std::vector<Decision> decisions;  // file order
  std::vector<ExecutionLog> executions;  // latest row per id, first-seen order
  std::map<std::string, std::string> config;

  std::map<std::string, std::vector<const Decision*>> decisions_by_ref() const;
  std::optional<std::string> active_execution_id() const;
  StatusScope all_reviewers() const;
  Status effective_status(std::string_view ref_id, const StatusScope& scope) const;
  /// Status of every record in one pass, keyed by ref_id.
  std::map<std::string, Status> effective_statuses(const StatusScope& scope) const;
  std::string config_value(std::string_view key) const;
  const Record* record(std::string_view ref_id) const;
  const ExecutionLog* execution(std::string_view execution_id) const;
};

// ---------------------------------------------------------------------------

enum class OpenMode { read_only, read_write };

struct StoreOptions {
  Clock* clock = nullptr;   // defaults to the system clock
  bool fsync = false;       // fdatasync after every append
};

/// Handle to an open project. Thread-safe: reads take a shared lock, writes
/// an exclusive one. A read_write handle also holds an exclusive advisory
/// lock on `<dir>/.lock` for its lifetime (single writer per directory).
class Project {
 public:
  static Project create(const std::filesystem::path& dir, StoreOptions options = {});
  static Project open(const std::filesystem::path& dir, OpenMode mode, StoreOptions options = {});

  Project(Project&&) noexcept;
  Project& operator=(Project&&) noexcept;
  ~Project();

  const std::filesystem::path& path() const noexcept;
  bool writable() const noexcept;
  Clock& clock() const noexcept;

  /// Consistent copy of all four tables. Read-only handles re-read disk.
  Snapshot snapshot() const;

  std::size_t record_count() const;
  std::optional<Record> record(std::string_view ref_id) const;

  /// Assigns ref_ids and appends all records in one write; nothing is
  /// visible if the write fails.
  std::vector<std::string> append_records(std::vector<Record> records);

  /// Fills decision_id, timestamp (if empty) and client_version (if empty).
  std::string append_decision(Decision d);
  /// All-or-nothing multi-row append (used when confirming a threshold).
  std::vector<std::string> append_decisions(std::vector<Decision> ds);
  Status effective_status(std::string_view ref_id, std::optional<std::string> reviewer = std::nullopt) const;
  std::vector<std::string> detect_conflicts() const;

  std::optional<std::string> config_get(std::string_view key) const;
  void config_set(std::string_view key, std::string_view value);

  std::string next_execution_id() const;
  void log_execution(ExecutionLog e);
  /// Appends a superseding row for an existing execution.
  void update_execution(ExecutionLog e);
  void set_active_execution(std::string_view execution_id);
  std::optional<ExecutionLog> execution(std::string_view execution_id) const;
  std::vector<ExecutionLog> executions() const;

  /// Writes screening_set: the first assign.calibration_size records (by
  /// ref_id) get "calibration", the rest "group-1".."group-G" round-robin.
  /// Returns the number of records per set label.
  std::map<std::string, std::size_t> assign_screening_sets();

 private:
  struct Impl;
  explicit Project(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

}  // namespace tiab
