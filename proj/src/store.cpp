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

#include "tiab/store.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <shared_mutex>
#include <sstream>

#include "tiab/csv.hpp"
#include "tiab/error.hpp"
#include "tiab/text.hpp"
#include "tiab/version.hpp"

namespace fs = std::filesystem;

namespace tiab {

// ---------------------------------------------------------------------------
// Enumerations

std::string_view to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::include: return "include";
    case Verdict::exclude: return "exclude";
    case Verdict::maybe: return "maybe";
    case Verdict::pending: return "pending";
  }
  return "pending";
}

std::string_view to_string(Status s) noexcept {
  switch (s) {
    case Status::include: return "include";
    case Status::exclude: return "exclude";
    case Status::maybe: return "maybe";
    case Status::pending: return "pending";
    case Status::conflict: return "conflict";
  }
  return "pending";
}

std::optional<Verdict> parse_verdict(std::string_view s) noexcept {
  if (s == "include") return Verdict::include;
  if (s == "exclude") return Verdict::exclude;
  if (s == "maybe") return Verdict::maybe;
  if (s == "pending") return Verdict::pending;
  return std::nullopt;
}

std::optional<Status> parse_status(std::string_view s) noexcept {
  if (s == "conflict") return Status::conflict;
  if (auto v = parse_verdict(s)) return static_cast<Status>(*v);
  return std::nullopt;
}

std::string_view to_string(ExecutionType t) noexcept {
  return t == ExecutionType::prompt_generation ? "prompt_generation" : "batch_screening";
}

std::string_view to_string(ThinkingLevel t) noexcept {
  switch (t) {
    case ThinkingLevel::minimal: return "minimal";
    case ThinkingLevel::low: return "low";
    case ThinkingLevel::medium: return "medium";
    case ThinkingLevel::high: return "high";
  }
  return "low";
}

std::string_view to_string(Confirmation c) noexcept {
  return c == Confirmation::confirmed ? "confirmed" : "pending";
}

std::optional<ThinkingLevel> parse_thinking_level(std::string_view s) noexcept {
  if (s == "minimal") return ThinkingLevel::minimal;
  if (s == "low") return ThinkingLevel::low;
  if (s == "medium") return ThinkingLevel::medium;
  if (s == "high") return ThinkingLevel::high;
  return std::nullopt;
}

std::string llm_reviewer_id(std::string_view execution_id) {
  return std::string(kLlmReviewerPrefix) + std::string(execution_id);
}

bool is_llm_reviewer(std::string_view reviewer_id) noexcept {
  return reviewer_id.substr(0, kLlmReviewerPrefix.size()) == kLlmReviewerPrefix;
}

namespace {

std::optional<double> parse_real(std::string_view s) {
  s = text::trim(s);
  if (s.empty()) return std::nullopt;
  std::string tmp(s);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(tmp.c_str(), &end);
  if (errno != 0 || end != tmp.c_str() + tmp.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<long> parse_int(std::string_view s) {
  s = text::trim(s);
  bool neg = false;
  if (!s.empty() && s.front() == '-') {
    neg = true;
    s.remove_prefix(1);
  }
  if (!text::all_digits(s) || s.size() > 15) return std::nullopt;
  long v = std::stol(std::string(s));
  return neg ? -v : v;
}

std::string format_real(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  // Keep short decimal forms for human-entered values such as 0.95.
  for (int p = 1; p <= 17; ++p) {
    std::ostringstream t;
    t.precision(p);
    t << v;
    if (std::strtod(t.str().c_str(), nullptr) == v) return t.str();
  }
  return os.str();
}

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorCode::validation, msg); }

}  // namespace

void validate(const ExecutionLog& e) {
  if (e.execution_id.empty()) invalid("execution_id is empty");
  if (!(e.temperature >= 0.0 && e.temperature <= 2.0)) invalid("temperature must be in [0, 2]");
  if (!(e.top_p >= 0.0 && e.top_p <= 1.0)) invalid("top_p must be in [0, 1]");
  if (!(e.threshold >= 0.0 && e.threshold <= 1.0)) invalid("threshold must be in [0, 1]");
  if (e.targeted_count < 0 || e.included_count < 0 || e.excluded_count < 0) invalid("counts must be non-negative");
  if (e.included_count + e.excluded_count > e.targeted_count) {
    invalid("included_count + excluded_count exceeds targeted_count");
  }
  if (e.active && e.execution_type != ExecutionType::batch_screening) {
    invalid("only batch_screening executions can be active");
  }
}

// ---------------------------------------------------------------------------
// Configuration

const std::vector<ConfigKey>& recognized_config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"keywords.include_preset_rct", "randomized, randomised, randomly, placebo, double-blind, trial"},
      {"keywords.include_preset_sr", "systematic review, meta-analysis, search strategy, PRISMA"},
      {"keywords.custom_include", ""},
      {"keywords.custom_exclude", ""},
      {"llm.model", "gemini-3-flash-preview"},
      {"llm.temperature", "1.0"},
      {"llm.top_p", "0.95"},
      {"llm.thinking_level", "low"},
      {"llm.threshold", "0.5"},
      {"llm.prompt", ""},
      {"llm.output_language", "en"},
      {"assign.calibration_size", "0"},
      {"assign.group_count", "1"},
      {"stop.rule", "consecutive"},
      {"stop.n_consecutive", "50"},
      {"stop.target_recall", "0.95"},
      {"stop.confidence", "0.95"},
      {"ranker.alpha", "3.822"},
      {"ranker.retrain_every", "1"},
      {"ranker.balance", "none"},
  };
  return keys;
}

std::optional<std::string> config_default(std::string_view key) {
  for (const auto& k : recognized_config_keys()) {
    if (k.key == key) return std::string(k.default_value);
  }
  return std::nullopt;
}

void validate_config(std::string_view key, std::string_view value) {
  if (!config_default(key)) invalid("unrecognized config key '" + std::string(key) + "'");
  const auto real_in = [&](double lo, double hi, bool open_lo, bool open_hi) {
    auto v = parse_real(value);
    if (!v || (open_lo ? *v <= lo : *v < lo) || (open_hi ? *v >= hi : *v > hi)) {
      invalid(std::string(key) + " must be a number in " + (open_lo ? "(" : "[") + format_real(lo) + ", " +
              format_real(hi) + (open_hi ? ")" : "]") + ", got '" + std::string(value) + "'");
    }
  };
  const auto int_at_least = [&](long lo) {
    auto v = parse_int(value);
    if (!v || *v < lo) invalid(std::string(key) + " must be an integer >= " + std::to_string(lo));
  };
  if (key == "llm.temperature") real_in(0.0, 2.0, false, false);
  else if (key == "llm.top_p" || key == "llm.threshold") real_in(0.0, 1.0, false, false);
  else if (key == "llm.thinking_level") {
    if (!parse_thinking_level(value)) invalid("llm.thinking_level must be minimal, low, medium or high");
  } else if (key == "llm.output_language") {
    if (text::trim(value).empty()) invalid("llm.output_language must not be empty");
  } else if (key == "assign.calibration_size") int_at_least(0);
  else if (key == "assign.group_count") int_at_least(1);
  else if (key == "stop.rule") {
    if (value != "consecutive" && value != "statistical") invalid("stop.rule must be consecutive or statistical");
  } else if (key == "stop.n_consecutive") int_at_least(1);
  else if (key == "stop.target_recall") real_in(0.0, 1.0, true, false);
  else if (key == "stop.confidence") real_in(0.0, 1.0, true, true);
  else if (key == "ranker.alpha") real_in(0.0, 1e9, true, false);
  else if (key == "ranker.retrain_every") int_at_least(1);
  else if (key == "ranker.balance") {
    if (value != "none" && value != "dynamic") invalid("ranker.balance must be none or dynamic");
  }
}

// ---------------------------------------------------------------------------
// Status reduction

namespace {

int compare_ids(std::string_view a, std::string_view b) {
  if (id_less(a, b)) return -1;
  if (id_less(b, a)) return 1;
  return 0;
}

}  // namespace

bool decision_before(const Decision& a, const Decision& b) noexcept {
  if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
  return compare_ids(a.decision_id, b.decision_id) < 0;
}

std::map<std::string, const Decision*> latest_by_reviewer(const std::vector<const Decision*>& rows) {
  std::map<std::string, const Decision*> latest;
  for (const Decision* d : rows) {
    auto [it, inserted] = latest.emplace(d->reviewer_id, d);
    if (!inserted && decision_before(*it->second, *d)) it->second = d;
  }
  return latest;
}

Status reduce_status(const std::vector<const Decision*>& rows_for_ref, const StatusScope& scope) {
  if (scope.reviewer) {
    const Decision* last = nullptr;
    for (const Decision* d : rows_for_ref) {
      if (d->reviewer_id != *scope.reviewer) continue;
      if (!last || decision_before(*last, *d)) last = d;
    }
    return last ? static_cast<Status>(last->decision) : Status::pending;
  }
  std::vector<const Decision*> participating;
  for (const Decision* d : rows_for_ref) {
    if (is_llm_reviewer(d->reviewer_id)) {
      if (scope.humans_only || !scope.active_llm_reviewers.contains(d->reviewer_id)) continue;
    }
    participating.push_back(d);
  }
  std::optional<Verdict> common;
  for (const auto& [reviewer, d] : latest_by_reviewer(participating)) {
    if (d->decision == Verdict::pending) continue;
    if (common && *common != d->decision) return Status::conflict;
    common = d->decision;
  }
  return common ? static_cast<Status>(*common) : Status::pending;
}

std::map<std::string, std::vector<const Decision*>> Snapshot::decisions_by_ref() const {
  std::map<std::string, std::vector<const Decision*>> out;
  for (const auto& d : decisions) out[d.ref_id].push_back(&d);
  return out;
}

std::optional<std::string> Snapshot::active_execution_id() const {
  for (const auto& e : executions) {
    if (e.active) return e.execution_id;
  }
  return std::nullopt;
}

StatusScope Snapshot::all_reviewers() const {
  StatusScope scope;
  if (auto id = active_execution_id()) scope.active_llm_reviewers.insert(llm_reviewer_id(*id));
  return scope;
}

Status Snapshot::effective_status(std::string_view ref_id, const StatusScope& scope) const {
  if (!record(ref_id)) throw Error(ErrorCode::not_found, "unknown ref_id '" + std::string(ref_id) + "'");
  std::vector<const Decision*> rows;
  for (const auto& d : decisions) {
    if (d.ref_id == ref_id) rows.push_back(&d);
  }
  return reduce_status(rows, scope);
}

std::map<std::string, Status> Snapshot::effective_statuses(const StatusScope& scope) const {
  const auto by_ref = decisions_by_ref();
  std::map<std::string, Status> out;
  static const std::vector<const Decision*> kNone;
  for (const auto& r : records) {
    auto it = by_ref.find(r.ref_id);
    out[r.ref_id] = reduce_status(it == by_ref.end() ? kNone : it->second, scope);
  }
  return out;
}

std::string Snapshot::config_value(std::string_view key) const {
  if (auto it = config.find(std::string(key)); it != config.end()) return it->second;
  return config_default(key).value_or("");
}

const Record* Snapshot::record(std::string_view ref_id) const {
  auto it = std::lower_bound(records.begin(), records.end(), ref_id,
                             [](const Record& r, std::string_view id) { return id_less(r.ref_id, id); });
  if (it != records.end() && it->ref_id == ref_id) return &*it;
  // Tolerate hand-edited tables that are not in ref_id order.
  for (const auto& r : records) {
    if (r.ref_id == ref_id) return &r;
  }
  return nullptr;
}

const ExecutionLog* Snapshot::execution(std::string_view execution_id) const {
  for (const auto& e : executions) {
    if (e.execution_id == execution_id) return &e;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// Row conversion

namespace {

constexpr const char* kReferencesFile = "references.csv";
constexpr const char* kDecisionsFile = "decisions.csv";
constexpr const char* kConfigFile = "config.csv";
constexpr const char* kExecutionsFile = "llm_executions.csv";
constexpr const char* kLockFile = ".lock";

template <std::size_t N>
csv::Row header_row(const std::array<std::string_view, N>& cols) {
  return csv::Row(cols.begin(), cols.end());
}

csv::Row decision_to_row(const Decision& d) {
  return {d.decision_id, d.ref_id, d.reviewer_id, std::string(to_string(d.decision)), d.reason, d.labels,
          d.note,        d.timestamp, d.client_version, d.context_url};
}

Decision decision_from_row(const csv::Row& row) {
  if (row.size() != kDecisionColumns.size()) {
    throw Error(ErrorCode::parse, "decisions row has " + std::to_string(row.size()) + " columns, expected 10");
  }
  auto verdict = parse_verdict(row[3]);
  if (!verdict) throw Error(ErrorCode::parse, "invalid decision value '" + row[3] + "'");
  return Decision{row[0], row[1], row[2], *verdict, row[4], row[5], row[6], row[7], row[8], row[9]};
}

csv::Row execution_to_row(const ExecutionLog& e) {
  return {e.execution_id,
          std::string(to_string(e.execution_type)),
          e.timestamp,
          e.model_name,
          format_real(e.temperature),
          format_real(e.top_p),
          std::string(to_string(e.thinking_level)),
          e.criteria_snapshot,
          e.prompt,
          format_real(e.threshold),
          std::to_string(e.targeted_count),
          std::to_string(e.included_count),
          std::to_string(e.excluded_count),
          std::string(to_string(e.confirmation_status)),
          e.active ? "true" : "false"};
}

ExecutionLog execution_from_row(const csv::Row& row) {
  if (row.size() != kExecutionColumns.size()) {
    throw Error(ErrorCode::parse, "llm_executions row has " + std::to_string(row.size()) + " columns, expected 15");
  }
  ExecutionLog e;
  e.execution_id = row[0];
  if (row[1] == "prompt_generation") e.execution_type = ExecutionType::prompt_generation;
  else if (row[1] == "batch_screening") e.execution_type = ExecutionType::batch_screening;
  else throw Error(ErrorCode::parse, "invalid execution_type '" + row[1] + "'");
  e.timestamp = row[2];
  e.model_name = row[3];
  const auto real = [&](const std::string& s) {
    auto v = parse_real(s);
    if (!v) throw Error(ErrorCode::parse, "invalid number '" + s + "' in llm_executions");
    return *v;
  };
  const auto integer = [&](const std::string& s) {
    auto v = parse_int(s);
    if (!v) throw Error(ErrorCode::parse, "invalid integer '" + s + "' in llm_executions");
    return *v;
  };
  e.temperature = real(row[4]);
  e.top_p = real(row[5]);
  auto level = parse_thinking_level(row[6]);
  if (!level) throw Error(ErrorCode::parse, "invalid thinking_level '" + row[6] + "'");
  e.thinking_level = *level;
  e.criteria_snapshot = row[7];
  e.prompt = row[8];
  e.threshold = real(row[9]);
  e.targeted_count = integer(row[10]);
  e.included_count = integer(row[11]);
  e.excluded_count = integer(row[12]);
  if (row[13] == "confirmed") e.confirmation_status = Confirmation::confirmed;
  else if (row[13] == "pending") e.confirmation_status = Confirmation::pending;
  else throw Error(ErrorCode::parse, "invalid confirmation_status '" + row[13] + "'");
  if (row[14] != "true" && row[14] != "false") throw Error(ErrorCode::parse, "invalid active flag '" + row[14] + "'");
  e.active = row[14] == "true";
  return e;
}

std::string format_id(char prefix, long n, int width) {
  char buf[32];
  if (prefix) std::snprintf(buf, sizeof buf, "%c%0*ld", prefix, width, n);
  else std::snprintf(buf, sizeof buf, "%0*ld", width, n);
  return buf;
}

long numeric_tail(std::string_view id) {
  std::size_t i = id.size();
  while (i > 0 && id[i - 1] >= '0' && id[i - 1] <= '9') --i;
  if (i == id.size() || id.size() - i > 15) return 0;
  return std::stol(std::string(id.substr(i)));
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_all(int fd, std::string_view data, const fs::path& p) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::write(fd, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::io, "write to " + p.string() + " failed: " + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

// Appends `data` as one unit. On any failure the file is truncated back to
// its previous length so a partial batch is never visible.
void append_atomic(const fs::path& p, std::string_view data, bool sync) {
  const int fd = ::open(p.c_str(), O_WRONLY | O_APPEND | O_CLOEXEC);
  if (fd < 0) throw Error(ErrorCode::io, "cannot open " + p.string() + ": " + std::strerror(errno));
  struct stat st {};
  if (::fstat(fd, &st) != 0) {
    ::close(fd);
    throw Error(ErrorCode::io, "cannot stat " + p.string());
  }
  const off_t before = st.st_size;
  try {
    write_all(fd, data, p);
    if (sync && ::fdatasync(fd) != 0) throw Error(ErrorCode::io, "fdatasync " + p.string() + " failed");
  } catch (...) {
    if (::ftruncate(fd, before) != 0) {
      // Nothing more can be done; the torn tail is dropped on next open.
    }
    ::close(fd);
    throw;
  }
  ::close(fd);
}

void write_new_file(const fs::path& p, std::string_view data) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot create " + p.string());
  out << data;
  out.flush();
  if (!out) throw Error(ErrorCode::io, "cannot write " + p.string());
}

void replace_file(const fs::path& p, std::string_view data) {
  fs::path tmp = p;
  tmp += ".tmp";
  write_new_file(tmp, data);
  std::error_code ec;
  fs::rename(tmp, p, ec);
  if (ec) throw Error(ErrorCode::io, "cannot replace " + p.string() + ": " + ec.message());
}

// Loads a table, verifying the header. A torn final row (process killed
// mid-append) is ignored; writable handles also cut it off the file.
std::vector<csv::Row> load_table(const fs::path& p, const csv::Row& expected_header, bool repair) {
  const std::string content = read_file(p);
  std::size_t complete = 0;
  auto rows = csv::parse_complete_rows(text::decode_utf8(content), complete);
  const std::size_t bom = content.size() >= 3 && content.compare(0, 3, "\xEF\xBB\xBF") == 0 ? 3 : 0;
  if (repair && complete + bom < content.size()) {
    if (::truncate(p.c_str(), static_cast<off_t>(complete + bom)) != 0) {
      throw Error(ErrorCode::io, "cannot repair torn row in " + p.string());
    }
  }
  if (rows.empty()) throw Error(ErrorCode::parse, p.filename().string() + " has no header row");
  if (rows.front() != expected_header) throw Error(ErrorCode::parse, p.filename().string() + " has an unexpected header");
  rows.erase(rows.begin());
  std::erase_if(rows, [](const csv::Row& r) { return r.size() == 1 && r[0].empty(); });
  return rows;
}

}  // namespace

// ---------------------------------------------------------------------------
// Project

struct Project::Impl {
  fs::path dir;
  OpenMode mode = OpenMode::read_only;
  StoreOptions options;
  Clock* clock = nullptr;
  int lock_fd = -1;

  mutable std::shared_mutex mu;
  mutable Snapshot state;
  std::map<std::string, std::size_t> record_index;  // ref_id -> position in state.records
  long next_ref = 1;
  long next_decision = 1;
  long next_execution = 1;

  ~Impl() {
    if (lock_fd >= 0) {
      ::flock(lock_fd, LOCK_UN);
      ::close(lock_fd);
    }
  }

  fs::path file(const char* name) const { return dir / name; }

  void acquire_lock() {
    lock_fd = ::open(file(kLockFile).c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (lock_fd < 0) throw Error(ErrorCode::io, "cannot open lock file in " + dir.string());
    if (::flock(lock_fd, LOCK_EX | LOCK_NB) != 0) {
      ::close(lock_fd);
      lock_fd = -1;
      throw Error(ErrorCode::locked, "project " + dir.string() + " is locked by another writer");
    }
  }

  void load() {
    const bool repair = mode == OpenMode::read_write;
    Snapshot s;
    for (auto& row : load_table(file(kReferencesFile), header_row(kReferenceColumns), repair)) {
      s.records.push_back(record_from_row(row));
    }
    std::stable_sort(s.records.begin(), s.records.end(),
                     [](const Record& a, const Record& b) { return id_less(a.ref_id, b.ref_id); });
    for (auto& row : load_table(file(kDecisionsFile), header_row(kDecisionColumns), repair)) {
      s.decisions.push_back(decision_from_row(row));
    }
    for (auto& row : load_table(file(kConfigFile), csv::Row{"key", "value"}, repair)) {
      if (row.size() != 2) throw Error(ErrorCode::parse, "config row must have 2 columns");
      s.config[row[0]] = row[1];
    }
    std::map<std::string, std::size_t> exec_pos;
    for (auto& row : load_table(file(kExecutionsFile), header_row(kExecutionColumns), repair)) {
      ExecutionLog e = execution_from_row(row);
      if (auto it = exec_pos.find(e.execution_id); it != exec_pos.end()) {
        s.executions[it->second] = std::move(e);
      } else {
        exec_pos[e.execution_id] = s.executions.size();
        s.executions.push_back(std::move(e));
      }
    }
    state = std::move(s);
    reindex();
  }

  void reindex() {
    record_index.clear();
    next_ref = 1;
    next_decision = 1;
    next_execution = 1;
    for (std::size_t i = 0; i < state.records.size(); ++i) {
      record_index[state.records[i].ref_id] = i;
      next_ref = std::max(next_ref, numeric_tail(state.records[i].ref_id) + 1);
    }
    for (const auto& d : state.decisions) next_decision = std::max(next_decision, numeric_tail(d.decision_id) + 1);
    for (const auto& e : state.executions) next_execution = std::max(next_execution, numeric_tail(e.execution_id) + 1);
  }

  void refresh_if_reader() const {
    if (mode == OpenMode::read_only) const_cast<Impl*>(this)->load();
  }

  void require_writable() const {
    if (mode != OpenMode::read_write) throw Error(ErrorCode::locked, "project opened read-only");
  }

  bool has_record(std::string_view ref_id) const { return record_index.contains(std::string(ref_id)); }

  void validate_decision(const Decision& d) const {
    if (!has_record(d.ref_id)) throw Error(ErrorCode::not_found, "unknown ref_id '" + d.ref_id + "'");
    const auto reviewer = text::trim(d.reviewer_id);
    if (reviewer.empty() || reviewer.size() != d.reviewer_id.size()) invalid("reviewer_id must be non-empty and unpadded");
    for (char c : d.reviewer_id) {
      if (static_cast<unsigned char>(c) < 0x20) invalid("reviewer_id contains control characters");
    }
    if (is_llm_reviewer(d.reviewer_id)) {
      const auto exec_id = std::string_view(d.reviewer_id).substr(kLlmReviewerPrefix.size());
      if (!state.execution(exec_id)) {
        throw Error(ErrorCode::not_found, "LLM reviewer refers to unknown execution '" + std::string(exec_id) + "'");
      }
    }
  }

  std::vector<std::string> append_decisions(std::vector<Decision> ds) {
    require_writable();
    std::string buf;
    std::vector<std::string> ids;
    long next = next_decision;
    const std::string now = format_timestamp(clock->now());
    for (auto& d : ds) {
      validate_decision(d);
      d.decision_id = format_id('D', next++, 8);
      if (d.timestamp.empty()) d.timestamp = now;
      if (d.client_version.empty()) d.client_version = std::string("tiab-screen/") + kVersion;
      buf += csv::format_row(decision_to_row(d));
      ids.push_back(d.decision_id);
    }
    if (ds.empty()) return ids;
    append_atomic(file(kDecisionsFile), buf, options.fsync);
    next_decision = next;
    for (auto& d : ds) state.decisions.push_back(std::move(d));
    return ids;
  }

  void append_execution_rows(const std::vector<ExecutionLog>& rows) {
    std::string buf;
    for (const auto& e : rows) buf += csv::format_row(execution_to_row(e));
    append_atomic(file(kExecutionsFile), buf, options.fsync);
    for (const auto& e : rows) {
      bool replaced = false;
      for (auto& cur : state.executions) {
        if (cur.execution_id == e.execution_id) {
          cur = e;
          replaced = true;
        }
      }
      if (!replaced) state.executions.push_back(e);
      next_execution = std::max(next_execution, numeric_tail(e.execution_id) + 1);
    }
  }

  // Rows needed so that `target` (possibly nullopt) is the only active one.
  std::vector<ExecutionLog> activation_rows(const std::optional<std::string>& target) const {
    std::vector<ExecutionLog> rows;
    for (const auto& e : state.executions) {
      const bool want = target && e.execution_id == *target;
      if (e.active != want) {
        ExecutionLog copy = e;
        copy.active = want;
        rows.push_back(std::move(copy));
      }
    }
    return rows;
  }
};

Project::Project(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
Project::Project(Project&&) noexcept = default;
Project& Project::operator=(Project&&) noexcept = default;
Project::~Project() = default;

Project Project::create(const fs::path& dir, StoreOptions options) {
  std::error_code ec;
  if (fs::exists(dir, ec)) {
    if (!fs::is_directory(dir, ec)) throw Error(ErrorCode::exists, dir.string() + " exists and is not a directory");
    if (!fs::is_empty(dir, ec)) throw Error(ErrorCode::exists, dir.string() + " exists and is not empty");
  } else {
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::io, "cannot create " + dir.string() + ": " + ec.message());
  }
  auto impl = std::make_unique<Impl>();
  impl->dir = dir;
  impl->mode = OpenMode::read_write;
  impl->options = options;
  impl->clock = options.clock ? options.clock : &system_clock();
  impl->acquire_lock();

  write_new_file(impl->file(kReferencesFile), csv::format_row(header_row(kReferenceColumns)));
  write_new_file(impl->file(kDecisionsFile), csv::format_row(header_row(kDecisionColumns)));
  std::string config = csv::format_row({"key", "value"});
  for (const auto& k : recognized_config_keys()) {
    config += csv::format_row({std::string(k.key), std::string(k.default_value)});
  }
  write_new_file(impl->file(kConfigFile), config);
  write_new_file(impl->file(kExecutionsFile), csv::format_row(header_row(kExecutionColumns)));
  impl->load();
  return Project(std::move(impl));
}

Project Project::open(const fs::path& dir, OpenMode mode, StoreOptions options) {
  for (const char* f : {kReferencesFile, kDecisionsFile, kConfigFile, kExecutionsFile}) {
    if (!fs::exists(dir / f)) throw Error(ErrorCode::not_found, dir.string() + " is not a project (missing " + f + ")");
  }
  auto impl = std::make_unique<Impl>();
  impl->dir = dir;
  impl->mode = mode;
  impl->options = options;
  impl->clock = options.clock ? options.clock : &system_clock();
  if (mode == OpenMode::read_write) impl->acquire_lock();
  impl->load();
  return Project(std::move(impl));
}

const fs::path& Project::path() const noexcept { return impl_->dir; }
bool Project::writable() const noexcept { return impl_->mode == OpenMode::read_write; }
Clock& Project::clock() const noexcept { return *impl_->clock; }

Snapshot Project::snapshot() const {
  if (impl_->mode == OpenMode::read_only) {
    std::unique_lock lock(impl_->mu);
    impl_->refresh_if_reader();
    return impl_->state;
  }
  std::shared_lock lock(impl_->mu);
  return impl_->state;
}

std::size_t Project::record_count() const {
  std::shared_lock lock(impl_->mu);
  return impl_->state.records.size();
}

std::optional<Record> Project::record(std::string_view ref_id) const {
  std::shared_lock lock(impl_->mu);
  auto it = impl_->record_index.find(std::string(ref_id));
  if (it == impl_->record_index.end()) return std::nullopt;
  return impl_->state.records[it->second];
}

std::vector<std::string> Project::append_records(std::vector<Record> records) {
  std::unique_lock lock(impl_->mu);
  impl_->require_writable();
  std::vector<std::string> ids;
  if (records.empty()) return ids;
  std::string buf;
  long next = impl_->next_ref;
  for (auto& r : records) {
    r.ref_id = format_id(0, next++, 6);
    buf += csv::format_row(record_to_row(r));
    ids.push_back(r.ref_id);
  }
  append_atomic(impl_->file(kReferencesFile), buf, impl_->options.fsync);
  for (auto& r : records) {
    impl_->record_index[r.ref_id] = impl_->state.records.size();
    impl_->state.records.push_back(std::move(r));
  }
  impl_->next_ref = next;
  return ids;
}

std::string Project::append_decision(Decision d) {
  std::unique_lock lock(impl_->mu);
  return impl_->append_decisions({std::move(d)}).front();
}

std::vector<std::string> Project::append_decisions(std::vector<Decision> ds) {
  std::unique_lock lock(impl_->mu);
  return impl_->append_decisions(std::move(ds));
}

Status Project::effective_status(std::string_view ref_id, std::optional<std::string> reviewer) const {
  const Snapshot s = snapshot();
  StatusScope scope = s.all_reviewers();
  scope.reviewer = std::move(reviewer);
  return s.effective_status(ref_id, scope);
}

std::vector<std::string> Project::detect_conflicts() const {
  const Snapshot s = snapshot();
  std::vector<std::string> out;
  for (const auto& [ref_id, status] : s.effective_statuses(s.all_reviewers())) {
    if (status == Status::conflict) out.push_back(ref_id);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return id_less(a, b); });
  return out;
}

std::optional<std::string> Project::config_get(std::string_view key) const {
  const Snapshot s = snapshot();
  if (auto it = s.config.find(std::string(key)); it != s.config.end()) return it->second;
  return config_default(key);
}

void Project::config_set(std::string_view key, std::string_view value) {
  validate_config(key, value);
  std::unique_lock lock(impl_->mu);
  impl_->require_writable();
  append_atomic(impl_->file(kConfigFile), csv::format_row({std::string(key), std::string(value)}), impl_->options.fsync);
  impl_->state.config[std::string(key)] = std::string(value);
}

std::string Project::next_execution_id() const {
  std::shared_lock lock(impl_->mu);
  return format_id('E', impl_->next_execution, 6);
}

void Project::log_execution(ExecutionLog e) {
  std::unique_lock lock(impl_->mu);
  impl_->require_writable();
  if (e.execution_id.empty()) e.execution_id = format_id('E', impl_->next_execution, 6);
  if (e.timestamp.empty()) e.timestamp = format_timestamp(impl_->clock->now());
  validate(e);
  if (impl_->state.execution(e.execution_id)) {
    throw Error(ErrorCode::conflict, "execution '" + e.execution_id + "' already exists");
  }
  std::vector<ExecutionLog> rows;
  if (e.active) {
    rows = impl_->activation_rows(std::nullopt);
  }
  rows.push_back(e);
  impl_->append_execution_rows(rows);
}

void Project::update_execution(ExecutionLog e) {
  std::unique_lock lock(impl_->mu);
  impl_->require_writable();
  const ExecutionLog* cur = impl_->state.execution(e.execution_id);
  if (!cur) throw Error(ErrorCode::not_found, "unknown execution '" + e.execution_id + "'");
  if (e.timestamp.empty()) e.timestamp = cur->timestamp;
  validate(e);
  std::vector<ExecutionLog> rows;
  if (e.active) {
    for (auto& r : impl_->activation_rows(e.execution_id)) {
      if (r.execution_id != e.execution_id) rows.push_back(std::move(r));
    }
  }
  rows.push_back(e);
  impl_->append_execution_rows(rows);
}

void Project::set_active_execution(std::string_view execution_id) {
  std::unique_lock lock(impl_->mu);
  impl_->require_writable();
  const ExecutionLog* target = impl_->state.execution(execution_id);
  if (!target) throw Error(ErrorCode::not_found, "unknown execution '" + std::string(execution_id) + "'");
  if (target->execution_type != ExecutionType::batch_screening) {
    invalid("only batch_screening executions can be active");
  }
  auto rows = impl_->activation_rows(std::string(execution_id));
  if (!rows.empty()) impl_->append_execution_rows(rows);
}

std::optional<ExecutionLog> Project::execution(std::string_view execution_id) const {
  const Snapshot s = snapshot();
  if (const auto* e = s.execution(execution_id)) return *e;
  return std::nullopt;
}

std::vector<ExecutionLog> Project::executions() const { return snapshot().executions; }

std::map<std::string, std::size_t> Project::assign_screening_sets() {
  std::unique_lock lock(impl_->mu);
  impl_->require_writable();
  auto& st = impl_->state;
  const long calibration = parse_int(st.config_value("assign.calibration_size")).value_or(0);
  const long groups = std::max(1L, parse_int(st.config_value("assign.group_count")).value_or(1));

  std::vector<Record> updated = st.records;
  std::map<std::string, std::size_t> counts;
  long idx = 0;
  for (auto& r : updated) {
    if (idx < calibration) {
      r.screening_set = "calibration";
    } else {
      r.screening_set = "group-" + std::to_string((idx - calibration) % groups + 1);
    }
    ++counts[r.screening_set];
    ++idx;
  }
  std::string content = csv::format_row(header_row(kReferenceColumns));
  for (const auto& r : updated) content += csv::format_row(record_to_row(r));
  replace_file(impl_->file(kReferencesFile), content);
  st.records = std::move(updated);
  impl_->reindex();
  return counts;
}

}  // namespace tiab
