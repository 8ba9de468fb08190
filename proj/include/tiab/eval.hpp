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
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tiab/ranker.hpp"
#include "tiab/store.hpp"

// Screening metrics and the cross-validation ranking harness.
namespace tiab::eval {

struct ConfusionCounts {
  long tp = 0;
  long fp = 0;
  long tn = 0;
  long fn = 0;

  long total() const noexcept { return tp + fp + tn + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

/// `truth` and `predicted` must have identical key sets (Error(validation)).
ConfusionCounts confusion(const std::map<std::string, bool>& truth, const std::map<std::string, bool>& predicted);
ConfusionCounts confusion(const std::vector<bool>& truth, const std::vector<bool>& predicted);

// Rates return nullopt for 0/0.
std::optional<double> sensitivity(const ConfusionCounts& c);
std::optional<double> specificity(const ConfusionCounts& c);
std::optional<double> precision(const ConfusionCounts& c);
std::optional<double> prevalence(const ConfusionCounts& c);

/// (1 + b^2) P R / (b^2 P + R). Throws Error(undefined) when P = R = 0 and
/// Error(validation) for values outside [0,1] or beta <= 0.
double fbeta(double precision, double recall, double beta);

struct ScoredLabel {
  std::string ref_id;
  double score = 0.0;
  bool relevant = false;
};

struct WssResult {
  double wss = 0.0;
  long n_star = 0;        // records screened to reach the recall target
  long target_count = 0;  // ceil(r * R)
  long total = 0;         // N
  long relevant = 0;      // R
};

/// Screens in descending score order (ties by ascending ref_id) until
/// ceil(r * R) relevant records are found; WSS = (N - n*) / N - (1 - r).
/// Throws Error(undefined) when there is no relevant record.
WssResult wss_at_recall(std::vector<ScoredLabel> scores, double target_recall);

// ---------------------------------------------------------------------------

/// SplitMix64; the fold shuffle is defined in terms of this generator so
/// other implementations can reproduce the plans exactly.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}
  std::uint64_t next() noexcept;

 private:
  std::uint64_t state_;
};

/// Fisher-Yates from the back: for i = n-1 .. 1, j = next() % (i + 1).
template <typename T>
void shuffle(std::vector<T>& v, SplitMix64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.next() % i);
    std::swap(v[i - 1], v[j]);
  }
}

inline constexpr std::uint64_t kDefaultSeed = 42;

struct FoldPlan {
  int k = 10;
  std::uint64_t seed = kDefaultSeed;
  std::map<std::string, int> assignment;  // ref_id -> fold

  /// ref_ids per fold, in dealing order.
  std::vector<std::vector<std::string>> folds;
};

/// Sorts ids (natural order), shuffles positives then negatives with one
/// generator, deals each list round-robin starting at fold 0. Throws
/// Error(validation) when k < 2 or a class is absent.
FoldPlan stratified_folds(const std::map<std::string, bool>& truth, int k, std::uint64_t seed = kDefaultSeed);

/// "ref_id,fold" rows in natural ref_id order.
std::string plan_to_csv(const FoldPlan& plan);

/// |top-k(a) ∩ top-k(b)| / k. Throws Error(validation) when k < 1 or k
/// exceeds either ranking.
double topk_overlap(const std::vector<std::string>& rank_a, const std::vector<std::string>& rank_b, std::size_t k);

// ---------------------------------------------------------------------------

struct LabeledRecord {
  std::string ref_id;
  std::string title;
  std::string abstract;
  bool relevant = false;
};

/// CSV with columns ref_id,title,abstract,label (label 0 or 1).
std::vector<LabeledRecord> parse_dataset(std::string_view csv_text);
std::vector<LabeledRecord> load_dataset(const std::filesystem::path& file);

/// CSV with ref_id and label columns; other columns ignored.
std::map<std::string, bool> parse_truth(std::string_view csv_text);

struct FoldRanking {
  int fold = 0;
  ranker::RankedQueue ranking;
};

struct FoldExperimentOptions {
  int k = 10;
  std::uint64_t seed = kDefaultSeed;
  double alpha = ranker::kDefaultAlpha;
  std::size_t overlap_k = 100;
  std::optional<std::filesystem::path> output_dir;     // writes fold_XX.csv
  std::optional<std::filesystem::path> reference_dir;  // compares against fold_XX.csv
};

struct FoldExperimentReport {
  FoldPlan plan;
  std::vector<FoldRanking> folds;
  /// Per fold, when a reference is given: overlap at min(overlap_k, fold size).
  std::vector<double> overlaps;
  std::vector<std::size_t> overlap_ks;
};

/// Vocabulary fitted on every record; for each fold the model trains on all
/// out-of-fold records with their true labels and ranks the fold.
FoldExperimentReport run_fold_experiment(const std::vector<LabeledRecord>& dataset, const FoldExperimentOptions& options);

/// "ref_id,score,rank" with rank starting at 1.
std::string ranking_to_csv(const ranker::RankedQueue& ranking);
/// ref_ids in rank order.
std::vector<std::string> read_ranking_csv(std::string_view csv_text);
std::string fold_file_name(int fold);

// ---------------------------------------------------------------------------

struct MetricsReport {
  ConfusionCounts counts;
  std::optional<double> sensitivity;
  std::optional<double> specificity;
  std::optional<double> precision;
  std::optional<double> prevalence;
  std::optional<double> f_beta;
  double beta = 7.0;
  std::optional<WssResult> wss;
  double wss_recall = 0.95;
};

/// `scores` (ref_id -> score) is optional; WSS is reported when present.
MetricsReport metrics_report(const std::map<std::string, bool>& truth, const std::map<std::string, bool>& predicted,
                             const std::optional<std::map<std::string, double>>& scores = std::nullopt,
                             double beta = 7.0, double wss_recall = 0.95);

/// Human-readable block, percentages to one decimal.
std::string format_report_text(const MetricsReport& r);
/// Two-line CSV: header and values (empty for undefined).
std::string format_report_csv(const MetricsReport& r);

enum class PredictionSource { llm, status };

/// Predictions for a project: the active LLM execution's latest judgments
/// at its threshold (scores = probabilities), or, for `status`, the
/// all-reviewer effective status where include, maybe and conflict count
/// as predicted include. Only ref_ids present in `truth` are kept; every
/// truth id must exist in the project.
MetricsReport project_metrics(const Snapshot& snapshot, const std::map<std::string, bool>& truth,
                              std::optional<PredictionSource> source = std::nullopt);

}  // namespace tiab::eval
