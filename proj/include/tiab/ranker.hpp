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
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stop_token>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tiab/store.hpp"

// Relevance ranking for the active-learning queue: unigram TF-IDF features,
// multinomial Naive Bayes, certainty (max-probability) ordering. Everything
// here is deterministic; no random state exists anywhere in the module.
namespace tiab::ranker {

inline constexpr double kDefaultAlpha = 3.822;

/// Lowercase, split on non-alphanumeric code points, keep tokens of two or
/// more code points.
std::vector<std::string> tokenize(std::string_view text);

struct Vocabulary {
  std::vector<std::string> terms;         // sorted; position = column index
  std::vector<std::int32_t> doc_freq;     // parallel to terms, each >= 1
  std::unordered_map<std::string, std::int32_t> index;
  std::int64_t total_documents = 0;

  std::size_t size() const noexcept { return terms.size(); }
  std::optional<std::int32_t> find(std::string_view term) const;
  /// Smoothed inverse document frequency ln((1 + N) / (1 + df)) + 1.
  double idf(std::int32_t column) const;
};

/// Sparse vector with strictly ascending column indices.
struct DocVector {
  std::vector<std::pair<std::int32_t, double>> entries;

  bool is_zero() const noexcept { return entries.empty(); }
};

/// Raw in-vocabulary term counts; out-of-vocabulary tokens dropped.
using TermCounts = std::vector<std::pair<std::int32_t, double>>;

/// Throws Error(validation) when no text yields a token.
Vocabulary fit_vocabulary(std::span<const std::string> texts);
TermCounts count_terms(std::string_view text, const Vocabulary& vocab);
/// count x idf, then L2-normalized. All-zero input stays the zero vector.
DocVector weight_counts(const TermCounts& counts, const Vocabulary& vocab);
std::vector<DocVector> tfidf_transform(std::span<const std::string> texts, const Vocabulary& vocab);

enum ClassIndex : int { kIrrelevant = 0, kRelevant = 1 };

struct NbModel {
  std::array<double, 2> log_prior{};
  std::array<std::vector<double>, 2> feature_log_prob;  // per class, vocabulary-sized
  double alpha = kDefaultAlpha;

  std::size_t vocabulary_size() const noexcept { return feature_log_prob[0].size(); }
};

/// Multinomial NB over real-valued feature weights. Optional per-document
/// sample weights (default 1) scale both class counts and feature sums.
/// Throws Error(cold_start) unless both classes are present, and
/// Error(validation) for alpha <= 0 or mismatched sizes.
NbModel train_nb(std::span<const DocVector> vectors, std::span<const bool> relevant, double alpha,
                 std::size_t vocabulary_size, std::span<const double> sample_weights = {});

/// log P(relevant | x) - log P(irrelevant | x).
double log_odds(const NbModel& model, const DocVector& v);
/// P(relevant | x) by log-sum-exp normalization.
double predict_proba(const NbModel& model, const DocVector& v);
std::vector<double> predict_proba(const NbModel& model, std::span<const DocVector> vectors);

// ---------------------------------------------------------------------------

struct Document {
  std::string ref_id;
  std::string text;
};

struct RankedItem {
  std::string ref_id;
  double probability = 0.0;
  double log_odds = 0.0;
};

/// Descending relevance; ties by ascending ref_id.
using RankedQueue = std::vector<RankedItem>;

enum class Balance { none, dynamic };

struct RankOptions {
  double alpha = kDefaultAlpha;
  Balance balance = Balance::none;
  std::stop_token stop;  // a stop request aborts with Error(conflict)
};

/// Per-document sample weights for `balance`; empty for Balance::none.
std::vector<double> balance_weights(std::span<const bool> labels, Balance balance);

/// Fits the vocabulary on every document, trains on the labeled ones
/// (ref_id -> relevant?) and returns the unlabeled ones in certainty order.
RankedQueue rank_documents(std::span<const Document> documents, const std::map<std::string, bool>& labels,
                           const RankOptions& options = {});

/// Scores `targets` with a model trained on `training` (labels parallel).
/// The vocabulary is fitted on `vocabulary_corpus`.
RankedQueue rank_with_training(std::span<const Document> vocabulary_corpus, std::span<const Document> training,
                               std::span<const bool> training_labels, std::span<const Document> targets,
                               const RankOptions& options = {});

/// Human include/exclude decisions as ranking labels (include = relevant).
/// `reviewer` narrows to one reviewer's latest decisions.
std::map<std::string, bool> labels_from_snapshot(const Snapshot& snapshot,
                                                 const std::optional<std::string>& reviewer = std::nullopt);

std::vector<Document> documents_from_snapshot(const Snapshot& snapshot);

RankOptions options_from_config(const Snapshot& snapshot);

/// Ranks the snapshot's unlabeled records. Throws Error(cold_start) until at
/// least one relevant and one irrelevant label exist.
RankedQueue rank_unlabeled(const Snapshot& snapshot, const std::optional<std::string>& reviewer = std::nullopt,
                           std::stop_token stop = {});

/// Retrains after a persisted decision and re-ranks. With
/// ranker.retrain_every = k > 1 the previous model is reused until k new
/// labels have accumulated.
class ActiveLearner {
 public:
  RankedQueue step(const Snapshot& snapshot, const std::optional<std::string>& reviewer = std::nullopt);

 private:
  std::optional<NbModel> model_;
  std::optional<Vocabulary> vocab_;
  std::size_t labels_at_training_ = 0;
  std::size_t records_at_training_ = 0;
};

/// Import-order fallback used while the ranker is cold.
RankedQueue import_order(const Snapshot& snapshot, const std::map<std::string, bool>& labels);

}  // namespace tiab::ranker
