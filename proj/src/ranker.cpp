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

#include "tiab/ranker.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "tiab/error.hpp"
#include "tiab/record.hpp"
#include "tiab/text.hpp"

namespace tiab::ranker {

std::vector<std::string> tokenize(std::string_view input) {
  std::vector<std::string> tokens;
  std::string cur;
  std::size_t cur_len = 0;
  const auto flush = [&] {
    if (cur_len >= 2) tokens.push_back(cur);
    cur.clear();
    cur_len = 0;
  };
  for (char32_t cp : text::to_u32(text::lower(input))) {
    if (text::is_alnum(cp)) {
      text::append_utf8(cur, cp);
      ++cur_len;
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

std::optional<std::int32_t> Vocabulary::find(std::string_view term) const {
  auto it = index.find(std::string(term));
  if (it == index.end()) return std::nullopt;
  return it->second;
}

double Vocabulary::idf(std::int32_t column) const {
  const double n = static_cast<double>(total_documents);
  const double df = static_cast<double>(doc_freq[static_cast<std::size_t>(column)]);
  return std::log((1.0 + n) / (1.0 + df)) + 1.0;
}

Vocabulary fit_vocabulary(std::span<const std::string> texts) {
  std::map<std::string, std::int32_t> df;
  for (const auto& t : texts) {
    auto toks = tokenize(t);
    std::sort(toks.begin(), toks.end());
    toks.erase(std::unique(toks.begin(), toks.end()), toks.end());
    for (auto& tok : toks) ++df[std::move(tok)];
  }
  if (df.empty()) throw Error(ErrorCode::validation, "cannot fit a vocabulary: no tokens in any document");
  Vocabulary v;
  v.total_documents = static_cast<std::int64_t>(texts.size());
  v.terms.reserve(df.size());
  v.doc_freq.reserve(df.size());
  for (auto& [term, count] : df) {
    v.index.emplace(term, static_cast<std::int32_t>(v.terms.size()));
    v.terms.push_back(term);
    v.doc_freq.push_back(count);
  }
  return v;
}

TermCounts count_terms(std::string_view input, const Vocabulary& vocab) {
  std::map<std::int32_t, double> counts;
  for (const auto& tok : tokenize(input)) {
    if (auto col = vocab.find(tok)) counts[*col] += 1.0;
  }
  return TermCounts(counts.begin(), counts.end());
}

DocVector weight_counts(const TermCounts& counts, const Vocabulary& vocab) {
  DocVector v;
  v.entries.reserve(counts.size());
  double norm2 = 0.0;
  for (const auto& [col, count] : counts) {
    if (count == 0.0) continue;
    const double w = count * vocab.idf(col);
    v.entries.emplace_back(col, w);
    norm2 += w * w;
  }
  if (norm2 > 0.0) {
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& e : v.entries) e.second *= inv;
  }
  return v;
}

std::vector<DocVector> tfidf_transform(std::span<const std::string> texts, const Vocabulary& vocab) {
  std::vector<DocVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(weight_counts(count_terms(t, vocab), vocab));
  return out;
}

NbModel train_nb(std::span<const DocVector> vectors, std::span<const bool> relevant, double alpha,
                 std::size_t vocabulary_size, std::span<const double> sample_weights) {
  if (!(alpha > 0.0)) throw Error(ErrorCode::validation, "smoothing alpha must be positive");
  if (vectors.size() != relevant.size()) throw Error(ErrorCode::validation, "vectors and labels differ in length");
  if (!sample_weights.empty() && sample_weights.size() != vectors.size()) {
    throw Error(ErrorCode::validation, "sample weights and vectors differ in length");
  }
  std::array<double, 2> class_weight{0.0, 0.0};
  std::array<std::vector<double>, 2> feature_sum{std::vector<double>(vocabulary_size, 0.0),
                                                 std::vector<double>(vocabulary_size, 0.0)};
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    const int c = relevant[i] ? kRelevant : kIrrelevant;
    const double sw = sample_weights.empty() ? 1.0 : sample_weights[i];
    class_weight[c] += sw;
    for (const auto& [col, w] : vectors[i].entries) {
      if (static_cast<std::size_t>(col) >= vocabulary_size) {
        throw Error(ErrorCode::validation, "feature index outside the vocabulary");
      }
      feature_sum[c][static_cast<std::size_t>(col)] += sw * w;
    }
  }
  if (class_weight[kRelevant] <= 0.0 || class_weight[kIrrelevant] <= 0.0) {
    throw Error(ErrorCode::cold_start, "training needs at least one relevant and one irrelevant label");
  }
  NbModel m;
  m.alpha = alpha;
  const double total = class_weight[0] + class_weight[1];
  for (int c = 0; c < 2; ++c) {
    m.log_prior[c] = std::log(class_weight[c] / total);
    const double denom =
        std::accumulate(feature_sum[c].begin(), feature_sum[c].end(), 0.0) + alpha * static_cast<double>(vocabulary_size);
    const double log_denom = std::log(denom);
    auto& lp = m.feature_log_prob[c];
    lp.resize(vocabulary_size);
    for (std::size_t t = 0; t < vocabulary_size; ++t) lp[t] = std::log(feature_sum[c][t] + alpha) - log_denom;
  }
  return m;
}

namespace {

std::array<double, 2> joint_log_likelihood(const NbModel& m, const DocVector& v) {
  std::array<double, 2> jll = m.log_prior;
  for (const auto& [col, w] : v.entries) {
    jll[kIrrelevant] += w * m.feature_log_prob[kIrrelevant][static_cast<std::size_t>(col)];
    jll[kRelevant] += w * m.feature_log_prob[kRelevant][static_cast<std::size_t>(col)];
  }
  return jll;
}

}  // namespace

double log_odds(const NbModel& model, const DocVector& v) {
  const auto jll = joint_log_likelihood(model, v);
  return jll[kRelevant] - jll[kIrrelevant];
}

double predict_proba(const NbModel& model, const DocVector& v) {
  const auto jll = joint_log_likelihood(model, v);
  const double hi = std::max(jll[0], jll[1]);
  const double lse = hi + std::log(std::exp(jll[0] - hi) + std::exp(jll[1] - hi));
  return std::clamp(std::exp(jll[kRelevant] - lse), 0.0, 1.0);
}

std::vector<double> predict_proba(const NbModel& model, std::span<const DocVector> vectors) {
  std::vector<double> out;
  out.reserve(vectors.size());
  for (const auto& v : vectors) out.push_back(predict_proba(model, v));
  return out;
}

// ---------------------------------------------------------------------------

std::vector<double> balance_weights(std::span<const bool> labels, Balance balance) {
  if (balance == Balance::none) return {};
  // Class-balanced re-weighting: both classes carry equal total weight.
  const auto n_rel = static_cast<double>(std::count(labels.begin(), labels.end(), true));
  const auto n_irr = static_cast<double>(labels.size()) - n_rel;
  std::vector<double> w(labels.size(), 1.0);
  if (n_rel == 0.0 || n_irr == 0.0) return w;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    w[i] = labels[i] ? (n_irr + n_rel) / (2.0 * n_rel) : (n_irr + n_rel) / (2.0 * n_irr);
  }
  return w;
}

namespace {

void check_stop(const std::stop_token& stop) {
  if (stop.stop_requested()) throw Error(ErrorCode::conflict, "ranking superseded by a newer decision");
}


void sort_queue(RankedQueue& q) {
  std::stable_sort(q.begin(), q.end(), [](const RankedItem& a, const RankedItem& b) {
    if (a.log_odds != b.log_odds) return a.log_odds > b.log_odds;
    return id_less(a.ref_id, b.ref_id);
  });
}

RankedQueue score(const NbModel& model, const Vocabulary& vocab, std::span<const Document> targets,
                  const std::stop_token& stop) {
  RankedQueue q;
  q.reserve(targets.size());
  for (const auto& d : targets) {
    check_stop(stop);
    const DocVector v = weight_counts(count_terms(d.text, vocab), vocab);
    q.push_back({d.ref_id, predict_proba(model, v), log_odds(model, v)});
  }
  sort_queue(q);
  return q;
}

NbModel train_on(const Vocabulary& vocab, std::span<const Document> training, std::span<const bool> labels,
                 const RankOptions& options) {
  std::vector<DocVector> vecs;
  vecs.reserve(training.size());
  for (const auto& d : training) {
    check_stop(options.stop);
    vecs.push_back(weight_counts(count_terms(d.text, vocab), vocab));
  }
  const auto weights = balance_weights(labels, options.balance);
  return train_nb(vecs, labels, options.alpha, vocab.size(), weights);
}

Vocabulary vocabulary_of(std::span<const Document> docs) {
  std::vector<std::string> texts;
  texts.reserve(docs.size());
  for (const auto& d : docs) texts.push_back(d.text);
  return fit_vocabulary(texts);
}

void require_both_classes(std::span<const bool> labels) {
  const bool has_rel = std::find(labels.begin(), labels.end(), true) != labels.end();
  const bool has_irr = std::find(labels.begin(), labels.end(), false) != labels.end();
  if (!has_rel || !has_irr) {
    throw Error(ErrorCode::cold_start, "ranking needs at least one relevant and one irrelevant label");
  }
}

}  // namespace

RankedQueue rank_with_training(std::span<const Document> vocabulary_corpus, std::span<const Document> training,
                               std::span<const bool> training_labels, std::span<const Document> targets,
                               const RankOptions& options) {
  if (training.size() != training_labels.size()) throw Error(ErrorCode::validation, "training labels mismatch");
  require_both_classes(training_labels);
  const Vocabulary vocab = vocabulary_of(vocabulary_corpus);
  const NbModel model = train_on(vocab, training, training_labels, options);
  return score(model, vocab, targets, options.stop);
}

RankedQueue rank_documents(std::span<const Document> documents, const std::map<std::string, bool>& labels,
                           const RankOptions& options) {
  std::vector<Document> training;
  std::vector<bool> training_labels;
  std::vector<Document> targets;
  for (const auto& d : documents) {
    if (auto it = labels.find(d.ref_id); it != labels.end()) {
      training.push_back(d);
      training_labels.push_back(it->second);
    } else {
      targets.push_back(d);
    }
  }
  // std::vector<bool> has no contiguous storage; copy into a span-able buffer.
  std::unique_ptr<bool[]> buf(new bool[training_labels.size()]);
  std::copy(training_labels.begin(), training_labels.end(), buf.get());
  return rank_with_training(documents, training, std::span<const bool>(buf.get(), training_labels.size()), targets,
                            options);
}

std::map<std::string, bool> labels_from_snapshot(const Snapshot& snapshot, const std::optional<std::string>& reviewer) {
  StatusScope scope;
  scope.humans_only = true;
  scope.reviewer = reviewer;
  std::map<std::string, bool> labels;
  for (const auto& [ref_id, status] : snapshot.effective_statuses(scope)) {
    if (status == Status::include) labels[ref_id] = true;
    else if (status == Status::exclude) labels[ref_id] = false;
  }
  return labels;
}

std::vector<Document> documents_from_snapshot(const Snapshot& snapshot) {
  std::vector<Document> docs;
  docs.reserve(snapshot.records.size());
  for (const auto& r : snapshot.records) docs.push_back({r.ref_id, build_corpus_text(r)});
  return docs;
}

RankOptions options_from_config(const Snapshot& snapshot) {
  RankOptions o;
  o.alpha = std::stod(snapshot.config_value("ranker.alpha"));
  o.balance = snapshot.config_value("ranker.balance") == "dynamic" ? Balance::dynamic : Balance::none;
  return o;
}

RankedQueue rank_unlabeled(const Snapshot& snapshot, const std::optional<std::string>& reviewer, std::stop_token stop) {
  RankOptions options = options_from_config(snapshot);
  options.stop = std::move(stop);
  return rank_documents(documents_from_snapshot(snapshot), labels_from_snapshot(snapshot, reviewer), options);
}

RankedQueue ActiveLearner::step(const Snapshot& snapshot, const std::optional<std::string>& reviewer) {
  const auto labels = labels_from_snapshot(snapshot, reviewer);
  const auto docs = documents_from_snapshot(snapshot);
  const RankOptions options = options_from_config(snapshot);
  const auto every = static_cast<std::size_t>(std::max(1L, std::stol(snapshot.config_value("ranker.retrain_every"))));

  const bool stale = !model_ || docs.size() != records_at_training_ || labels.size() < labels_at_training_ ||
                     labels.size() - labels_at_training_ >= every;
  if (stale) {
    std::vector<Document> training;
    std::unique_ptr<bool[]> flags(new bool[labels.size()]);
    std::size_t n = 0;
    for (const auto& d : docs) {
      if (auto it = labels.find(d.ref_id); it != labels.end()) {
        training.push_back(d);
        flags[n++] = it->second;
      }
    }
    const std::span<const bool> span(flags.get(), n);
    require_both_classes(span);
    vocab_ = vocabulary_of(docs);
    model_ = train_on(*vocab_, training, span, options);
    labels_at_training_ = labels.size();
    records_at_training_ = docs.size();
  }
  std::vector<Document> targets;
  for (const auto& d : docs) {
    if (!labels.contains(d.ref_id)) targets.push_back(d);
  }
  return score(*model_, *vocab_, targets, {});
}

RankedQueue import_order(const Snapshot& snapshot, const std::map<std::string, bool>& labels) {
  RankedQueue q;
  for (const auto& r : snapshot.records) {
    if (!labels.contains(r.ref_id)) q.push_back({r.ref_id, 0.0, 0.0});
  }
  return q;
}

}  // namespace tiab::ranker
