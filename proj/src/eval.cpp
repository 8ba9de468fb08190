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

#include "tiab/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <set>
#include <sstream>

#include "tiab/batch.hpp"
#include "tiab/csv.hpp"
#include "tiab/error.hpp"
#include "tiab/record.hpp"
#include "tiab/text.hpp"

namespace tiab::eval {

ConfusionCounts confusion(const std::map<std::string, bool>& truth, const std::map<std::string, bool>& predicted) {
  if (truth.size() != predicted.size()) {
    throw Error(ErrorCode::validation, "truth and predictions cover different records");
  }
  ConfusionCounts c;
  auto p = predicted.begin();
  for (auto t = truth.begin(); t != truth.end(); ++t, ++p) {
    if (t->first != p->first) throw Error(ErrorCode::validation, "truth and predictions cover different records");
    if (t->second) (p->second ? c.tp : c.fn)++;
    else (p->second ? c.fp : c.tn)++;
  }
  return c;
}

ConfusionCounts confusion(const std::vector<bool>& truth, const std::vector<bool>& predicted) {
  if (truth.size() != predicted.size()) throw Error(ErrorCode::validation, "truth and predictions differ in length");
  ConfusionCounts c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i]) (predicted[i] ? c.tp : c.fn)++;
    else (predicted[i] ? c.fp : c.tn)++;
  }
  return c;
}

namespace {

std::optional<double> ratio(long num, long den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::optional<double> sensitivity(const ConfusionCounts& c) { return ratio(c.tp, c.tp + c.fn); }
std::optional<double> specificity(const ConfusionCounts& c) { return ratio(c.tn, c.tn + c.fp); }
std::optional<double> precision(const ConfusionCounts& c) { return ratio(c.tp, c.tp + c.fp); }
std::optional<double> prevalence(const ConfusionCounts& c) { return ratio(c.tp + c.fn, c.total()); }

double fbeta(double p, double r, double beta) {
  if (!(p >= 0.0 && p <= 1.0) || !(r >= 0.0 && r <= 1.0)) {
    throw Error(ErrorCode::validation, "precision and recall must lie in [0, 1]");
  }
  if (!(beta > 0.0)) throw Error(ErrorCode::validation, "beta must be positive");
  if (p == 0.0 && r == 0.0) throw Error(ErrorCode::undefined, "F-beta is undefined when precision and recall are 0");
  const double b2 = beta * beta;
  return (1.0 + b2) * p * r / (b2 * p + r);
}

WssResult wss_at_recall(std::vector<ScoredLabel> scores, double target_recall) {
  if (!(target_recall > 0.0 && target_recall <= 1.0)) {
    throw Error(ErrorCode::validation, "target recall must lie in (0, 1]");
  }
  WssResult res;
  res.total = static_cast<long>(scores.size());
  res.relevant = static_cast<long>(std::count_if(scores.begin(), scores.end(), [](const auto& s) { return s.relevant; }));
  if (res.relevant == 0) throw Error(ErrorCode::undefined, "WSS is undefined without relevant records");
  std::sort(scores.begin(), scores.end(), [](const ScoredLabel& a, const ScoredLabel& b) {
    if (a.score != b.score) return a.score > b.score;
    return id_less(a.ref_id, b.ref_id);
  });
  // ceil with a guard against r*R landing a hair above an integer.
  res.target_count = static_cast<long>(std::ceil(target_recall * static_cast<double>(res.relevant) - 1e-9));
  long found = 0;
  for (const auto& s : scores) {
    ++res.n_star;
    if (s.relevant && ++found >= res.target_count) break;
  }
  const double n = static_cast<double>(res.total);
  res.wss = (n - static_cast<double>(res.n_star)) / n - (1.0 - target_recall);
  return res;
}

// ---------------------------------------------------------------------------

std::uint64_t SplitMix64::next() noexcept {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

FoldPlan stratified_folds(const std::map<std::string, bool>& truth, int k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::validation, "fold count must be at least 2");
  std::vector<std::string> pos;
  std::vector<std::string> neg;
  for (const auto& [id, rel] : truth) (rel ? pos : neg).push_back(id);
  if (pos.empty() || neg.empty()) throw Error(ErrorCode::validation, "stratified folds need both classes");
  const auto natural = [](const std::string& a, const std::string& b) { return id_less(a, b); };
  std::sort(pos.begin(), pos.end(), natural);
  std::sort(neg.begin(), neg.end(), natural);

  SplitMix64 rng(seed);
  shuffle(pos, rng);
  shuffle(neg, rng);

  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.folds.assign(static_cast<std::size_t>(k), {});
  for (const auto* list : {&pos, &neg}) {
    for (std::size_t i = 0; i < list->size(); ++i) {
      const int fold = static_cast<int>(i % static_cast<std::size_t>(k));
      plan.assignment[(*list)[i]] = fold;
      plan.folds[static_cast<std::size_t>(fold)].push_back((*list)[i]);
    }
  }
  return plan;
}

std::string plan_to_csv(const FoldPlan& plan) {
  std::vector<std::pair<std::string, int>> rows(plan.assignment.begin(), plan.assignment.end());
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return id_less(a.first, b.first); });
  std::string out = "ref_id,fold\n";
  for (const auto& [id, fold] : rows) out += csv::format_row({id, std::to_string(fold)});
  return out;
}

double topk_overlap(const std::vector<std::string>& rank_a, const std::vector<std::string>& rank_b, std::size_t k) {
  if (k < 1) throw Error(ErrorCode::validation, "k must be at least 1");
  if (k > rank_a.size() || k > rank_b.size()) {
    throw Error(ErrorCode::validation, "k=" + std::to_string(k) + " exceeds the ranking size");
  }
  std::set<std::string_view> top_a(rank_a.begin(), rank_a.begin() + static_cast<std::ptrdiff_t>(k));
  std::size_t common = 0;
  for (std::size_t i = 0; i < k; ++i) common += top_a.count(rank_b[i]);
  return static_cast<double>(common) / static_cast<double>(k);
}

// ---------------------------------------------------------------------------

namespace {

std::string read_text(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot read " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t require_column(const csv::Row& header, std::string_view name) {
  auto idx = csv::column_index(header, name);
  if (!idx) throw Error(ErrorCode::schema, "missing column '" + std::string(name) + "'");
  return *idx;
}

bool parse_label(std::string_view s, std::size_t line) {
  const std::string_view v = text::trim(s);
  if (v == "1") return true;
  if (v == "0") return false;
  throw Error(ErrorCode::validation, "row " + std::to_string(line) + ": label must be 0 or 1");
}

}  // namespace

std::vector<LabeledRecord> parse_dataset(std::string_view csv_text) {
  const auto rows = csv::parse(text::decode_utf8(csv_text));
  if (rows.empty()) throw Error(ErrorCode::empty_input, "dataset CSV is empty");
  const auto& h = rows.front();
  const std::size_t ci = require_column(h, "ref_id");
  const std::size_t ti = require_column(h, "title");
  const std::size_t ai = require_column(h, "abstract");
  const std::size_t li = require_column(h, "label");
  std::vector<LabeledRecord> out;
  std::set<std::string> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() == 1 && row[0].empty()) continue;
    const auto cell = [&](std::size_t i) { return i < row.size() ? row[i] : std::string(); };
    LabeledRecord rec{std::string(text::trim(cell(ci))), cell(ti), cell(ai), parse_label(cell(li), r + 1)};
    if (rec.ref_id.empty()) throw Error(ErrorCode::validation, "row " + std::to_string(r + 1) + ": empty ref_id");
    if (!seen.insert(rec.ref_id).second) {
      throw Error(ErrorCode::validation, "duplicate ref_id '" + rec.ref_id + "' in dataset");
    }
    out.push_back(std::move(rec));
  }
  if (out.empty()) throw Error(ErrorCode::empty_input, "dataset CSV has no records");
  return out;
}

std::vector<LabeledRecord> load_dataset(const std::filesystem::path& file) { return parse_dataset(read_text(file)); }

std::map<std::string, bool> parse_truth(std::string_view csv_text) {
  const auto rows = csv::parse(text::decode_utf8(csv_text));
  if (rows.empty()) throw Error(ErrorCode::empty_input, "truth CSV is empty");
  const std::size_t ci = require_column(rows.front(), "ref_id");
  const std::size_t li = require_column(rows.front(), "label");
  std::map<std::string, bool> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() == 1 && row[0].empty()) continue;
    if (ci >= row.size() || li >= row.size()) {
      throw Error(ErrorCode::validation, "row " + std::to_string(r + 1) + " is missing cells");
    }
    const std::string id(text::trim(row[ci]));
    if (!out.emplace(id, parse_label(row[li], r + 1)).second) {
      throw Error(ErrorCode::validation, "duplicate ref_id '" + id + "' in truth file");
    }
  }
  return out;
}

std::string fold_file_name(int fold) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "fold_%02d.csv", fold);
  return buf;
}

std::string ranking_to_csv(const ranker::RankedQueue& ranking) {
  std::string out = "ref_id,score,rank\n";
  char buf[40];
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", ranking[i].probability);
    out += csv::format_row({ranking[i].ref_id, buf, std::to_string(i + 1)});
  }
  return out;
}

std::vector<std::string> read_ranking_csv(std::string_view csv_text) {
  const auto rows = csv::parse(csv_text);
  if (rows.empty()) throw Error(ErrorCode::empty_input, "ranking CSV is empty");
  const std::size_t ci = require_column(rows.front(), "ref_id");
  const auto rank_col = csv::column_index(rows.front(), "rank");
  std::vector<std::pair<long, std::string>> items;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (ci >= row.size()) continue;
    const long rank = rank_col && *rank_col < row.size() ? std::stol(row[*rank_col]) : static_cast<long>(r);
    items.emplace_back(rank, row[ci]);
  }
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::string> out;
  out.reserve(items.size());
  for (auto& [rank, id] : items) out.push_back(std::move(id));
  return out;
}

FoldExperimentReport run_fold_experiment(const std::vector<LabeledRecord>& dataset, const FoldExperimentOptions& options) {
  std::map<std::string, bool> truth;
  std::map<std::string, const LabeledRecord*> by_id;
  std::vector<ranker::Document> all;
  all.reserve(dataset.size());
  for (const auto& r : dataset) {
    truth[r.ref_id] = r.relevant;
    by_id[r.ref_id] = &r;
    all.push_back({r.ref_id, build_corpus_text(r.title, r.abstract)});
  }
  FoldExperimentReport rep;
  rep.plan = stratified_folds(truth, options.k, options.seed);

  ranker::RankOptions ro;
  ro.alpha = options.alpha;
  const ranker::Vocabulary vocab = [&] {
    std::vector<std::string> texts;
    texts.reserve(all.size());
    for (const auto& d : all) texts.push_back(d.text);
    return ranker::fit_vocabulary(texts);
  }();
  std::vector<ranker::DocVector> vectors;
  vectors.reserve(all.size());
  std::map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < all.size(); ++i) {
    vectors.push_back(ranker::weight_counts(ranker::count_terms(all[i].text, vocab), vocab));
    pos[all[i].ref_id] = i;
  }

  if (options.output_dir) std::filesystem::create_directories(*options.output_dir);
  for (int f = 0; f < options.k; ++f) {
    std::vector<ranker::DocVector> train;
    std::vector<char> labels;
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (rep.plan.assignment.at(all[i].ref_id) == f) continue;
      train.push_back(vectors[i]);
      labels.push_back(truth.at(all[i].ref_id) ? 1 : 0);
    }
    std::unique_ptr<bool[]> flags(new bool[labels.size()]);
    std::copy(labels.begin(), labels.end(), flags.get());
    const auto model = ranker::train_nb(train, std::span<const bool>(flags.get(), labels.size()), options.alpha, vocab.size());

    FoldRanking fr;
    fr.fold = f;
    for (const auto& id : rep.plan.folds[static_cast<std::size_t>(f)]) {
      const auto& v = vectors[pos.at(id)];
      fr.ranking.push_back({id, ranker::predict_proba(model, v), ranker::log_odds(model, v)});
    }
    std::sort(fr.ranking.begin(), fr.ranking.end(), [](const auto& a, const auto& b) {
      if (a.log_odds != b.log_odds) return a.log_odds > b.log_odds;
      return id_less(a.ref_id, b.ref_id);
    });

    if (options.output_dir) {
      std::ofstream out(*options.output_dir / fold_file_name(f), std::ios::binary | std::ios::trunc);
      out << ranking_to_csv(fr.ranking);
      if (!out) throw Error(ErrorCode::io, "cannot write ranking for fold " + std::to_string(f));
    }
    if (options.reference_dir) {
      const auto ref = read_ranking_csv(read_text(*options.reference_dir / fold_file_name(f)));
      std::vector<std::string> ours;
      for (const auto& it : fr.ranking) ours.push_back(it.ref_id);
      const std::size_t k = std::min({options.overlap_k, ours.size(), ref.size()});
      rep.overlaps.push_back(topk_overlap(ours, ref, k));
      rep.overlap_ks.push_back(k);
    }
    rep.folds.push_back(std::move(fr));
  }
  return rep;
}

// ---------------------------------------------------------------------------

MetricsReport metrics_report(const std::map<std::string, bool>& truth, const std::map<std::string, bool>& predicted,
                             const std::optional<std::map<std::string, double>>& scores, double beta,
                             double wss_recall) {
  MetricsReport r;
  r.beta = beta;
  r.wss_recall = wss_recall;
  r.counts = confusion(truth, predicted);
  r.sensitivity = sensitivity(r.counts);
  r.specificity = specificity(r.counts);
  r.precision = precision(r.counts);
  r.prevalence = prevalence(r.counts);
  if (r.precision && r.sensitivity && (*r.precision > 0 || *r.sensitivity > 0)) {
    r.f_beta = fbeta(*r.precision, *r.sensitivity, beta);
  }
  if (scores && r.counts.tp + r.counts.fn > 0) {
    std::vector<ScoredLabel> s;
    for (const auto& [id, rel] : truth) {
      auto it = scores->find(id);
      s.push_back({id, it == scores->end() ? -std::numeric_limits<double>::infinity() : it->second, rel});
    }
    r.wss = wss_at_recall(std::move(s), wss_recall);
  }
  return r;
}

namespace {

std::string pct(const std::optional<double>& v) {
  if (!v) return "undefined";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", *v * 100.0);
  return buf;
}

std::string num(const std::optional<double>& v) {
  if (!v) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", *v);
  return buf;
}

}  // namespace

std::string format_report_text(const MetricsReport& r) {
  std::ostringstream o;
  o << "records      " << r.counts.total() << "\n"
    << "tp fp tn fn  " << r.counts.tp << " " << r.counts.fp << " " << r.counts.tn << " " << r.counts.fn << "\n"
    << "sensitivity  " << pct(r.sensitivity) << "\n"
    << "specificity  " << pct(r.specificity) << "\n"
    << "precision    " << pct(r.precision) << "\n"
    << "prevalence   " << pct(r.prevalence) << "\n"
    << "F" << r.beta << "          " << pct(r.f_beta) << "\n";
  if (r.wss) {
    o << "WSS@" << static_cast<int>(std::lround(r.wss_recall * 100)) << "       "
      << pct(r.wss->wss) << " (n*=" << r.wss->n_star << ")\n";
  }
  return o.str();
}

std::string format_report_csv(const MetricsReport& r) {
  std::string out = "records,tp,fp,tn,fn,sensitivity,specificity,precision,prevalence,fbeta,beta,wss,wss_recall,n_star\n";
  char beta[32];
  std::snprintf(beta, sizeof beta, "%g", r.beta);
  char rr[32];
  std::snprintf(rr, sizeof rr, "%g", r.wss_recall);
  out += csv::format_row({std::to_string(r.counts.total()), std::to_string(r.counts.tp), std::to_string(r.counts.fp),
                          std::to_string(r.counts.tn), std::to_string(r.counts.fn), num(r.sensitivity),
                          num(r.specificity), num(r.precision), num(r.prevalence), num(r.f_beta), beta,
                          r.wss ? num(r.wss->wss) : "", r.wss ? rr : "",
                          r.wss ? std::to_string(r.wss->n_star) : ""});
  return out;
}

MetricsReport project_metrics(const Snapshot& snapshot, const std::map<std::string, bool>& truth,
                              std::optional<PredictionSource> source) {
  for (const auto& [id, rel] : truth) {
    if (!snapshot.record(id)) throw Error(ErrorCode::not_found, "truth file names unknown ref_id '" + id + "'");
  }
  const auto active = snapshot.active_execution_id();
  const PredictionSource src = source.value_or(active ? PredictionSource::llm : PredictionSource::status);
  std::map<std::string, bool> predicted;
  if (src == PredictionSource::llm) {
    if (!active) throw Error(ErrorCode::validation, "no active LLM execution to evaluate");
    const double t = snapshot.execution(*active)->threshold;
    const auto judgments = llm::judgments_for_execution(snapshot, *active);
    std::map<std::string, double> scores;
    for (const auto& [id, rel] : truth) {
      auto it = judgments.find(id);
      // Unjudged records count as included: nothing was screened out.
      const double p = it == judgments.end() ? 1.0 : it->second.probability;
      predicted[id] = p >= t;
      scores[id] = p;
    }
    return metrics_report(truth, predicted, scores);
  }
  const auto statuses = snapshot.effective_statuses(snapshot.all_reviewers());
  for (const auto& [id, rel] : truth) {
    const Status s = statuses.at(id);
    predicted[id] = s == Status::include || s == Status::maybe || s == Status::conflict;
  }
  return metrics_report(truth, predicted);
}

}  // namespace tiab::eval
