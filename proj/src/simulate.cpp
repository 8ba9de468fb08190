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

#include <algorithm>
#include <memory>
#include <numeric>

#include "tiab/error.hpp"
#include "tiab/ranker.hpp"
#include "tiab/stopping.hpp"

namespace tiab::stopping {

namespace {

// Incremental rule state so a replay costs O(N) rule evaluations, each
// without rescanning the trajectory.
class RuleTracker {
 public:
  RuleTracker(const StoppingConfig& config, long total_records) : config_(config), total_(total_records) {
    if (config.rule == Rule::consecutive && config.n_consecutive < 1) {
      throw Error(ErrorCode::validation, "n_consecutive must be positive");
    }
  }

  bool push(bool relevant) {
    ++screened_;
    if (relevant) {
      ++found_;
      run_ = 0;
    } else {
      ++run_;
    }
    if (config_.rule == Rule::consecutive) return run_ >= config_.n_consecutive;
    const auto res = statistical_stop_counts(found_, screened_, run_, total_, config_.target_recall, config_.confidence);
    p_value_ = res.p_value;
    return res.stop;
  }

  long found() const { return found_; }
  long screened() const { return screened_; }
  std::optional<double> p_value() const { return p_value_; }

 private:
  StoppingConfig config_;
  long total_;
  long screened_ = 0;
  long found_ = 0;
  long run_ = 0;
  std::optional<double> p_value_;
};

}  // namespace

SimulationResult simulate_until_stop(const Trajectory& labels_in_order, const StoppingConfig& config) {
  SimulationResult out;
  out.total_records = static_cast<long>(labels_in_order.size());
  out.total_relevant = static_cast<long>(std::count(labels_in_order.begin(), labels_in_order.end(), true));
  if (out.total_relevant == 0) throw Error(ErrorCode::validation, "simulation needs at least one relevant record");
  RuleTracker tracker(config, out.total_records);
  for (bool label : labels_in_order) {
    if (tracker.push(label)) {
      out.stopped_by_rule = true;
      break;
    }
  }
  out.screened = tracker.screened();
  out.relevant_found = tracker.found();
  out.recall = static_cast<double>(out.relevant_found) / static_cast<double>(out.total_relevant);
  out.p_value = tracker.p_value();
  return out;
}

SimulationResult simulate_active_learning(const std::vector<std::string>& texts, const std::vector<bool>& truth,
                                          const StoppingConfig& config, const ActiveLearningOptions& options,
                                          std::vector<std::size_t>* order_out) {
  if (texts.size() != truth.size()) throw Error(ErrorCode::validation, "texts and labels differ in length");
  if (options.retrain_every < 1) throw Error(ErrorCode::validation, "retrain_every must be positive");
  const std::size_t n = texts.size();

  SimulationResult out;
  out.total_records = static_cast<long>(n);
  out.total_relevant = static_cast<long>(std::count(truth.begin(), truth.end(), true));
  if (out.total_relevant == 0) throw Error(ErrorCode::validation, "simulation needs at least one relevant record");

  const ranker::Vocabulary vocab = ranker::fit_vocabulary(texts);
  const std::vector<ranker::DocVector> vectors = ranker::tfidf_transform(texts, vocab);

  RuleTracker tracker(config, out.total_records);
  std::vector<bool> labeled(n, false);
  std::vector<std::size_t> order;
  order.reserve(n);
  bool has_rel = false;
  bool has_irr = false;
  bool stopped = false;

  const auto screen = [&](std::size_t i) {
    labeled[i] = true;
    order.push_back(i);
    (truth[i] ? has_rel : has_irr) = true;
    stopped = tracker.push(truth[i]);
  };

  // Cold start: import order until both classes are present.
  for (std::size_t i = 0; i < n && !stopped && !(has_rel && has_irr); ++i) screen(i);

  while (!stopped && order.size() < n) {
    std::vector<ranker::DocVector> train;
    std::unique_ptr<bool[]> flags(new bool[order.size()]);
    std::size_t m = 0;
    for (std::size_t i : order) {
      train.push_back(vectors[i]);
      flags[m++] = truth[i];
    }
    const auto model = ranker::train_nb(train, std::span<const bool>(flags.get(), m), options.alpha, vocab.size());
    std::vector<std::pair<double, std::size_t>> scored;
    for (std::size_t i = 0; i < n; ++i) {
      if (!labeled[i]) scored.emplace_back(ranker::log_odds(model, vectors[i]), i);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    const std::size_t take = std::min<std::size_t>(scored.size(), static_cast<std::size_t>(options.retrain_every));
    for (std::size_t j = 0; j < take && !stopped; ++j) screen(scored[j].second);
  }

  out.stopped_by_rule = stopped;
  out.screened = tracker.screened();
  out.relevant_found = tracker.found();
  out.recall = static_cast<double>(out.relevant_found) / static_cast<double>(out.total_relevant);
  out.p_value = tracker.p_value();
  if (order_out) *order_out = std::move(order);
  return out;
}

}  // namespace tiab::stopping
