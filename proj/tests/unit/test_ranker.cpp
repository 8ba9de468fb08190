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

#include <doctest.h>

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "synth.hpp"
#include "testing.hpp"
#include "tiab/error.hpp"
#include "tiab/ingest.hpp"
#include "tiab/ranker.hpp"

using namespace tiab;
using namespace tiab::ranker;
using testing::TempDir;

namespace {

DocVector counts_vector(const std::vector<int>& dense) {
  DocVector v;
  for (std::size_t t = 0; t < dense.size(); ++t) {
    if (dense[t] != 0) v.entries.emplace_back(static_cast<std::int32_t>(t), dense[t]);
  }
  return v;
}

std::vector<Document> docs_of(const std::vector<synth::Item>& items) {
  std::vector<Document> out;
  for (const auto& it : items) out.push_back({it.id, build_corpus_text(it.title, it.abstract)});
  return out;
}

}  // namespace

TEST_SUITE("ranker") {
  TEST_CASE("tokenizer") {
    CHECK(tokenize("A b-cd, EF9 x") == std::vector<std::string>{"cd", "ef9"});
    CHECK(tokenize("Ünïcode ΑΒΓ") == std::vector<std::string>{"ünïcode", "αβγ"});
    CHECK(tokenize("").empty());
  }

  TEST_CASE("idf by hand") {
    const std::vector<std::string> corpus = {"aa aa", "aa bb"};
    const auto vocab = fit_vocabulary(corpus);
    REQUIRE(vocab.size() == 2);
    CHECK(vocab.terms == std::vector<std::string>{"aa", "bb"});
    CHECK(vocab.doc_freq == std::vector<std::int32_t>{2, 1});
    CHECK(vocab.idf(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(vocab.idf(1) == doctest::Approx(std::log(1.5) + 1.0).epsilon(1e-12));
    CHECK(vocab.idf(1) == doctest::Approx(1.405465).epsilon(1e-6));
    const auto vecs = tfidf_transform(corpus, vocab);
    REQUIRE(vecs[0].entries.size() == 1);
    CHECK(vecs[0].entries[0].second == doctest::Approx(1.0));
    const auto oov = tfidf_transform(std::vector<std::string>{"zz qq"}, vocab);
    CHECK(oov[0].is_zero());
    CHECK_ERROR_CODE(fit_vocabulary(std::vector<std::string>{"", "a"}), ErrorCode::validation);
  }

  TEST_CASE("rows are unit length with ascending indices") {
    const auto items = synth::dataset(3, 60, 0.2);
    std::vector<std::string> texts;
    for (const auto& it : items) texts.push_back(build_corpus_text(it.title, it.abstract));
    const auto vocab = fit_vocabulary(texts);
    for (const auto& v : tfidf_transform(texts, vocab)) {
      double sq = 0;
      for (std::size_t i = 0; i < v.entries.size(); ++i) {
        sq += v.entries[i].second * v.entries[i].second;
        if (i) CHECK(v.entries[i - 1].first < v.entries[i].first);
      }
      CHECK(std::sqrt(sq) == doctest::Approx(1.0).epsilon(1e-9));
    }
  }

  TEST_CASE("naive Bayes against the exact-rational oracle") {
    const std::vector<std::vector<int>> train = {{2, 1, 0, 0}, {0, 1, 3, 0}, {1, 0, 0, 2}};
    const std::vector<bool> labels = {true, false, true};
    std::vector<DocVector> vecs;
    for (const auto& row : train) vecs.push_back(counts_vector(row));
    const bool lab[] = {true, false, true};
    const auto model = train_nb(vecs, lab, 1.0, 4);
    CHECK(std::exp(model.log_prior[kRelevant]) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    for (int c = 0; c < 2; ++c) {
      double total = 0;
      for (std::size_t t = 0; t < 4; ++t) {
        const auto exact = oracle::nb_likelihood(train, labels, 1, c == kRelevant, t);
        CHECK(std::exp(model.feature_log_prob[c][t]) ==
              doctest::Approx(static_cast<double>(exact)).epsilon(1e-12));
        total += std::exp(model.feature_log_prob[c][t]);
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
    }
    for (const auto& x : std::vector<std::vector<int>>{{1, 0, 0, 0}, {0, 2, 1, 0}, {3, 1, 1, 1}, {0, 0, 0, 0}}) {
      const double exact = static_cast<double>(oracle::nb_posterior(train, labels, 1, x));
      CHECK(std::abs(predict_proba(model, counts_vector(x)) - exact) < 1e-9);
    }
    CHECK(predict_proba(model, DocVector{}) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  }

  TEST_CASE("smoothing limit and error cases") {
    std::vector<DocVector> vecs = {counts_vector({1, 0}), counts_vector({0, 1})};
    const bool lab[] = {true, false};
    const auto model = train_nb(vecs, lab, 1e9, 2);
    CHECK(std::exp(model.log_prior[0]) == doctest::Approx(0.5));
    CHECK(std::exp(model.feature_log_prob[1][0]) == doctest::Approx(0.5).epsilon(1e-6));
    const bool one_class[] = {true, true};
    CHECK_ERROR_CODE(train_nb(vecs, one_class, 1.0, 2), ErrorCode::cold_start);
    CHECK_ERROR_CODE(train_nb(vecs, lab, 0.0, 2), ErrorCode::validation);
  }

  TEST_CASE("doubling weights keeps the ordering") {
    const auto items = synth::dataset(11, 120, 0.2);
    std::vector<std::string> texts;
    std::vector<bool> labels;
    for (const auto& it : items) {
      texts.push_back(build_corpus_text(it.title, it.abstract));
      labels.push_back(it.relevant);
    }
    const auto vocab = fit_vocabulary(texts);
    auto vecs = tfidf_transform(texts, vocab);
    std::vector<DocVector> train(vecs.begin(), vecs.begin() + 80);
    std::unique_ptr<bool[]> lab(new bool[80]);
    for (int i = 0; i < 80; ++i) lab[i] = labels[static_cast<std::size_t>(i)];
    auto doubled = train;
    for (auto& v : doubled) {
      for (auto& e : v.entries) e.second *= 2;
    }
    const auto m1 = train_nb(train, std::span<const bool>(lab.get(), 80), 1.0, vocab.size());
    const auto m2 = train_nb(doubled, std::span<const bool>(lab.get(), 80), 1.0, vocab.size());
    std::vector<std::size_t> a(40);
    std::iota(a.begin(), a.end(), 80);
    std::vector<std::size_t> b(a);
    std::stable_sort(a.begin(), a.end(), [&](auto x, auto y) { return log_odds(m1, vecs[x]) > log_odds(m1, vecs[y]); });
    std::stable_sort(b.begin(), b.end(), [&](auto x, auto y) { return log_odds(m2, vecs[x]) > log_odds(m2, vecs[y]); });
    CHECK(a.front() == b.front());
    for (std::size_t i = 80; i < 120; ++i) {
      const double p = predict_proba(m1, vecs[i]);
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
    }
  }

  TEST_CASE("full ordering equals the dense oracle") {
    for (std::uint64_t seed : {101u, 202u}) {
      const auto items = synth::dataset(seed, 220, 0.1);
      const auto docs = docs_of(items);
      std::map<std::string, bool> labels;
      std::vector<oracle::Doc> corpus;
      std::vector<std::string> train_ids, target_ids;
      std::vector<bool> train_labels;
      for (std::size_t i = 0; i < items.size(); ++i) {
        corpus.push_back({docs[i].ref_id, docs[i].text});
        if (i % 3 == 0) {
          labels[items[i].id] = items[i].relevant;
          train_ids.push_back(items[i].id);
          train_labels.push_back(items[i].relevant);
        } else {
          target_ids.push_back(items[i].id);
        }
      }
      const auto fast = rank_documents(docs, labels);
      const auto slow = oracle::dense_rank(corpus, train_ids, train_labels, target_ids, kDefaultAlpha);
      REQUIRE(fast.size() == slow.order.size());
      for (std::size_t i = 0; i < fast.size(); ++i) {
        CAPTURE(i);
        CHECK(fast[i].ref_id == slow.order[i]);
        CHECK(std::abs(fast[i].probability - slow.probability[i]) < 1e-9);
      }
    }
  }

  TEST_CASE("identical unlabeled texts keep ref_id order") {
    std::vector<Document> docs = {{"000001", "alpha beta"}, {"000002", "gamma delta"}, {"000010", "same text here"},
                                  {"000003", "same text here"}, {"000004", "same text here"}};
    const auto q = rank_documents(docs, {{"000001", true}, {"000002", false}});
    REQUIRE(q.size() == 3);
    CHECK(q[0].ref_id == "000003");
    CHECK(q[1].ref_id == "000004");
    CHECK(q[2].ref_id == "000010");
  }

  TEST_CASE("labeling a relevant record lifts its near duplicate") {
    std::vector<Document> docs = {
        {"000001", "sepsis fluid trial outcomes"},       {"000002", "cardiology imaging registry"},
        {"000003", "bicarbonate acidosis infusion trial"}, {"000004", "bicarbonate acidosis infusion study"},
        {"000005", "orthopedic surgery recovery"},        {"000006", "dermatology lesion imaging"},
        {"000007", "renal registry outcomes"}};
    std::map<std::string, bool> labels = {{"000001", true}, {"000002", false}};
    auto rank_of = [](const RankedQueue& q, const std::string& id) {
      for (std::size_t i = 0; i < q.size(); ++i) {
        if (q[i].ref_id == id) return i;
      }
      return q.size();
    };
    const auto before = rank_documents(docs, labels);
    labels["000003"] = true;
    const auto after = rank_documents(docs, labels);
    CHECK(rank_of(after, "000004") < rank_of(before, "000004"));
    for (const auto& it : after) CHECK_FALSE(labels.contains(it.ref_id));
  }

  TEST_CASE("snapshot ranking: cold start, partition, determinism") {
    TempDir tmp;
    auto p = Project::create(tmp / "p");
    const auto items = synth::dataset(5, 40, 0.25);
    std::vector<RecordDraft> drafts;
    for (const auto& it : items) {
      RecordDraft d;
      d.title = it.title + " " + it.id;
      d.abstract = it.abstract;
      d.source = "synthetic";
      drafts.push_back(d);
    }
    REQUIRE(ingest::import_batch(drafts, p, "tester", "synthetic").imported_count == 40);
    CHECK_ERROR_CODE(rank_unlabeled(p.snapshot()), ErrorCode::cold_start);
    Decision d;
    d.reviewer_id = "a@x";
    d.ref_id = "000001";
    d.decision = Verdict::include;
    p.append_decision(d);
    CHECK_ERROR_CODE(rank_unlabeled(p.snapshot()), ErrorCode::cold_start);
    const auto cold = import_order(p.snapshot(), labels_from_snapshot(p.snapshot()));
    REQUIRE(cold.size() == 39);
    CHECK(cold.front().ref_id == "000002");
    d.ref_id = "000002";
    d.decision = Verdict::exclude;
    p.append_decision(d);
    d.ref_id = "000003";
    d.decision = Verdict::maybe;
    p.append_decision(d);
    const auto q1 = rank_unlabeled(p.snapshot());
    const auto q2 = rank_unlabeled(p.snapshot());
    CHECK(q1.size() == 38);  // maybe is unlabeled for training
    REQUIRE(q1.size() == q2.size());
    for (std::size_t i = 0; i < q1.size(); ++i) {
      CHECK(q1[i].ref_id == q2[i].ref_id);
      CHECK(q1[i].probability == q2[i].probability);
      if (i) CHECK(q1[i - 1].probability >= q1[i].probability);
      CHECK(q1[i].ref_id != "000001");
      CHECK(q1[i].ref_id != "000002");
    }
    ActiveLearner learner;
    const auto s1 = learner.step(p.snapshot());
    const auto s2 = learner.step(p.snapshot());
    REQUIRE(s1.size() == s2.size());
    for (std::size_t i = 0; i < s1.size(); ++i) CHECK(s1[i].ref_id == s2[i].ref_id);
  }

  TEST_CASE("dynamic balance equalizes class weight") {
    const bool lab[] = {true, false, false, false};
    const auto w = balance_weights(lab, Balance::dynamic);
    REQUIRE(w.size() == 4);
    CHECK(w[0] == doctest::Approx(2.0));
    CHECK(w[1] * 3 == doctest::Approx(2.0));
    CHECK(balance_weights(lab, Balance::none).empty());
  }

  TEST_CASE("stop request aborts ranking") {
    std::stop_source src;
    src.request_stop();
    RankOptions opts;
    opts.stop = src.get_token();
    std::vector<Document> docs = {{"1", "aa bb"}, {"2", "cc dd"}, {"3", "aa dd"}};
    CHECK_ERROR_CODE(rank_documents(docs, {{"1", true}, {"2", false}}, opts), ErrorCode::conflict);
  }
}
