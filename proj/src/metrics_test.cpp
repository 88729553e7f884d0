// Copyright 2026 The eyebench Authors.
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

#include "eyebench/metrics.hpp"

#include <doctest.h>

#include <cstdlib>
#include <random>

#include "mock_scorer.hpp"
#include "oracles.hpp"

using namespace eyebench;
using namespace eyebench::metrics;
using extraction::ExtractedAnswer;
using extraction::Method;

namespace {

ExtractedAnswer letter(const std::string& value) {
  return {extraction::AnswerKind::kMcq, value, Method::kLetterPattern, ""};
}

ExtractedAnswer unparseable() {
  return {extraction::AnswerKind::kMcq, "", Method::kUnparseable, ""};
}

}  // namespace

TEST_CASE("tokenize lowercases and splits on punctuation") {
  CHECK(tokenize("Cystoid macular edema (CME).") ==
        std::vector<std::string>{"cystoid", "macular", "edema", "cme"});
  CHECK(tokenize("anti-VEGF, 0.5mg") == std::vector<std::string>{"anti", "vegf", "0", "5mg"});
  CHECK(tokenize("  ").empty());
}

TEST_CASE("tokenize keeps non-ASCII letters and drops non-ASCII punctuation") {
  CHECK(tokenize("250 μm") == std::vector<std::string>{"250", "μm"});
  CHECK(tokenize("Purtscher—like “retinopathy”") ==
        std::vector<std::string>{"purtscher", "like", "retinopathy"});
  CHECK(tokenize("café") == std::vector<std::string>{"café"});
  CHECK(tokenize("20 × 30") == std::vector<std::string>{"20", "30"});
}

TEST_CASE("LCS agrees with exhaustive enumeration") {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 400; ++i) {
    const auto a = testing::random_tokens(rng, 10);
    const auto b = testing::random_tokens(rng, 10);
    CHECK(lcs_length(a, b) == testing::lcs_bruteforce(a, b));
  }
}

TEST_CASE("Rouge-L hand-worked example") {
  // LCS("the cat sat on the mat", "the cat is on the mat") = 5.
  const auto s = rouge_l("the cat sat on the mat", "the cat is on the mat");
  CHECK(s.precision == doctest::Approx(5.0 / 6.0));
  CHECK(s.recall == doctest::Approx(5.0 / 6.0));
  CHECK(s.f == doctest::Approx(5.0 / 6.0));
  const auto t = rouge_l("edema", "Cystoid macular edema");
  CHECK(t.precision == doctest::Approx(1.0));
  CHECK(t.recall == doctest::Approx(1.0 / 3.0));
  CHECK(t.f == doctest::Approx(0.5));
}

TEST_CASE("Rouge-L properties") {
  std::mt19937_64 rng(22);
  for (int i = 0; i < 200; ++i) {
    const auto a = testing::join(testing::random_tokens(rng, 15, 8, 1));
    const auto b = testing::join(testing::random_tokens(rng, 15, 8, 1));
    CHECK(rouge_l(a, a).f == doctest::Approx(1.0));
    const auto ab = rouge_l(a, b), ba = rouge_l(b, a);
    CHECK(ab.f == doctest::Approx(ba.f));
    CHECK(ab.precision == doctest::Approx(ba.recall));
    CHECK(ab.f >= 0.0);
    CHECK(ab.f <= 1.0);
  }
  CHECK(rouge_l("", "anything").f == 0.0);
  CHECK(rouge_l("...", "").f == 0.0);
}

TEST_CASE("classification scores") {
  const std::vector<ExtractedAnswer> predictions = {letter("A"), letter("B"), letter("A"),
                                                    unparseable(), letter("D")};
  const std::vector<std::string> golds = {"A", "B", "B", "C", "D"};
  const auto score = classify_scores(predictions, golds);
  CHECK(score.accuracy == doctest::Approx(0.6));
  CHECK(score.n_unparseable == 1);
  // A: P=1/2 R=1 F=2/3; B: P=1 R=1/2 F=2/3; C: 0; D: 1.
  CHECK(score.per_class.at("A").f1 == doctest::Approx(2.0 / 3.0));
  CHECK(score.per_class.at("B").f1 == doctest::Approx(2.0 / 3.0));
  CHECK(score.per_class.at("C").f1 == 0.0);
  CHECK(score.per_class.at("D").f1 == 1.0);
  CHECK(score.macro_f1 == doctest::Approx((2.0 / 3.0 + 2.0 / 3.0 + 0 + 1) / 4.0));
  CHECK(correctness(predictions, golds) == std::vector<double>{1, 1, 0, 0, 1});
  CHECK_THROWS_AS(classify_scores(predictions, std::vector<std::string>{"A"}), Error);
  CHECK_THROWS_AS(classify_scores(std::vector<ExtractedAnswer>{letter("A")},
                                  std::vector<std::string>{"E"}),
                  Error);
}

TEST_CASE("all-unparseable predictions score zero") {
  const std::vector<ExtractedAnswer> predictions(4, unparseable());
  const std::vector<std::string> golds = {"A", "B", "C", "D"};
  const auto score = classify_scores(predictions, golds);
  CHECK(score.accuracy == 0.0);
  CHECK(score.macro_f1 == 0.0);
  CHECK(score.n_unparseable == 4);
}

TEST_CASE("neural scores over the wire protocol") {
  testing::MockScorer scorer;
  std::vector<ScorePair> pairs;
  for (int i = 0; i < 150; ++i) {
    pairs.push_back({"macular edema case " + std::to_string(i), "macular edema"});
  }
  const auto scores = score_neural(pairs, scorer.endpoint());
  REQUIRE(scores.size() == pairs.size());
  CHECK(scorer.requests() == 3);
  CHECK(scorer.max_batch() <= kScorerBatchLimit);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double expected = testing::MockScorer::overlap(pairs[i].candidate, pairs[i].reference);
    CHECK(scores[i].bert_score == doctest::Approx(expected));
    CHECK(scores[i].bart_score <= 0.0);
  }
  CHECK(score_neural({}, "http://127.0.0.1:1").empty());
}

TEST_CASE("scorer failures surface as ScorerUnavailable") {
  const std::vector<ScorePair> pairs = {{"a", "b"}, {"c", "d"}};
  auto expect_unavailable = [&](const std::string& endpoint) {
    try {
      score_neural(pairs, endpoint);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kScorerUnavailable);
    }
  };
  {
    testing::MockScorer misaligned(testing::MockScorer::Mode::kMisaligned);
    expect_unavailable(misaligned.endpoint());
  }
  {
    testing::MockScorer failing(testing::MockScorer::Mode::kServerError);
    expect_unavailable(failing.endpoint());
  }
  {
    testing::MockScorer bad(testing::MockScorer::Mode::kOutOfRange);
    expect_unavailable(bad.endpoint());
  }
  expect_unavailable("http://127.0.0.1:1");
  expect_unavailable("not a url");
}

TEST_CASE("real scoring sidecar, when one is configured") {
  const char* url = std::getenv("EYEBENCH_SCORER_URL");
  if (!url || !*url) {
    MESSAGE("EYEBENCH_SCORER_URL not set; skipping");
    return;
  }
  const std::vector<ScorePair> pairs = {
      {"the optic nerve is cupped", "the optic nerve is cupped"},
      {"cupped is nerve optic the", "the optic nerve is cupped"}};
  const auto scores = score_neural(pairs, url);
  REQUIRE(scores.size() == 2);
  CHECK(scores[0].bert_score >= scores[1].bert_score);
}
