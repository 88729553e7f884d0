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

#include "eyebench/curation.hpp"

#include <doctest.h>

#include <atomic>
#include <random>
#include <set>

using namespace eyebench;
using namespace eyebench::curation;
using corpus::Document;
using corpus::DocumentKind;

namespace {

Document abstract(std::string id, std::string body) {
  Document doc;
  doc.id = std::move(id);
  doc.kind = DocumentKind::kAbstract;
  doc.body = std::move(body);
  return doc;
}

Document study(std::string id, corpus::StudyItem item) {
  Document doc;
  doc.id = std::move(id);
  doc.kind = DocumentKind::kStudyItem;
  doc.body = item.question_text;
  doc.study = std::move(item);
  return doc;
}

Document case_report(std::string id) {
  Document doc;
  doc.id = std::move(id);
  doc.kind = DocumentKind::kCaseReport;
  doc.body = "A 54-year-old man presented with sudden painless vision loss.";
  return doc;
}

std::size_t code_points(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80;
  return n;
}

// Answers every prompt with a fixed string, or nothing for prompts that
// contain `silent_on`.
class FakeSource : public gateway::CompletionSource {
 public:
  explicit FakeSource(std::string silent_on = "", bool fail = false)
      : silent_on_(std::move(silent_on)), fail_(fail) {}

  gateway::RawResponse complete(std::string_view prompt) override {
    ++calls;
    if (fail_) throw Error(ErrorCode::kAuthMissing, "no key");
    gateway::RawResponse response;
    response.model_id = model_id();
    if (silent_on_.empty() || prompt.find(silent_on_) == std::string_view::npos) {
      response.text = "  weak label  ";
    }
    return response;
  }
  std::string model_id() const override { return "fake-gpt"; }

  std::atomic<int> calls{0};

 private:
  std::string silent_on_;
  bool fail_;
};

}  // namespace

TEST_CASE("sentence segmentation") {
  CHECK(segment_sentences("One. Two! Three?") ==
        std::vector<std::string>{"One.", "Two!", "Three?"});
  CHECK(segment_sentences("Smith et al. reported it. Then 5 eyes.") ==
        std::vector<std::string>{"Smith et al. reported it.", "Then 5 eyes."});
  CHECK(segment_sentences("Compare Fig. 2 vs. baseline. Done.") ==
        std::vector<std::string>{"Compare Fig. 2 vs. baseline.", "Done."});
  CHECK(segment_sentences("He said \"stop.\" Then left.") ==
        std::vector<std::string>{"He said \"stop.\"", "Then left."});
  // Decimal points and lowercase continuations do not split.
  CHECK(segment_sentences("Dose was 0.5 mg. it worked.").size() == 1);
  CHECK(segment_sentences("   ").empty());
}

TEST_CASE("abstract completion holds out the last sentence") {
  const auto doc = abstract("a1", "Purpose: test. Methods were applied. Results were good.");
  const auto instance = make_abstract_completion(doc);
  CHECK(instance.id == "a1:abstract_completion");
  CHECK(instance.output == "Results were good.");
  CHECK(instance.input.find("Methods were applied.") != std::string::npos);
  CHECK(instance.input.find("Results were good.") == std::string::npos);
  CHECK(instance.provenance == Provenance::gold());
  CHECK(check_instance(instance).empty());
  try {
    make_abstract_completion(abstract("a2", "Only one sentence here."));
    FAIL("expected SingleSentenceAbstract");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kSingleSentenceAbstract);
  }
  const std::vector<Document> docs = {abstract("b", "One. Two."), abstract("a", "Single."),
                                      abstract("c", "Three. Four.")};
  const auto bulk = curate_abstracts(docs);
  REQUIRE(bulk.instances.size() == 2);
  CHECK(bulk.instances[0].source_doc == "b");
  CHECK(bulk.failures.at("SingleSentenceAbstract") == 1);
}

TEST_CASE("fill-in-blank round trip") {
  std::mt19937_64 rng(41);
  const std::vector<std::string> words = {"macular", "edema", "250", "μm", "café", "(CME)",
                                          "retina", "is", "the", "œdème", ","};
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::string> segments;
    std::vector<bool> blank;
    const std::size_t count = 2 + rng() % 10;
    for (std::size_t i = 0; i < count; ++i) {
      segments.push_back((i ? " " : "") + words[rng() % words.size()]);
      blank.push_back(rng() % 3 == 0);
    }
    blank[0] = true;
    corpus::StudyItem item;
    std::string expected_input;
    std::vector<std::string> answers;
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t start = code_points(item.question_text);
      item.question_text += segments[i];
      if (blank[i]) {
        item.cloze_spans.push_back({start, code_points(item.question_text)});
        expected_input += kBlankMarker;
        answers.push_back(segments[i]);
      } else {
        expected_input += segments[i];
      }
    }
    // Spans may be given in any order.
    std::shuffle(item.cloze_spans.begin(), item.cloze_spans.end(), rng);
    const auto doc = study("s" + std::to_string(trial), item);
    REQUIRE(pick_style(item) == KnowledgeStyle::kFillInBlank);
    const auto instance = make_knowledge_qa(doc, KnowledgeStyle::kFillInBlank);
    CAPTURE(item.question_text);
    CHECK(instance.output == item.question_text);
    CHECK(instance.input ==
          TemplateRegistry::builtin().render("fill_in_blank", {{"question", expected_input}}).input);
    CHECK(check_instance(instance).empty());

    // Substituting the held-out spans back into the blanks restores the text.
    std::string restored = expected_input;
    std::size_t pos = 0;
    for (const auto& answer : answers) {
      pos = restored.find(kBlankMarker, pos);
      REQUIRE(pos != std::string::npos);
      restored.replace(pos, kBlankMarker.size(), answer);
      pos += answer.size();
    }
    CHECK(restored == item.question_text);
  }
}

TEST_CASE("fill-in-blank rejections") {
  corpus::StudyItem item;
  item.question_text = "Wait... the answer is edema.";
  item.cloze_spans = {{22, 27}};
  auto expect = [](const Document& doc, ErrorCode code) {
    try {
      make_knowledge_qa(doc, KnowledgeStyle::kFillInBlank);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == code);
    }
  };
  expect(study("x", item), ErrorCode::kBlankMarkerInText);
  item.question_text = "no spans";
  item.cloze_spans.clear();
  expect(study("y", item), ErrorCode::kMissingClozeSpans);
}

TEST_CASE("MCQ instance maps the answer to its letter") {
  corpus::StudyItem item;
  item.question_text = "Minimum residual stromal bed thickness after LASIK?";
  item.options = {"150 μm", "250 μm", "400 μm", "100 μm"};
  item.answer = "250 μm";
  const auto instance = make_knowledge_qa(study("m", item), pick_style(item));
  CHECK(instance.task == TaskKind::kMcq);
  CHECK(instance.output == "B");
  CHECK(instance.input.find("\nB. 250 μm\n") != std::string::npos);
  CHECK(check_instance(instance).empty());

  item.answer = "D";
  CHECK(make_knowledge_qa(study("m", item), KnowledgeStyle::kMcq).output == "D");
  item.answer = "300 μm";
  CHECK_THROWS_AS(make_knowledge_qa(study("m", item), KnowledgeStyle::kMcq), Error);
  item.options.pop_back();
  try {
    make_knowledge_qa(study("m", item), KnowledgeStyle::kMcq);
    FAIL("expected WrongOptionCount");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kWrongOptionCount);
  }
}

TEST_CASE("short answer and style selection") {
  corpus::StudyItem item;
  item.question_text = "First-line treatment for infantile hemangioma?";
  item.answer = " Propranolol ";
  CHECK(pick_style(item) == KnowledgeStyle::kShortAnswerQa);
  const auto instance = make_knowledge_qa(study("q", item), pick_style(item));
  CHECK(instance.output == "Propranolol");
  CHECK(instance.id == "q:short_answer_qa");
  Document not_study = abstract("z", "One. Two.");
  CHECK_THROWS_AS(make_knowledge_qa(not_study, KnowledgeStyle::kShortAnswerQa), Error);
}

TEST_CASE("check_instance reports violations") {
  corpus::StudyItem item;
  item.question_text = "Q?";
  item.options = {"a", "b", "c", "d"};
  item.answer = "c";
  auto instance = make_knowledge_qa(study("m", item), KnowledgeStyle::kMcq);
  CHECK(check_instance(instance).empty());
  auto bad = instance;
  bad.output = "E";
  CHECK_FALSE(check_instance(bad).empty());
  bad = instance;
  bad.instruction += " ";
  CHECK_FALSE(check_instance(bad).empty());
  bad = instance;
  bad.output = "  ";
  CHECK_FALSE(check_instance(bad).empty());
  CHECK(instance_from_json(to_json(instance)) == instance);
}

TEST_CASE("case QA uses the weak labeller") {
  FakeSource source;
  const auto instance = make_case_qa(case_report("cr1"), 3, source);
  CHECK(instance.id == "cr1:case_qa_03");
  CHECK(instance.output == "weak label");
  CHECK(instance.provenance == Provenance::weak("fake-gpt"));
  CHECK(instance_from_json(to_json(instance)) == instance);
  CHECK(check_instance(instance).empty());
}

TEST_CASE("bulk case QA") {
  const std::vector<Document> docs = {case_report("b"), case_report("a"), abstract("x", "A. B.")};
  FakeSource source;
  const auto result = curate_case_reports(docs, source, 4);
  CHECK(source.calls == 30);
  REQUIRE(result.instances.size() == 30);
  CHECK(result.instances.front().id == "a:case_qa_01");
  CHECK(result.instances.back().id == "b:case_qa_15");

  // Empty labels are counted, not fatal.
  const std::string q7(case_questions()[6]);
  FakeSource silent(q7.substr(0, 30));
  const auto partial = curate_case_reports(docs, silent, 2);
  CHECK(partial.instances.size() == 28);
  CHECK(partial.failures.at("EmptyWeakLabel") == 2);

  FakeSource failing("", true);
  CHECK_THROWS_AS(curate_case_reports(docs, failing, 3), Error);
}

TEST_CASE("split partition invariants") {
  std::mt19937_64 rng(42);
  std::vector<std::size_t> sizes = {1, 2, 9, 10, 11, 99, 100, 101, 10000};
  for (int i = 0; i < 40; ++i) sizes.push_back(1 + rng() % 10000);
  for (std::size_t n : sizes) {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back("id" + std::to_string(i * 7919 % 100003));
    const auto split = split_train_val(ids, n);
    CAPTURE(n);
    REQUIRE(split.train.size() == (9 * n) / 10);
    REQUIRE(split.train.size() + split.validation.size() == n);
    std::set<std::string> seen(split.train.begin(), split.train.end());
    for (const auto& id : split.validation) CHECK(seen.insert(id).second);
    CHECK(seen.size() == n);
    // Input order is preserved within each side.
    std::map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < n; ++i) position[ids[i]] = i;
    for (const auto* side : {&split.train, &split.validation}) {
      for (std::size_t i = 1; i < side->size(); ++i) {
        CHECK(position[(*side)[i - 1]] < position[(*side)[i]]);
      }
    }
    CHECK(split_train_val(ids, n) == split);
  }
}

TEST_CASE("split at full dataset size") {
  std::vector<std::string> ids;
  for (int i = 0; i < 103473; ++i) ids.push_back(std::to_string(i));
  const auto split = split_train_val(ids, 42);
  CHECK(split.train.size() == 93125);
  CHECK(split.validation.size() == 10348);
  CHECK(split_from_json(to_json(split)) == split);
  CHECK(split_train_val(ids, 43).validation != split.validation);
}

TEST_CASE("split rejects empty and duplicate input") {
  try {
    split_train_val(std::vector<std::string>{}, 1);
    FAIL("expected EmptyInput");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kEmptyInput);
  }
  try {
    split_train_val(std::vector<std::string>{"a", "b", "a"}, 1);
    FAIL("expected DuplicateIds");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDuplicateIds);
  }
}

TEST_CASE("case report sampling") {
  std::vector<Document> docs;
  for (int i = 0; i < 20; ++i) docs.push_back(case_report("cr" + std::to_string(100 + i)));
  docs.push_back(abstract("ab", "x. y."));
  const auto chosen = sample_case_reports(docs, 5, 9);
  REQUIRE(chosen.size() == 5);
  for (std::size_t i = 1; i < chosen.size(); ++i) CHECK(chosen[i - 1].id < chosen[i].id);
  CHECK(sample_case_reports(docs, 5, 9) == chosen);
  // Input order does not matter.
  std::vector<Document> reversed(docs.rbegin(), docs.rend());
  CHECK(sample_case_reports(reversed, 5, 9) == chosen);
  CHECK(sample_case_reports(docs, 100, 9).size() == 20);
}
