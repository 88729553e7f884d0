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

// Instruction dataset construction and the train/validation split.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eyebench/common.hpp"
#include "eyebench/corpus.hpp"
#include "eyebench/llm_gateway.hpp"
#include "eyebench/templates.hpp"

namespace eyebench::curation {

struct Provenance {
  enum class Kind { kGoldFromCorpus, kWeakLabel };
  Kind kind = Kind::kGoldFromCorpus;
  std::string model_id;  // set for kWeakLabel

  static Provenance gold() { return {}; }
  static Provenance weak(std::string model) {
    return {Kind::kWeakLabel, std::move(model)};
  }
  bool operator==(const Provenance&) const = default;
};

struct InstructionInstance {
  std::string id;  // "<doc id>:<task slug>"
  TaskKind task = TaskKind::kCaseQa1;
  std::string instruction;
  std::string input;
  std::string output;
  std::string source_doc;
  Provenance provenance;

  bool operator==(const InstructionInstance&) const = default;
};

json to_json(const InstructionInstance& instance);
InstructionInstance instance_from_json(const json& value);

// Empty string when the instance satisfies every dataset invariant,
// otherwise a description of the first violation.
std::string check_instance(const InstructionInstance& instance,
                           const TemplateRegistry& registry =
                               TemplateRegistry::builtin());

// Sentence boundaries: '.', '!' or '?' (plus closing quotes/brackets), then
// whitespace, then an uppercase letter, digit or opening quote. Common
// abbreviations ("vs.", "et al.", "Fig.") do not end a sentence.
std::vector<std::string> segment_sentences(std::string_view text);

InstructionInstance make_abstract_completion(
    const corpus::Document& doc,
    const TemplateRegistry& registry = TemplateRegistry::builtin());

// q in 1..15. The completion is the weak label.
InstructionInstance make_case_qa(const corpus::Document& doc, int q,
                                 gateway::CompletionSource& client,
                                 const TemplateRegistry& registry =
                                     TemplateRegistry::builtin());

enum class KnowledgeStyle { kFillInBlank, kMcq, kShortAnswerQa };

InstructionInstance make_knowledge_qa(const corpus::Document& doc,
                                      KnowledgeStyle style,
                                      const TemplateRegistry& registry =
                                          TemplateRegistry::builtin());

// Four options make an MCQ, otherwise cloze spans make a fill-in-blank,
// otherwise a short-answer question.
KnowledgeStyle pick_style(const corpus::StudyItem& item);

// Bulk generation. Failures are counted per error name, never fatal
// (except BackendError/AuthMissing in case QA, which propagate).
struct CurationResult {
  std::vector<InstructionInstance> instances;  // sorted by (source_doc, task)
  std::map<std::string, std::size_t> failures;
};

CurationResult curate_abstracts(std::span<const corpus::Document> docs,
                                const TemplateRegistry& registry =
                                    TemplateRegistry::builtin());
CurationResult curate_study_items(std::span<const corpus::Document> docs,
                                  const TemplateRegistry& registry =
                                      TemplateRegistry::builtin());
// All fifteen questions for every report, at most `jobs` completions in
// flight.
CurationResult curate_case_reports(std::span<const corpus::Document> docs,
                                   gateway::CompletionSource& client, int jobs,
                                   const TemplateRegistry& registry =
                                       TemplateRegistry::builtin());

// Seeded choice of `count` reports (all of them when fewer), returned in
// id order.
std::vector<corpus::Document> sample_case_reports(
    std::span<const corpus::Document> docs, std::size_t count, std::uint64_t seed);

struct SplitResult {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::uint64_t seed = 0;

  bool operator==(const SplitResult&) const = default;
};

// |train| = floor(0.9 N). Both lists keep the input order.
SplitResult split_train_val(std::span<const std::string> ids, std::uint64_t seed);

json to_json(const SplitResult& split);
SplitResult split_from_json(const json& value);

}  // namespace eyebench::curation
