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

#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "eyebench/common.hpp"

namespace eyebench {

// The nineteen instruction-tuning tasks: fifteen case-report questions, in
// registry order, followed by the literature and knowledge tasks.
enum class TaskKind : int {
  kCaseQa1 = 0,
  kCaseQa15 = 14,
  kAbstractCompletion = 15,
  kFillInBlank = 16,
  kMcq = 17,
  kShortAnswerQa = 18,
};

inline constexpr int kTaskCount = 19;
inline constexpr int kCaseQuestionCount = 15;

const std::array<TaskKind, kTaskCount>& all_tasks();
// "case_qa_01" ... "case_qa_15", "abstract_completion", "fill_in_blank",
// "mcq", "short_answer_qa".
std::string task_slug(TaskKind task);
std::optional<TaskKind> parse_task(std::string_view slug);
// index in 1..15.
TaskKind case_qa_task(int index);
// 1..15 for case QA tasks, nullopt otherwise.
std::optional<int> case_qa_index(TaskKind task);
const std::array<std::string_view, kCaseQuestionCount>& case_questions();

// Evaluation-only templates that are not part of the nineteen tasks.
inline constexpr std::string_view kLongFormQaSlug = "long_form_qa";
inline constexpr std::string_view kEhrSummarizationSlug = "ehr_summarization";
inline constexpr std::string_view kClinicalQaSlug = "clinical_qa";

// Marks a blank in fill-in-the-blank inputs.
inline constexpr std::string_view kBlankMarker = "...";

struct Template {
  std::string instruction;
  // Placeholders are written {name}; every one must be supplied at render.
  std::string input;
};

struct RenderedPrompt {
  std::string instruction;
  std::string input;
};

class TemplateRegistry {
 public:
  // The verbatim instruction formats shipped with the tool.
  static const TemplateRegistry& builtin();
  // {"version":1,"templates":{slug:{"instruction":..,"input":..}}}; must
  // cover every one of the nineteen task slugs.
  static TemplateRegistry load(const std::filesystem::path& path);
  static TemplateRegistry from_json(const json& document);

  json to_json() const;
  // sha256 of the canonical JSON form; pinned by the golden tests.
  std::string digest() const;

  const Template& get(std::string_view slug) const;
  bool contains(std::string_view slug) const;

  RenderedPrompt render(std::string_view slug,
                        const std::map<std::string, std::string>& payload) const;

 private:
  std::map<std::string, Template, std::less<>> templates_;
};

// Placeholder names appearing in a template string, in order of appearance.
std::vector<std::string> placeholders(std::string_view text);

RenderedPrompt render_template(TaskKind task,
                               const std::map<std::string, std::string>& payload,
                               const TemplateRegistry& registry =
                                   TemplateRegistry::builtin());

// Prompt text sent to a backend for an instruction/input pair.
std::string format_prompt(const RenderedPrompt& prompt);

}  // namespace eyebench
