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

#include "eyebench/templates.hpp"

#include <cstdio>

namespace eyebench {

const std::array<TaskKind, kTaskCount>& all_tasks() {
  static const std::array<TaskKind, kTaskCount> kTasks = [] {
    std::array<TaskKind, kTaskCount> tasks{};
    for (int i = 0; i < kTaskCount; ++i) tasks[i] = static_cast<TaskKind>(i);
    return tasks;
  }();
  return kTasks;
}

std::string task_slug(TaskKind task) {
  if (auto index = case_qa_index(task)) {
    char buffer[16];
    std::snprintf(buffer, sizeof(buffer), "case_qa_%02d", *index);
    return buffer;
  }
  switch (task) {
    case TaskKind::kAbstractCompletion: return "abstract_completion";
    case TaskKind::kFillInBlank: return "fill_in_blank";
    case TaskKind::kMcq: return "mcq";
    case TaskKind::kShortAnswerQa: return "short_answer_qa";
    default: break;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown task kind");
}

std::optional<TaskKind> parse_task(std::string_view slug) {
  for (TaskKind task : all_tasks()) {
    if (task_slug(task) == slug) return task;
  }
  return std::nullopt;
}

TaskKind case_qa_task(int index) {
  if (index < 1 || index > kCaseQuestionCount) {
    throw Error(ErrorCode::kInvalidArgument,
                "case question index must be in 1..15, got " +
                    std::to_string(index));
  }
  return static_cast<TaskKind>(index - 1);
}

std::optional<int> case_qa_index(TaskKind task) {
  const int value = static_cast<int>(task);
  if (value >= 0 && value < kCaseQuestionCount) return value + 1;
  return std::nullopt;
}

const std::array<std::string_view, kCaseQuestionCount>& case_questions() {
  static constexpr std::array<std::string_view, kCaseQuestionCount> kQuestions = {
      "Please provide a summary of the following case report.",
      "What background information is provided for the case?",
      "What was the patient presentation?",
      "What was the work-up?",
      "What did the functional exam demonstrate?",
      "What did the slit lamp exam demonstrate?",
      "What imaging modalities, if any, were acquired?",
      "What did the imaging show?",
      "What did the labs show, if there were any acquired?",
      "What was the differential diagnosis, if there was one provided in the case?",
      "What treatment was provided to the patient?",
      "How did the patient respond to treatment?",
      "What was the outcome of the case?",
      "How is this case novel?",
      "What does this case teach us?",
  };
  return kQuestions;
}

std::vector<std::string> placeholders(std::string_view text) {
  std::vector<std::string> names;
  std::size_t pos = 0;
  while ((pos = text.find('{', pos)) != std::string_view::npos) {
    std::size_t close = text.find('}', pos + 1);
    if (close == std::string_view::npos) break;
    std::string_view name = text.substr(pos + 1, close - pos - 1);
    bool identifier = !name.empty();
    for (char c : name) {
      if (!(is_ascii_alnum(c) || c == '_')) identifier = false;
    }
    if (identifier) names.emplace_back(name);
    pos = identifier ? close + 1 : pos + 1;
  }
  return names;
}

namespace {

std::string substitute(std::string_view text,
                       const std::map<std::string, std::string>& payload,
                       std::string_view slug) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t open = text.find('{', pos);
    if (open == std::string_view::npos) {
      out.append(text.substr(pos));
      break;
    }
    out.append(text.substr(pos, open - pos));
    std::size_t close = text.find('}', open + 1);
    if (close == std::string_view::npos) {
      out.append(text.substr(open));
      break;
    }
    std::string name(text.substr(open + 1, close - open - 1));
    auto names = placeholders(text.substr(open, close - open + 1));
    if (names.empty()) {
      out.push_back('{');
      pos = open + 1;
      continue;
    }
    auto it = payload.find(name);
    if (it == payload.end()) {
      throw Error(ErrorCode::kMissingPlaceholder,
                  "template '" + std::string(slug) + "' needs '" + name + "'");
    }
    out += it->second;
    pos = close + 1;
  }
  return out;
}

TemplateRegistry make_builtin() {
  json templates = json::object();
  const std::string case_instruction =
      "The task is to answer a question or provide more information related "
      "to the ophthalmology case report that is given.";
  for (int i = 1; i <= kCaseQuestionCount; ++i) {
    templates[task_slug(case_qa_task(i))] = {
        {"instruction", case_instruction},
        {"input", "{case_report}\n\nQuestion: " +
                      std::string(case_questions()[i - 1])}};
  }
  templates["abstract_completion"] = {
      {"instruction",
       "The task is to complete the ophthalmology related abstract which is "
       "provided. The output is the singular final sentence of the abstract "
       "which has been removed"},
      {"input", "{abstract}"}};
  templates["fill_in_blank"] = {
      {"instruction",
       "The task is to fill in the missing word or words represented in each "
       "input by on or more \"...\". The output is the input with all "
       "instances of \"...\" filled in."},
      {"input", "{question}"}};
  const std::string mcq_instruction =
      "Given a multiple-choice question in the field of ophthalmology, select "
      "the correct answer from the four options.";
  templates["mcq"] = {
      {"instruction", mcq_instruction},
      {"input",
       "{question}\nA. {option_a}\nB. {option_b}\nC. {option_c}\n"
       "D. {option_d}\nPlease answer with A, B, C, or D only."}};
  templates["short_answer_qa"] = {
      {"instruction",
       "Given a medical question in the field of ophthalmology, provide your "
       "answer to the question. Please provide only the answer without "
       "explanation."},
      {"input", "{question}"}};
  templates[std::string(kLongFormQaSlug)] = {
      {"instruction",
       "The task is to answer the question which has been provided by a "
       "patient through an online forum where they can ask Ophthalmologists "
       "questions."},
      {"input", "{question}"}};
  templates[std::string(kEhrSummarizationSlug)] = {
      {"instruction",
       "One liners are often used as a standardized format for presenting a "
       "patients case, either before going into more detail during a "
       "presentation or as a quick refresher so everyone remembers the "
       "relevant history of the patient. Your task is to create a one line "
       "summary of the patients case in the following note. The format should "
       "be: *patient age* *patient gender* with a past medical history of "
       "*past medical history* presents today with *chief complaint* in the "
       "setting of *relevant history or concurrent symptoms.*"},
      {"input", "{clinical_note}"}};
  templates[std::string(kClinicalQaSlug)] = {
      {"instruction",
       "Your task is to provide answers to medical questions by analyzing "
       "clinical notes from actual patient cases. Given an ophthalmology note "
       "from an encounter with a patient in the ED or clinic, please answer "
       "the following clinical questions:\n"
       "Question 1. What was the work-up?\n"
       "Question 2. What did the slit lamp exam demonstrate?\n"
       "Question 3. What treatment was provided to the patient?\n"
       "Question 4. What is the expected clinical course of the patient "
       "following the outlined treatment?\n"
       "The format of your response should be as follows:\n"
       "Question 1: [Your answer]\n"
       "Question 2: [Your answer]\n"
       "Question 3: [Your answer]\n"
       "Question 4: [Your answer]"},
      {"input", "{clinical_note}"}};
  return TemplateRegistry::from_json({{"version", 1}, {"templates", templates}});
}

}  // namespace

const TemplateRegistry& TemplateRegistry::builtin() {
  static const TemplateRegistry kRegistry = make_builtin();
  return kRegistry;
}

TemplateRegistry TemplateRegistry::load(const std::filesystem::path& path) {
  json document = json::parse(read_file(path), nullptr, false);
  if (document.is_discarded()) {
    throw Error(ErrorCode::kConfigInvalid, path.string() + ": not valid JSON");
  }
  return from_json(document);
}

TemplateRegistry TemplateRegistry::from_json(const json& document) {
  if (!document.is_object() || !document.contains("templates") ||
      !document["templates"].is_object()) {
    throw Error(ErrorCode::kConfigInvalid, "template registry needs 'templates'");
  }
  TemplateRegistry registry;
  for (const auto& [slug, entry] : document["templates"].items()) {
    if (!entry.is_object() || !entry.contains("instruction") ||
        !entry.contains("input") || !entry["instruction"].is_string() ||
        !entry["input"].is_string()) {
      throw Error(ErrorCode::kConfigInvalid,
                  "template '" + slug + "' needs string instruction and input");
    }
    registry.templates_[slug] = {entry["instruction"].get<std::string>(),
                                 entry["input"].get<std::string>()};
  }
  for (TaskKind task : all_tasks()) {
    if (!registry.contains(task_slug(task))) {
      throw Error(ErrorCode::kConfigInvalid,
                  "template registry lacks task '" + task_slug(task) + "'");
    }
  }
  return registry;
}

json TemplateRegistry::to_json() const {
  json templates = json::object();
  for (const auto& [slug, entry] : templates_) {
    templates[slug] = {{"instruction", entry.instruction}, {"input", entry.input}};
  }
  return {{"version", 1}, {"templates", templates}};
}

std::string TemplateRegistry::digest() const { return sha256_hex(to_json().dump()); }

const Template& TemplateRegistry::get(std::string_view slug) const {
  auto it = templates_.find(slug);
  if (it == templates_.end()) {
    throw Error(ErrorCode::kInvalidArgument,
                "no template named '" + std::string(slug) + "'");
  }
  return it->second;
}

bool TemplateRegistry::contains(std::string_view slug) const {
  return templates_.find(slug) != templates_.end();
}

RenderedPrompt TemplateRegistry::render(
    std::string_view slug, const std::map<std::string, std::string>& payload) const {
  const Template& entry = get(slug);
  return {substitute(entry.instruction, payload, slug),
          substitute(entry.input, payload, slug)};
}

RenderedPrompt render_template(TaskKind task,
                               const std::map<std::string, std::string>& payload,
                               const TemplateRegistry& registry) {
  return registry.render(task_slug(task), payload);
}

std::string format_prompt(const RenderedPrompt& prompt) {
  return "Task: " + prompt.instruction + "\nInput: " + prompt.input + "\nOutput:";
}

}  // namespace eyebench
