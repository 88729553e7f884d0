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

// Pulls the scoreable prediction out of a raw model response.

#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "eyebench/common.hpp"
#include "eyebench/templates.hpp"

namespace eyebench::extraction {

// What kind of answer a response is expected to carry. Broader than the
// training tasks: long-form QA only appears at evaluation time.
enum class AnswerKind {
  kMcq,
  kFillInBlank,
  kShortAnswerQa,
  kAbstractCompletion,
  kLongFormQa,
};

std::string_view answer_kind_name(AnswerKind kind);
std::optional<AnswerKind> parse_answer_kind(std::string_view name);
// Case QA tasks are scored as long-form answers.
AnswerKind answer_kind_for(TaskKind task);

enum class Method { kLetterPattern, kOptionTextMatch, kFirstLine, kFullText, kUnparseable };

std::string_view method_name(Method method);

struct ExtractedAnswer {
  AnswerKind kind = AnswerKind::kMcq;
  std::string value;  // a letter A-D for parsed MCQ answers
  Method method = Method::kUnparseable;
  std::string note;

  bool parsed() const { return method != Method::kUnparseable; }
};

json to_json(const ExtractedAnswer& answer);
ExtractedAnswer extracted_from_json(const json& value);

using McqOptions = std::array<std::string, 4>;

// Rules, first match wins:
//   1. a letter at the very start: "B", "B.", "(B)", "B:", "B)";
//   2. "answer is X", "answer: (X)", "answer is option X", or "X." followed
//      by option X's own text anywhere;
//   3. exactly one option's text appears in the response.
// Otherwise kUnparseable.
ExtractedAnswer extract_mcq(std::string_view raw, const McqOptions& options);

// Strips echoed template prefixes, cuts at a later echoed role/section
// marker, collapses a unit repeated three or more times in a row, and keeps
// only the first line for short-answer and fill-in-blank. Idempotent.
ExtractedAnswer extract_freeform(std::string_view raw, AnswerKind kind);

// Recovers the four options from a rendered MCQ input ("A. ..." lines).
std::optional<McqOptions> options_from_input(std::string_view input);

}  // namespace eyebench::extraction
