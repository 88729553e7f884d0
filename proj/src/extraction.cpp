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

#include "eyebench/extraction.hpp"

#include <algorithm>
#include <vector>

namespace eyebench::extraction {

namespace {

constexpr std::array<std::string_view, 5> kKindNames = {
    "mcq", "fill_in_blank", "short_answer_qa", "abstract_completion", "long_form_qa"};

constexpr std::array<std::string_view, 5> kMethodNames = {
    "letter_pattern", "option_text_match", "first_line", "full_text", "unparseable"};

constexpr std::array<std::string_view, 3> kEchoPrefixes = {"Output:", "Answer:",
                                                           "Input:"};

// Section and role labels that signal the model started a new turn.
constexpr std::array<std::string_view, 8> kEchoMarkers = {
    "Question:", "Input:", "Output:", "Answer:",
    "Human:",    "Assistant:", "Instruction:", "Task:"};

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

char upper(char c) { return (c >= 'a' && c <= 'z') ? static_cast<char>(c - 32) : c; }

bool is_option_letter(char c) {
  const char u = upper(c);
  return u >= 'A' && u <= 'D';
}

bool boundary_before(std::string_view text, std::size_t pos) {
  return pos == 0 || !is_ascii_alnum(text[pos - 1]);
}

bool boundary_after(std::string_view text, std::size_t end) {
  return end >= text.size() || !is_ascii_alnum(text[end]);
}

bool istarts_with(std::string_view text, std::string_view prefix) {
  return text.size() >= prefix.size() && iequals(text.substr(0, prefix.size()), prefix);
}

std::string strip_echo_prefixes(std::string text) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::string_view prefix : kEchoPrefixes) {
      if (istarts_with(text, prefix)) {
        text = trim(std::string_view(text).substr(prefix.size()));
        changed = true;
      }
    }
  }
  return text;
}

ExtractedAnswer mcq_answer(char letter, Method method, std::string note) {
  ExtractedAnswer answer;
  answer.kind = AnswerKind::kMcq;
  answer.value = std::string(1, upper(letter));
  answer.method = method;
  answer.note = std::move(note);
  return answer;
}

std::optional<char> leading_letter(std::string_view s) {
  std::size_t i = 0;
  if (i < s.size() && s[i] == '(') ++i;
  if (i >= s.size() || !is_option_letter(s[i])) return std::nullopt;
  const std::size_t next = i + 1;
  if (next == s.size()) return s[i];
  const char c = s[next];
  if (c == ')' || c == '.' || c == ':' || c == ']' || c == '*') return s[i];
  return std::nullopt;
}

// Position and letter of the earliest "answer is X"-style phrase.
std::optional<std::pair<std::size_t, char>> answer_phrase(std::string_view s) {
  static constexpr std::array<std::string_view, 3> kPhrases = {
      "answer is", "answer would be", "answer:"};
  std::optional<std::pair<std::size_t, char>> best;
  for (std::string_view phrase : kPhrases) {
    for (std::size_t at = ifind(s, phrase); at != std::string_view::npos;
         at = ifind(s, phrase, at + 1)) {
      if (best && at >= best->first) break;
      std::size_t p = at + phrase.size();
      while (p < s.size() && is_space(s[p])) ++p;
      if (istarts_with(s.substr(p), "option")) {
        p += 6;
        while (p < s.size() && is_space(s[p])) ++p;
      }
      bool paren = false;
      if (p < s.size() && s[p] == '(') {
        paren = true;
        ++p;
      }
      if (p >= s.size() || !is_option_letter(s[p])) continue;
      const char letter = s[p];
      if (!boundary_after(s, p + 1)) continue;
      const bool terminal = p + 1 >= s.size() || s[p + 1] == '.' || s[p + 1] == ')' ||
                            s[p + 1] == ':' || s[p + 1] == ',';
      // "the answer is a history of ..." uses the article, not option A.
      if (letter >= 'a' && letter <= 'z' && !paren && !terminal) continue;
      best = std::make_pair(at, letter);
      break;
    }
  }
  return best;
}

// Earliest "X. <option X text>" (or "X) ..."/"(X) ...").
std::optional<std::pair<std::size_t, char>> labeled_option(std::string_view s,
                                                           const McqOptions& options) {
  std::optional<std::pair<std::size_t, char>> best;
  for (int i = 0; i < 4; ++i) {
    const std::string text = trim(options[i]);
    if (text.empty()) continue;
    const char letter = static_cast<char>('A' + i);
    const std::string forms[] = {std::string(1, letter) + ". " + text,
                                 std::string(1, letter) + ") " + text,
                                 "(" + std::string(1, letter) + ") " + text};
    for (const std::string& form : forms) {
      for (std::size_t at = ifind(s, form); at != std::string_view::npos;
           at = ifind(s, form, at + 1)) {
        if (!boundary_before(s, at)) continue;
        if (!best || at < best->first) best = std::make_pair(at, letter);
        break;
      }
    }
  }
  return best;
}

std::optional<char> unique_option_text(std::string_view s, const McqOptions& options) {
  struct Hit {
    int option;
    std::size_t begin;
    std::size_t end;
  };
  std::vector<Hit> hits;
  for (int i = 0; i < 4; ++i) {
    const std::string text = trim(options[i]);
    if (text.empty()) continue;
    for (std::size_t at = ifind(s, text); at != std::string_view::npos;
         at = ifind(s, text, at + 1)) {
      if (boundary_before(s, at) && boundary_after(s, at + text.size())) {
        hits.push_back({i, at, at + text.size()});
      }
    }
  }
  std::array<bool, 4> counted{};
  for (const Hit& hit : hits) {
    bool nested = false;
    for (const Hit& other : hits) {
      if (other.option == hit.option) continue;
      if (other.begin <= hit.begin && hit.end <= other.end &&
          other.end - other.begin > hit.end - hit.begin) {
        nested = true;
      }
    }
    if (!nested) counted[hit.option] = true;
  }
  int found = -1;
  for (int i = 0; i < 4; ++i) {
    if (!counted[i]) continue;
    if (found >= 0) return std::nullopt;
    found = i;
  }
  if (found < 0) return std::nullopt;
  return static_cast<char>('A' + found);
}

std::vector<std::string> split_paragraphs(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t next = text.find("\n\n", pos);
    if (next == std::string_view::npos) next = text.size();
    out.emplace_back(text.substr(pos, next - pos));
    pos = next + 2;
  }
  return out;
}

// Sentence-sized units: text up to and including [.!?] followed by space.
std::vector<std::string> split_units(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if ((c == '.' || c == '!' || c == '?') && i + 1 < text.size() &&
        is_space(text[i + 1])) {
      out.push_back(trim(text.substr(start, i + 1 - start)));
      start = i + 1;
    }
  }
  std::string tail = trim(text.substr(start));
  if (!tail.empty()) out.push_back(tail);
  return out;
}

// Collapses runs of >= 3 identical (trimmed, non-empty) units to one.
bool collapse_runs(std::vector<std::string>& units) {
  std::vector<std::string> kept;
  bool changed = false;
  for (std::size_t i = 0; i < units.size();) {
    std::size_t j = i + 1;
    const std::string key = trim(units[i]);
    while (j < units.size() && trim(units[j]) == key) ++j;
    if (j - i >= 3 && !key.empty()) {
      kept.push_back(units[i]);
      changed = true;
    } else {
      for (std::size_t k = i; k < j; ++k) kept.push_back(units[k]);
    }
    i = j;
  }
  if (changed) units = std::move(kept);
  return changed;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string cut_at_echo_marker(const std::string& text) {
  std::size_t cut = text.size();
  for (std::string_view marker : kEchoMarkers) {
    for (std::size_t at = text.find(marker, 1); at != std::string::npos && at < cut;
         at = text.find(marker, at + 1)) {
      if (boundary_before(text, at)) {
        cut = at;
        break;
      }
    }
  }
  return trim(std::string_view(text).substr(0, cut));
}

std::string collapse_repeats(const std::string& text) {
  auto paragraphs = split_paragraphs(text);
  bool changed = collapse_runs(paragraphs);
  for (auto& paragraph : paragraphs) {
    auto units = split_units(paragraph);
    if (collapse_runs(units)) {
      paragraph = join(units, " ");
      changed = true;
    }
  }
  return changed ? trim(join(paragraphs, "\n\n")) : text;
}

struct Step {
  std::string text;
  bool first_line = false;
};

Step clean_once(const std::string& input, AnswerKind kind) {
  Step step;
  std::string text = strip_echo_prefixes(trim(input));
  text = cut_at_echo_marker(text);
  text = collapse_repeats(text);
  if (kind == AnswerKind::kFillInBlank || kind == AnswerKind::kShortAnswerQa) {
    std::vector<std::string> lines;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      std::size_t end = text.find('\n', pos);
      if (end == std::string::npos) end = text.size();
      std::string line = trim(std::string_view(text).substr(pos, end - pos));
      if (!line.empty()) lines.push_back(std::move(line));
      pos = end + 1;
    }
    if (lines.size() > 1) {
      text = lines.front();
      step.first_line = true;
    }
  }
  step.text = std::move(text);
  return step;
}

}  // namespace

std::string_view answer_kind_name(AnswerKind kind) {
  return kKindNames[static_cast<std::size_t>(kind)];
}

std::optional<AnswerKind> parse_answer_kind(std::string_view name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == name) return static_cast<AnswerKind>(i);
  }
  return std::nullopt;
}

AnswerKind answer_kind_for(TaskKind task) {
  switch (task) {
    case TaskKind::kMcq: return AnswerKind::kMcq;
    case TaskKind::kFillInBlank: return AnswerKind::kFillInBlank;
    case TaskKind::kShortAnswerQa: return AnswerKind::kShortAnswerQa;
    case TaskKind::kAbstractCompletion: return AnswerKind::kAbstractCompletion;
    default: return AnswerKind::kLongFormQa;
  }
}

std::string_view method_name(Method method) {
  return kMethodNames[static_cast<std::size_t>(method)];
}

json to_json(const ExtractedAnswer& answer) {
  return {{"kind", answer_kind_name(answer.kind)},
          {"value", answer.value},
          {"method", method_name(answer.method)},
          {"note", answer.note}};
}

ExtractedAnswer extracted_from_json(const json& value) {
  ExtractedAnswer answer;
  try {
    auto kind = parse_answer_kind(value.at("kind").get<std::string>());
    if (!kind) throw Error(ErrorCode::kMalformedRecord, "unknown answer kind");
    answer.kind = *kind;
    answer.value = value.at("value").get<std::string>();
    const std::string method = value.at("method").get<std::string>();
    auto it = std::find(kMethodNames.begin(), kMethodNames.end(), method);
    if (it == kMethodNames.end()) {
      throw Error(ErrorCode::kMalformedRecord, "unknown method '" + method + "'");
    }
    answer.method = static_cast<Method>(it - kMethodNames.begin());
    answer.note = value.value("note", "");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedRecord, std::string("extracted: ") + e.what());
  }
  return answer;
}

ExtractedAnswer extract_mcq(std::string_view raw, const McqOptions& options) {
  std::string s = trim(raw);
  std::size_t lead = 0;
  while (lead < s.size() && (s[lead] == '*' || s[lead] == '#' || is_space(s[lead]))) {
    ++lead;
  }
  s = strip_echo_prefixes(s.substr(lead));
  while (!s.empty() && s[0] == '*') s.erase(0, 1);

  if (auto letter = leading_letter(s)) {
    return mcq_answer(*letter, Method::kLetterPattern, "leading letter");
  }
  auto phrase = answer_phrase(s);
  auto labeled = labeled_option(s, options);
  if (phrase && (!labeled || phrase->first <= labeled->first)) {
    return mcq_answer(phrase->second, Method::kLetterPattern, "answer phrase");
  }
  if (labeled) {
    return mcq_answer(labeled->second, Method::kLetterPattern, "labeled option text");
  }
  if (auto letter = unique_option_text(s, options)) {
    return mcq_answer(*letter, Method::kOptionTextMatch, "option text");
  }
  ExtractedAnswer answer;
  answer.kind = AnswerKind::kMcq;
  answer.method = Method::kUnparseable;
  answer.note = "no option identified";
  return answer;
}

ExtractedAnswer extract_freeform(std::string_view raw, AnswerKind kind) {
  ExtractedAnswer answer;
  answer.kind = kind;
  answer.method = Method::kFullText;
  std::string text(raw);
  bool first_line = false;
  for (int guard = 0; guard < 64; ++guard) {
    Step step = clean_once(text, kind);
    first_line = first_line || step.first_line;
    if (step.text == text) break;
    text = std::move(step.text);
  }
  if (text.empty()) {
    answer.value = std::string(raw);
    return answer;
  }
  answer.value = std::move(text);
  if (first_line) answer.method = Method::kFirstLine;
  return answer;
}

std::optional<McqOptions> options_from_input(std::string_view input) {
  McqOptions options;
  std::array<bool, 4> seen{};
  std::size_t pos = 0;
  while (pos <= input.size()) {
    std::size_t end = input.find('\n', pos);
    if (end == std::string_view::npos) end = input.size();
    std::string_view line = input.substr(pos, end - pos);
    if (line.size() >= 3 && line[0] >= 'A' && line[0] <= 'D' && line[1] == '.' &&
        line[2] == ' ') {
      const int index = line[0] - 'A';
      options[index] = std::string(line.substr(3));
      seen[index] = true;
    }
    pos = end + 1;
  }
  for (bool present : seen) {
    if (!present) return std::nullopt;
  }
  return options;
}

}  // namespace eyebench::extraction
