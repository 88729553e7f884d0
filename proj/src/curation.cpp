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

#include <algorithm>
#include <array>
#include <atomic>
#include <exception>
#include <mutex>
#include <set>
#include <thread>
#include <unordered_set>
#include <utility>

namespace eyebench::curation {

namespace {

std::string instance_id(const corpus::Document& doc, TaskKind task) {
  return doc.id + ":" + task_slug(task);
}

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool starts_with_at(std::string_view text, std::size_t pos, std::string_view what) {
  return text.substr(pos, what.size()) == what;
}

// Closing quote/bracket after terminal punctuation; returns its byte length.
std::size_t closer_length(std::string_view text, std::size_t pos) {
  if (pos >= text.size()) return 0;
  const char c = text[pos];
  if (c == '"' || c == '\'' || c == ')' || c == ']') return 1;
  if (starts_with_at(text, pos, "”") || starts_with_at(text, pos, "’")) {
    return 3;
  }
  return 0;
}

bool opens_sentence(std::string_view text, std::size_t pos) {
  if (pos >= text.size()) return false;
  const char c = text[pos];
  if ((c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9')) return true;
  if (c == '"' || c == '\'' || c == '(' || c == '[') return true;
  return starts_with_at(text, pos, "“") || starts_with_at(text, pos, "‘");
}

const std::set<std::string, std::less<>>& abbreviations() {
  static const std::set<std::string, std::less<>> kWords = {
      "vs",  "dr",   "fig", "figs", "e.g", "i.e", "approx", "mr", "mrs",
      "ms",  "prof", "st",  "cf",   "ref", "eq",  "vol",    "resp", "ca",
      "jr",  "sr",   "inc", "ltd",  "co",  "mt",  "no",     "nos"};
  return kWords;
}

// True when the '.' at `dot` terminates an abbreviation.
bool is_abbreviation(std::string_view text, std::size_t dot) {
  std::size_t begin = dot;
  while (begin > 0 && !is_space(text[begin - 1]) && text[begin - 1] != '(') --begin;
  const std::string word = to_lower_ascii(text.substr(begin, dot - begin));
  if (word.empty()) return false;
  if (word == "al") {
    std::size_t end = begin;
    while (end > 0 && is_space(text[end - 1])) --end;
    return end >= 2 && to_lower_ascii(text.substr(end - 2, 2)) == "et" &&
           (end == 2 || is_space(text[end - 3]));
  }
  return abbreviations().count(word) > 0;
}

struct Span {
  std::size_t begin;
  std::size_t end;
};

std::vector<Span> sentence_spans(std::string_view text) {
  std::vector<Span> spans;
  std::size_t start = 0;
  while (start < text.size() && is_space(text[start])) ++start;
  for (std::size_t i = start; i < text.size(); ++i) {
    const char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    std::size_t j = i + 1;
    while (std::size_t n = closer_length(text, j)) j += n;
    if (j >= text.size() || !is_space(text[j])) continue;
    std::size_t k = j;
    while (k < text.size() && is_space(text[k])) ++k;
    if (!opens_sentence(text, k)) continue;
    if (c == '.' && is_abbreviation(text, i)) continue;
    spans.push_back({start, j});
    start = k;
    i = k - 1;
  }
  std::size_t end = text.size();
  while (end > start && is_space(text[end - 1])) --end;
  if (end > start) spans.push_back({start, end});
  return spans;
}

InstructionInstance build(const corpus::Document& doc, TaskKind task,
                          const RenderedPrompt& rendered, std::string output,
                          Provenance provenance) {
  InstructionInstance instance;
  instance.id = instance_id(doc, task);
  instance.task = task;
  instance.instruction = rendered.instruction;
  instance.input = rendered.input;
  instance.output = std::move(output);
  instance.source_doc = doc.id;
  instance.provenance = std::move(provenance);
  return instance;
}

const corpus::StudyItem& study_of(const corpus::Document& doc) {
  if (doc.kind != corpus::DocumentKind::kStudyItem || !doc.study) {
    throw Error(ErrorCode::kInvalidArgument, doc.id + " is not a study item");
  }
  return *doc.study;
}

void sort_instances(std::vector<InstructionInstance>& instances) {
  std::sort(instances.begin(), instances.end(),
            [](const InstructionInstance& a, const InstructionInstance& b) {
              if (a.source_doc != b.source_doc) return a.source_doc < b.source_doc;
              return static_cast<int>(a.task) < static_cast<int>(b.task);
            });
}

std::string code_key(ErrorCode code) { return std::string(error_code_name(code)); }

}  // namespace

json to_json(const InstructionInstance& instance) {
  json provenance = {{"kind", instance.provenance.kind == Provenance::Kind::kWeakLabel
                                  ? "weak_label"
                                  : "gold_from_corpus"}};
  if (instance.provenance.kind == Provenance::Kind::kWeakLabel) {
    provenance["model_id"] = instance.provenance.model_id;
  }
  return {{"id", instance.id},
          {"task", task_slug(instance.task)},
          {"instruction", instance.instruction},
          {"input", instance.input},
          {"output", instance.output},
          {"source_doc", instance.source_doc},
          {"provenance", provenance}};
}

InstructionInstance instance_from_json(const json& value) {
  try {
    InstructionInstance instance;
    instance.id = value.at("id").get<std::string>();
    const std::string slug = value.at("task").get<std::string>();
    auto task = parse_task(slug);
    if (!task) throw Error(ErrorCode::kMalformedRecord, "unknown task '" + slug + "'");
    instance.task = *task;
    instance.instruction = value.at("instruction").get<std::string>();
    instance.input = value.at("input").get<std::string>();
    instance.output = value.at("output").get<std::string>();
    instance.source_doc = value.at("source_doc").get<std::string>();
    const json& provenance = value.at("provenance");
    if (provenance.at("kind").get<std::string>() == "weak_label") {
      instance.provenance = Provenance::weak(provenance.at("model_id").get<std::string>());
    }
    return instance;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedRecord, std::string("instance: ") + e.what());
  }
}

std::string check_instance(const InstructionInstance& instance,
                           const TemplateRegistry& registry) {
  const std::string slug = task_slug(instance.task);
  if (instance.instruction != registry.get(slug).instruction) {
    return "instruction differs from the '" + slug + "' template";
  }
  if (trim(instance.output).empty()) return "empty output";
  if (instance.task == TaskKind::kMcq) {
    std::array<int, 4> seen{};
    std::size_t pos = 0;
    while (pos <= instance.input.size()) {
      std::size_t end = instance.input.find('\n', pos);
      if (end == std::string::npos) end = instance.input.size();
      std::string_view line(instance.input.data() + pos, end - pos);
      if (line.size() >= 3 && line[0] >= 'A' && line[0] <= 'D' && line[1] == '.' &&
          line[2] == ' ') {
        ++seen[line[0] - 'A'];
      }
      pos = end + 1;
    }
    for (int count : seen) {
      if (count != 1) return "MCQ input needs exactly one each of options A-D";
    }
    if (instance.output.size() != 1 || instance.output[0] < 'A' ||
        instance.output[0] > 'D') {
      return "MCQ output must be one of A, B, C, D";
    }
  }
  if (instance.task == TaskKind::kFillInBlank) {
    if (instance.input.find(kBlankMarker) == std::string::npos) {
      return "fill-in-blank input has no blank";
    }
    if (instance.output.find(kBlankMarker) != std::string::npos) {
      return "fill-in-blank output contains a blank marker";
    }
  }
  return "";
}

std::vector<std::string> segment_sentences(std::string_view text) {
  std::vector<std::string> sentences;
  for (const Span& span : sentence_spans(text)) {
    sentences.emplace_back(text.substr(span.begin, span.end - span.begin));
  }
  return sentences;
}

InstructionInstance make_abstract_completion(const corpus::Document& doc,
                                             const TemplateRegistry& registry) {
  const auto spans = sentence_spans(doc.body);
  if (spans.size() < 2) {
    throw Error(ErrorCode::kSingleSentenceAbstract,
                doc.id + " has fewer than two sentences");
  }
  const Span& last = spans.back();
  std::string_view body(doc.body);
  std::string head(body.substr(0, last.begin));
  while (!head.empty() && is_space(head.back())) head.pop_back();
  const auto rendered =
      render_template(TaskKind::kAbstractCompletion, {{"abstract", head}}, registry);
  return build(doc, TaskKind::kAbstractCompletion, rendered,
               std::string(body.substr(last.begin, last.end - last.begin)),
               Provenance::gold());
}

InstructionInstance make_case_qa(const corpus::Document& doc, int q,
                                 gateway::CompletionSource& client,
                                 const TemplateRegistry& registry) {
  const TaskKind task = case_qa_task(q);
  const auto rendered = render_template(task, {{"case_report", doc.body}}, registry);
  const gateway::RawResponse response = client.complete(format_prompt(rendered));
  std::string output = trim(response.text);
  if (output.empty()) {
    throw Error(ErrorCode::kEmptyWeakLabel,
                client.model_id() + " returned nothing for " + instance_id(doc, task));
  }
  return build(doc, task, rendered, std::move(output),
               Provenance::weak(client.model_id()));
}

KnowledgeStyle pick_style(const corpus::StudyItem& item) {
  if (item.options.size() == 4) return KnowledgeStyle::kMcq;
  if (!item.cloze_spans.empty()) return KnowledgeStyle::kFillInBlank;
  return KnowledgeStyle::kShortAnswerQa;
}

InstructionInstance make_knowledge_qa(const corpus::Document& doc, KnowledgeStyle style,
                                      const TemplateRegistry& registry) {
  const corpus::StudyItem& item = study_of(doc);
  switch (style) {
    case KnowledgeStyle::kFillInBlank: {
      if (item.cloze_spans.empty()) {
        throw Error(ErrorCode::kMissingClozeSpans, doc.id + " has no cloze spans");
      }
      if (item.question_text.find(kBlankMarker) != std::string::npos) {
        throw Error(ErrorCode::kBlankMarkerInText,
                    doc.id + " already contains the blank marker");
      }
      std::string blanked = item.question_text;
      auto spans = item.cloze_spans;
      std::sort(spans.begin(), spans.end(),
                [](const auto& a, const auto& b) { return a.start > b.start; });
      for (const auto& span : spans) {
        auto begin = utf8_byte_offset(item.question_text, span.start);
        auto end = utf8_byte_offset(item.question_text, span.end);
        if (!begin || !end || *begin >= *end) {
          throw Error(ErrorCode::kMalformedRecord, doc.id + ": cloze span out of range");
        }
        blanked.replace(*begin, *end - *begin, kBlankMarker);
      }
      const auto rendered =
          render_template(TaskKind::kFillInBlank, {{"question", blanked}}, registry);
      return build(doc, TaskKind::kFillInBlank, rendered, item.question_text,
                   Provenance::gold());
    }
    case KnowledgeStyle::kMcq: {
      if (item.options.size() != 4) {
        throw Error(ErrorCode::kWrongOptionCount,
                    doc.id + " has " + std::to_string(item.options.size()) +
                        " options, MCQ needs 4");
      }
      std::string letter;
      for (std::size_t i = 0; i < 4; ++i) {
        if (item.options[i] == item.answer) letter = std::string(1, char('A' + i));
      }
      if (letter.empty() && item.answer.size() == 1 && item.answer[0] >= 'A' &&
          item.answer[0] <= 'D') {
        letter = item.answer;
      }
      if (letter.empty()) {
        throw Error(ErrorCode::kMalformedRecord, doc.id + ": answer is not an option");
      }
      const auto rendered = render_template(TaskKind::kMcq,
                                            {{"question", item.question_text},
                                             {"option_a", item.options[0]},
                                             {"option_b", item.options[1]},
                                             {"option_c", item.options[2]},
                                             {"option_d", item.options[3]}},
                                            registry);
      return build(doc, TaskKind::kMcq, rendered, letter, Provenance::gold());
    }
    case KnowledgeStyle::kShortAnswerQa: {
      std::string answer = trim(item.answer);
      if (answer.empty()) {
        throw Error(ErrorCode::kMalformedRecord, doc.id + " has no answer");
      }
      const auto rendered = render_template(
          TaskKind::kShortAnswerQa, {{"question", item.question_text}}, registry);
      return build(doc, TaskKind::kShortAnswerQa, rendered, std::move(answer),
                   Provenance::gold());
    }
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown knowledge style");
}

CurationResult curate_abstracts(std::span<const corpus::Document> docs,
                                const TemplateRegistry& registry) {
  CurationResult result;
  for (const auto& doc : docs) {
    if (doc.kind != corpus::DocumentKind::kAbstract) continue;
    try {
      result.instances.push_back(make_abstract_completion(doc, registry));
    } catch (const Error& e) {
      ++result.failures[code_key(e.code())];
    }
  }
  sort_instances(result.instances);
  return result;
}

CurationResult curate_study_items(std::span<const corpus::Document> docs,
                                  const TemplateRegistry& registry) {
  CurationResult result;
  for (const auto& doc : docs) {
    if (doc.kind != corpus::DocumentKind::kStudyItem || !doc.study) continue;
    try {
      result.instances.push_back(
          make_knowledge_qa(doc, pick_style(*doc.study), registry));
    } catch (const Error& e) {
      ++result.failures[code_key(e.code())];
    }
  }
  sort_instances(result.instances);
  return result;
}

CurationResult curate_case_reports(std::span<const corpus::Document> docs,
                                   gateway::CompletionSource& client, int jobs,
                                   const TemplateRegistry& registry) {
  std::vector<std::pair<const corpus::Document*, int>> work;
  for (const auto& doc : docs) {
    if (doc.kind != corpus::DocumentKind::kCaseReport) continue;
    for (int q = 1; q <= kCaseQuestionCount; ++q) work.emplace_back(&doc, q);
  }
  std::vector<std::optional<InstructionInstance>> slots(work.size());
  std::vector<std::optional<ErrorCode>> soft(work.size());
  std::exception_ptr fatal;
  std::mutex fatal_mutex;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};

  auto worker = [&] {
    for (std::size_t i = next++; i < work.size() && !stop; i = next++) {
      try {
        slots[i] = make_case_qa(*work[i].first, work[i].second, client, registry);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kEmptyWeakLabel) {
          soft[i] = e.code();
          continue;
        }
        std::lock_guard lock(fatal_mutex);
        if (!fatal) fatal = std::current_exception();
        stop = true;
      } catch (...) {
        std::lock_guard lock(fatal_mutex);
        if (!fatal) fatal = std::current_exception();
        stop = true;
      }
    }
  };
  const std::size_t threads =
      std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), work.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& thread : pool) thread.join();
  }
  if (fatal) std::rethrow_exception(fatal);

  CurationResult result;
  for (std::size_t i = 0; i < work.size(); ++i) {
    if (slots[i]) {
      result.instances.push_back(std::move(*slots[i]));
    } else if (soft[i]) {
      ++result.failures[code_key(*soft[i])];
    }
  }
  sort_instances(result.instances);
  return result;
}

std::vector<corpus::Document> sample_case_reports(std::span<const corpus::Document> docs,
                                                  std::size_t count,
                                                  std::uint64_t seed) {
  std::vector<const corpus::Document*> reports;
  for (const auto& doc : docs) {
    if (doc.kind == corpus::DocumentKind::kCaseReport) reports.push_back(&doc);
  }
  std::sort(reports.begin(), reports.end(),
            [](const auto* a, const auto* b) { return a->id < b->id; });
  Rng rng(seed);
  rng.shuffle(reports);
  if (reports.size() > count) reports.resize(count);
  std::sort(reports.begin(), reports.end(),
            [](const auto* a, const auto* b) { return a->id < b->id; });
  std::vector<corpus::Document> chosen;
  chosen.reserve(reports.size());
  for (const auto* doc : reports) chosen.push_back(*doc);
  return chosen;
}

SplitResult split_train_val(std::span<const std::string> ids, std::uint64_t seed) {
  if (ids.empty()) throw Error(ErrorCode::kEmptyInput, "no ids to split");
  std::unordered_set<std::string_view> unique;
  unique.reserve(ids.size());
  for (const auto& id : ids) {
    if (!unique.insert(id).second) {
      throw Error(ErrorCode::kDuplicateIds, "duplicate id '" + id + "'");
    }
  }
  const std::size_t n = ids.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  const std::size_t train_size = (9 * n) / 10;
  std::vector<char> in_train(n, 0);
  for (std::size_t i = 0; i < train_size; ++i) in_train[order[i]] = 1;

  SplitResult split;
  split.seed = seed;
  split.train.reserve(train_size);
  split.validation.reserve(n - train_size);
  for (std::size_t i = 0; i < n; ++i) {
    (in_train[i] ? split.train : split.validation).push_back(ids[i]);
  }
  return split;
}

json to_json(const SplitResult& split) {
  return {{"seed", split.seed},
          {"train_count", split.train.size()},
          {"validation_count", split.validation.size()},
          {"train", split.train},
          {"validation", split.validation}};
}

SplitResult split_from_json(const json& value) {
  try {
    SplitResult split;
    split.seed = value.at("seed").get<std::uint64_t>();
    split.train = value.at("train").get<std::vector<std::string>>();
    split.validation = value.at("validation").get<std::vector<std::string>>();
    return split;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedRecord, std::string("split: ") + e.what());
  }
}

}  // namespace eyebench::curation
