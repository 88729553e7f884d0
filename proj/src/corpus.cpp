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

#include "eyebench/corpus.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

namespace eyebench::corpus {

std::string_view kind_name(DocumentKind kind) {
  switch (kind) {
    case DocumentKind::kCaseReport: return "case_report";
    case DocumentKind::kAbstract: return "abstract";
    case DocumentKind::kStudyItem: return "study_item";
  }
  return "unknown";
}

std::optional<DocumentKind> parse_kind(std::string_view name) {
  if (name == "case_report") return DocumentKind::kCaseReport;
  if (name == "abstract") return DocumentKind::kAbstract;
  if (name == "study_item") return DocumentKind::kStudyItem;
  return std::nullopt;
}

const std::vector<std::string>& default_journal_whitelist() {
  static const std::vector<std::string> kJournals = {
      "Acta Ophthalmologica",
      "American Journal of Ophthalmology",
      "Asia-Pacific Journal of Ophthalmology",
      "British Journal of Ophthalmology",
      "Canadian Journal of Ophthalmology",
      "Eye",
      "Graefe's Archive for Clinical and Experimental Ophthalmology",
      "Investigative Ophthalmology and Visual Science",
      "JAMA Ophthalmology",
      "Journal of Cataract and Refractive Surgery",
      "Ophthalmology",
      "Ophthalmology Glaucoma",
      "Retina",
      "Survey of Ophthalmology",
  };
  return kJournals;
}

std::string journal_key(std::string_view name) {
  return to_lower_ascii(collapse_spaces(name));
}

namespace {

// Result of decoding one record. Exactly one of `document` / `malformed` /
// `rejected` is meaningful.
struct Decoded {
  std::optional<Document> document;
  std::string malformed;
  std::string rejected;
};

std::optional<std::string> string_field(const json& record, const char* key,
                                        std::string* error) {
  auto it = record.find(key);
  if (it == record.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    *error = std::string("field '") + key + "' is not a string";
    return std::nullopt;
  }
  return it->get<std::string>();
}

Decoded decode(const json& record, DocumentKind expected) {
  Decoded out;
  auto malformed = [&out](std::string why) {
    out.malformed = std::move(why);
    return out;
  };
  if (!record.is_object()) {
    out.malformed = "record is not a JSON object";
    return out;
  }
  std::string error;
  Document doc;
  doc.kind = expected;

  auto id = string_field(record, "id", &error);
  if (!error.empty()) return malformed(error);
  if (!id || trim(*id).empty()) return malformed("missing id");
  doc.id = *id;

  if (auto kind = string_field(record, "kind", &error); kind) {
    auto parsed = parse_kind(*kind);
    if (!parsed || *parsed != expected) {
      out.malformed = "kind '" + *kind + "' does not match stream kind '" +
                      std::string(kind_name(expected)) + "'";
      return out;
    }
  }
  if (!error.empty()) return malformed(error);

  doc.title = string_field(record, "title", &error).value_or("");
  doc.journal = string_field(record, "journal", &error).value_or("");
  doc.source_ref = string_field(record, "source_ref", &error).value_or("");
  if (!error.empty()) return malformed(error);

  if (auto it = record.find("metadata"); it != record.end() && !it->is_null()) {
    if (!it->is_object()) return malformed("metadata is not an object");
    for (const auto& [key, value] : it->items()) {
      doc.metadata[key] = value.is_string() ? value.get<std::string>()
                                            : value.dump();
    }
  }

  if (expected != DocumentKind::kStudyItem) {
    auto body = string_field(record, "body", &error);
    if (!error.empty()) return malformed(error);
    std::string normalized = normalize_whitespace(body.value_or(""));
    if (normalized.empty()) return malformed("missing body");
    doc.body = std::move(normalized);
    if (expected == DocumentKind::kAbstract) {
      if (trim(doc.journal).empty()) return malformed("missing journal");
    }
    out.document = std::move(doc);
    return out;
  }

  // Study items: the question text is kept verbatim because cloze spans
  // index into it.
  StudyItem item;
  auto question = string_field(record, "question", &error);
  if (!error.empty()) return malformed(error);
  if (!question) {
    question = string_field(record, "body", &error);
    if (!error.empty()) return malformed(error);
  }
  if (!question || normalize_whitespace(*question).empty()) {
    return malformed("missing question");
  }
  item.question_text = *question;
  auto answer = string_field(record, "answer", &error);
  if (!error.empty()) return malformed(error);
  if (!answer || trim(*answer).empty()) return malformed("missing answer");
  item.answer = *answer;

  if (auto it = record.find("options"); it != record.end() && !it->is_null()) {
    if (!it->is_array()) return malformed("options is not an array");
    for (const auto& option : *it) {
      if (!option.is_string()) return malformed("option is not a string");
      item.options.push_back(option.get<std::string>());
    }
  }
  if (auto it = record.find("cloze_spans"); it != record.end() && !it->is_null()) {
    if (!it->is_array()) return malformed("cloze_spans is not an array");
    for (const auto& span : *it) {
      if (!span.is_array() || span.size() != 2 || !span[0].is_number_unsigned() ||
          !span[1].is_number_unsigned()) {
        return malformed("cloze span must be [start, end] of naturals");
      }
      item.cloze_spans.push_back(
          {span[0].get<std::size_t>(), span[1].get<std::size_t>()});
    }
  }

  if (std::string reason = validate_study_item(item); !reason.empty()) {
    out.rejected = std::move(reason);
    return out;
  }
  doc.body = item.question_text;
  doc.study = std::move(item);
  out.document = std::move(doc);
  return out;
}

IngestResult ingest(std::span<const json> records, DocumentKind kind,
                    const std::vector<std::string>* whitelist) {
  std::unordered_set<std::string> allowed;
  if (whitelist) {
    for (const auto& name : *whitelist) allowed.insert(journal_key(name));
  }

  IngestResult result;
  std::unordered_set<std::string> seen_ids;
  for (std::size_t i = 0; i < records.size(); ++i) {
    ++result.input;
    Decoded decoded = decode(records[i], kind);
    const std::string where = "record " + std::to_string(i + 1) + ": ";
    if (!decoded.malformed.empty()) {
      ++result.skipped;
      ++result.errors;
      result.diagnostics.push_back(where + "MalformedRecord: " + decoded.malformed);
      continue;
    }
    if (!decoded.rejected.empty()) {
      ++result.rejected;
      result.diagnostics.push_back(where + "rejected: " + decoded.rejected);
      continue;
    }
    Document& doc = *decoded.document;
    if (whitelist && !allowed.contains(journal_key(doc.journal))) {
      ++result.skipped;
      continue;
    }
    if (!seen_ids.insert(doc.id).second) {
      throw Error(ErrorCode::kDuplicateId, where + "duplicate id '" + doc.id + "'");
    }
    result.documents.push_back(std::move(doc));
  }
  return result;
}

}  // namespace

std::string validate_study_item(const StudyItem& item) {
  const std::size_t length = utf8_length(item.question_text);
  for (std::size_t i = 0; i < item.cloze_spans.size(); ++i) {
    const ClozeSpan& span = item.cloze_spans[i];
    if (span.start >= span.end) {
      return "cloze span " + std::to_string(i) + " is empty or inverted";
    }
    if (span.end > length) {
      return "cloze span " + std::to_string(i) + " is out of bounds";
    }
    if (i > 0) {
      const ClozeSpan& previous = item.cloze_spans[i - 1];
      if (span.start < previous.end) {
        return span.start < previous.start
                   ? "cloze spans are not sorted"
                   : "cloze spans overlap";
      }
    }
  }
  if (item.options.size() > 4) return "more than four options";
  if (!item.options.empty()) {
    auto matches = std::count(item.options.begin(), item.options.end(), item.answer);
    if (matches != 1) return "answer does not equal exactly one option";
  }
  return {};
}

IngestResult ingest_abstracts(std::span<const json> records,
                              const std::vector<std::string>& whitelist) {
  return ingest(records, DocumentKind::kAbstract, &whitelist);
}

IngestResult ingest_case_reports(std::span<const json> records) {
  return ingest(records, DocumentKind::kCaseReport, nullptr);
}

IngestResult ingest_study_items(std::span<const json> records) {
  return ingest(records, DocumentKind::kStudyItem, nullptr);
}

json to_json(const Document& doc) {
  json out = json::object();
  out["id"] = doc.id;
  out["kind"] = kind_name(doc.kind);
  if (!doc.title.empty()) out["title"] = doc.title;
  if (!doc.journal.empty()) out["journal"] = doc.journal;
  if (!doc.source_ref.empty()) out["source_ref"] = doc.source_ref;
  if (!doc.metadata.empty()) out["metadata"] = doc.metadata;
  if (doc.study) {
    out["question"] = doc.study->question_text;
    out["answer"] = doc.study->answer;
    if (!doc.study->options.empty()) out["options"] = doc.study->options;
    if (!doc.study->cloze_spans.empty()) {
      json spans = json::array();
      for (const auto& span : doc.study->cloze_spans) {
        spans.push_back({span.start, span.end});
      }
      out["cloze_spans"] = std::move(spans);
    }
  } else {
    out["body"] = doc.body;
  }
  return out;
}

std::string serialize_store(std::span<const Document> documents) {
  std::string lines;
  std::map<std::string, std::size_t> counts = {
      {"abstract", 0}, {"case_report", 0}, {"study_item", 0}};
  for (const auto& doc : documents) {
    lines += to_json(doc).dump();
    lines.push_back('\n');
    ++counts[std::string(kind_name(doc.kind))];
  }
  json header = {{"corpus_store", 1},
                 {"counts", counts},
                 {"total", documents.size()},
                 {"digest", sha256_hex(lines)}};
  return header.dump() + "\n" + lines;
}

void write_store(const std::filesystem::path& path,
                 std::span<const Document> documents) {
  atomic_write_file(path, serialize_store(documents));
}

std::vector<Document> read_store(const std::filesystem::path& path) {
  const std::string content = read_file(path);
  const std::size_t newline = content.find('\n');
  if (newline == std::string::npos) {
    throw Error(ErrorCode::kMalformedRecord, path.string() + ": missing header");
  }
  json header = json::parse(content.substr(0, newline), nullptr, false);
  if (header.is_discarded() || !header.contains("digest") ||
      !header.contains("total")) {
    throw Error(ErrorCode::kMalformedRecord, path.string() + ": bad header");
  }
  const std::string lines = content.substr(newline + 1);
  if (sha256_hex(lines) != header["digest"].get<std::string>()) {
    throw Error(ErrorCode::kMalformedRecord, path.string() + ": digest mismatch");
  }

  std::vector<Document> documents;
  std::istringstream in(lines);
  std::unordered_set<std::string> seen;
  std::size_t line_number = 1;
  for (const json& record : read_jsonl(in)) {
    ++line_number;
    std::optional<DocumentKind> kind;
    if (record.is_object() && record.contains("kind") && record["kind"].is_string()) {
      kind = parse_kind(record["kind"].get<std::string>());
    }
    if (!kind) {
      throw Error(ErrorCode::kMalformedRecord,
                  path.string() + ":" + std::to_string(line_number) + ": bad kind");
    }
    Decoded decoded = decode(record, *kind);
    if (!decoded.document) {
      throw Error(ErrorCode::kMalformedRecord,
                  path.string() + ":" + std::to_string(line_number) + ": " +
                      decoded.malformed + decoded.rejected);
    }
    if (!seen.insert(decoded.document->id).second) {
      throw Error(ErrorCode::kDuplicateId, decoded.document->id);
    }
    documents.push_back(std::move(*decoded.document));
  }
  if (documents.size() != header["total"].get<std::size_t>()) {
    throw Error(ErrorCode::kMalformedRecord, path.string() + ": count mismatch");
  }
  return documents;
}

}  // namespace eyebench::corpus
