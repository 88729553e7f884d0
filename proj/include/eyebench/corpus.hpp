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

// Corpus ingestion: case reports, journal abstracts and study items arrive
// as JSONL records and leave as validated Documents.
//
// Record fields: id, kind, title, body, journal, question, answer, options,
// cloze_spans, source_ref, metadata. cloze_spans are [start, end) pairs in
// Unicode code points over the question text.

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eyebench/common.hpp"

namespace eyebench::corpus {

enum class DocumentKind { kCaseReport, kAbstract, kStudyItem };

std::string_view kind_name(DocumentKind kind);
std::optional<DocumentKind> parse_kind(std::string_view name);

struct ClozeSpan {
  std::size_t start = 0;  // code points, inclusive
  std::size_t end = 0;    // code points, exclusive

  bool operator==(const ClozeSpan&) const = default;
};

struct StudyItem {
  std::string question_text;
  std::vector<ClozeSpan> cloze_spans;
  std::vector<std::string> options;
  std::string answer;

  bool operator==(const StudyItem&) const = default;
};

struct Document {
  std::string id;
  DocumentKind kind = DocumentKind::kCaseReport;
  std::string title;
  std::string body;
  std::string journal;
  std::string source_ref;
  std::map<std::string, std::string> metadata;
  // Present iff kind == kStudyItem; body mirrors question_text.
  std::optional<StudyItem> study;

  bool operator==(const Document&) const = default;
};

// Every record fed to an ingest call ends up in exactly one bucket:
// documents.size() + skipped + rejected == input.
struct IngestResult {
  std::vector<Document> documents;
  std::size_t input = 0;
  std::size_t skipped = 0;   // filtered out or malformed
  std::size_t rejected = 0;  // parsed but violates an invariant
  std::size_t errors = 0;    // malformed records (subset of skipped)
  std::vector<std::string> diagnostics;
};

// The fourteen journals the abstract corpus was drawn from.
const std::vector<std::string>& default_journal_whitelist();

// Lowercased, whitespace-collapsed journal name used for whitelist matching.
std::string journal_key(std::string_view name);

IngestResult ingest_abstracts(std::span<const json> records,
                              const std::vector<std::string>& whitelist =
                                  default_journal_whitelist());
IngestResult ingest_case_reports(std::span<const json> records);
IngestResult ingest_study_items(std::span<const json> records);

// Checks span ordering/bounds and the answer-among-options rule. Returns an
// empty string when valid, otherwise the reason.
std::string validate_study_item(const StudyItem& item);

json to_json(const Document& doc);

// Corpus store: one header line {"corpus_store":1,"counts":{...},"total":N,
// "digest":sha256 of the document lines}, then one Document per line.
std::string serialize_store(std::span<const Document> documents);
void write_store(const std::filesystem::path& path,
                 std::span<const Document> documents);
// Verifies counts and digest; throws Error(kMalformedRecord) on mismatch.
std::vector<Document> read_store(const std::filesystem::path& path);

}  // namespace eyebench::corpus
