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

// Shared plumbing: the error type, text helpers, digests, the seeded
// generator and JSONL/file I/O.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace eyebench {

using json = nlohmann::json;

enum class ErrorCode {
  kInvalidArgument,
  kIo,
  kMalformedRecord,
  kDuplicateId,
  kMissingPlaceholder,
  kSingleSentenceAbstract,
  kEmptyWeakLabel,
  kMissingClozeSpans,
  kWrongOptionCount,
  kBlankMarkerInText,
  kEmptyInput,
  kDuplicateIds,
  kAuthMissing,
  kRateLimitedExhausted,
  kBackendError,
  kLengthMismatch,
  kScorerUnavailable,
  kEmptyScores,
  kMissingReference,
  kInstanceSetMismatch,
  kDuplicateSampleIds,
  kUnknownSession,
  kUnknownRater,
  kUnknownSlot,
  kOutOfRange,
  kAlreadyRated,
  kMissingCell,
  kConfigInvalid,
  kMissingUpstreamArtifact,
};

// Stable identifier for an error code, e.g. "MissingPlaceholder".
std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// ---------------------------------------------------------------------------
// Text helpers. All case folding is ASCII-only; non-ASCII bytes pass through.

std::string to_lower_ascii(std::string_view text);
std::string trim(std::string_view text);
// Collapses every run of whitespace to a single space and trims the ends.
std::string collapse_spaces(std::string_view text);
// CRLF/CR -> LF, strips trailing spaces on each line, collapses runs of blank
// lines to one and trims leading/trailing blank lines.
std::string normalize_whitespace(std::string_view text);
bool iequals(std::string_view a, std::string_view b);
// Case-insensitive (ASCII) substring search; npos when absent.
std::size_t ifind(std::string_view haystack, std::string_view needle,
                  std::size_t from = 0);
bool is_ascii_alnum(char c);

// Number of Unicode code points in a UTF-8 string.
std::size_t utf8_length(std::string_view text);
// Byte offset of code point `index` (index == length gives text.size()).
// Returns nullopt when index is past the end.
std::optional<std::size_t> utf8_byte_offset(std::string_view text,
                                            std::size_t index);

// ---------------------------------------------------------------------------
// Digests.

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Seeded randomness. mt19937_64 is fully specified by the standard; the
// distributions here are hand-written so results are identical across
// standard library implementations.

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  // Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t uniform_index(std::uint64_t bound);
  // Uniform double in [0, 1) with 53 bits of precision.
  double uniform01();

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_index(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// Deterministic child seed for a labelled sub-stream (task, model, ...).
std::uint64_t derive_seed(std::uint64_t base, std::string_view label);

// ---------------------------------------------------------------------------
// Files.

// One entry per non-empty line; lines that fail to parse become
// json::value_t::discarded so callers can count them.
std::vector<json> read_jsonl(std::istream& in);
std::vector<json> read_jsonl_file(const std::filesystem::path& path);
std::string read_file(const std::filesystem::path& path);
// Write-temp-then-rename in the destination directory.
void atomic_write_file(const std::filesystem::path& path,
                       std::string_view content);

// "%.Nf" formatting without locale surprises.
std::string format_fixed(double value, int decimals);

}  // namespace eyebench
