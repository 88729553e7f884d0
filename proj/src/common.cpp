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

#include "eyebench/common.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include <openssl/evp.h>

namespace eyebench {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kMalformedRecord: return "MalformedRecord";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kMissingPlaceholder: return "MissingPlaceholder";
    case ErrorCode::kSingleSentenceAbstract: return "SingleSentenceAbstract";
    case ErrorCode::kEmptyWeakLabel: return "EmptyWeakLabel";
    case ErrorCode::kMissingClozeSpans: return "MissingClozeSpans";
    case ErrorCode::kWrongOptionCount: return "WrongOptionCount";
    case ErrorCode::kBlankMarkerInText: return "BlankMarkerInText";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kDuplicateIds: return "DuplicateIds";
    case ErrorCode::kAuthMissing: return "AuthMissing";
    case ErrorCode::kRateLimitedExhausted: return "RateLimitedExhausted";
    case ErrorCode::kBackendError: return "BackendError";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kScorerUnavailable: return "ScorerUnavailable";
    case ErrorCode::kEmptyScores: return "EmptyScores";
    case ErrorCode::kMissingReference: return "MissingReference";
    case ErrorCode::kInstanceSetMismatch: return "InstanceSetMismatch";
    case ErrorCode::kDuplicateSampleIds: return "DuplicateSampleIds";
    case ErrorCode::kUnknownSession: return "UnknownSession";
    case ErrorCode::kUnknownRater: return "UnknownRater";
    case ErrorCode::kUnknownSlot: return "UnknownSlot";
    case ErrorCode::kOutOfRange: return "OutOfRange";
    case ErrorCode::kAlreadyRated: return "AlreadyRated";
    case ErrorCode::kMissingCell: return "MissingCell";
    case ErrorCode::kConfigInvalid: return "ConfigInvalid";
    case ErrorCode::kMissingUpstreamArtifact: return "MissingUpstreamArtifact";
  }
  return "Unknown";
}

bool is_ascii_alnum(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

std::string to_lower_ascii(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

}  // namespace

std::string trim(std::string_view text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && is_space(text[begin])) ++begin;
  while (end > begin && is_space(text[end - 1])) --end;
  return std::string(text.substr(begin, end - begin));
}

std::string collapse_spaces(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::string normalize_whitespace(std::string_view text) {
  std::vector<std::string> lines;
  std::string current;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '\r') {
      if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
      lines.push_back(std::move(current));
      current.clear();
    } else if (c == '\n') {
      lines.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  lines.push_back(std::move(current));

  std::string out;
  bool previous_blank = true;  // drops leading blank lines
  std::size_t pending_blank = 0;
  for (auto& line : lines) {
    while (!line.empty() && (line.back() == ' ' || line.back() == '\t')) {
      line.pop_back();
    }
    if (line.empty()) {
      if (!previous_blank) pending_blank = 1;
      previous_blank = true;
      continue;
    }
    if (!out.empty()) {
      out.push_back('\n');
      if (pending_blank) out.push_back('\n');
    }
    pending_blank = 0;
    out += line;
    previous_blank = false;
  }
  return out;
}

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) !=
        std::tolower(static_cast<unsigned char>(b[i]))) {
      return false;
    }
  }
  return true;
}

std::size_t ifind(std::string_view haystack, std::string_view needle,
                  std::size_t from) {
  if (needle.empty()) return from <= haystack.size() ? from : std::string::npos;
  if (needle.size() > haystack.size()) return std::string::npos;
  for (std::size_t i = from; i + needle.size() <= haystack.size(); ++i) {
    if (iequals(haystack.substr(i, needle.size()), needle)) return i;
  }
  return std::string::npos;
}

std::size_t utf8_length(std::string_view text) {
  std::size_t count = 0;
  for (char c : text) {
    if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) ++count;
  }
  return count;
}

std::optional<std::size_t> utf8_byte_offset(std::string_view text,
                                            std::size_t index) {
  std::size_t seen = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if ((static_cast<unsigned char>(text[i]) & 0xC0) == 0x80) continue;
    if (seen == index) return i;
    ++seen;
  }
  if (seen == index) return text.size();
  return std::nullopt;
}

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &length,
                 EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::kIo, "sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0x0F]);
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) {
  return sha256_hex(read_file(path));
}

std::uint64_t Rng::uniform_index(std::uint64_t bound) {
  if (bound == 0) throw Error(ErrorCode::kInvalidArgument, "bound must be > 0");
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() -
      std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t draw = engine_();
  while (draw >= limit) draw = engine_();
  return draw % bound;
}

double Rng::uniform01() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view label) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : label) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001b3ULL;
  }
  std::uint64_t z = base ^ hash;  // splitmix64 finalizer
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<json> read_jsonl(std::istream& in) {
  std::vector<json> records;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    records.push_back(json::parse(line, nullptr, /*allow_exceptions=*/false));
  }
  return records;
}

std::vector<json> read_jsonl_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return read_jsonl(in);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void atomic_write_file(const std::filesystem::path& path,
                       std::string_view content) {
  static std::atomic<std::uint64_t> counter{0};
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ostringstream suffix;
  suffix << ".tmp." << std::hash<std::thread::id>{}(std::this_thread::get_id())
         << "." << counter.fetch_add(1);
  std::filesystem::path temp = path;
  temp += suffix.str();
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + temp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error(ErrorCode::kIo, "short write " + temp.string());
  }
  std::error_code ec;
  std::filesystem::rename(temp, path, ec);
  if (ec) {
    std::filesystem::remove(temp);
    throw Error(ErrorCode::kIo, "rename to " + path.string() + ": " +
                                    ec.message());
  }
}

std::string format_fixed(double value, int decimals) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*f", decimals, value);
  return buffer;
}

}  // namespace eyebench
