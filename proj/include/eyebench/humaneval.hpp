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

// Blinded multi-rater evaluation: sessions, rating collection, aggregation
// and the HTTP service consumed by the rater UI.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eyebench/common.hpp"

namespace eyebench::humaneval {

inline constexpr std::string_view kRubricVersion = "v1";
inline constexpr std::array<std::string_view, 3> kDimensions = {
    "correctness", "completeness", "readability"};

struct EvalSample {
  std::string sample_id;
  std::string task_group;  // "ehr_summarization" or "clinical_qa"
  std::string note;
  std::map<std::string, std::string> responses;  // model id -> text
};

EvalSample sample_from_json(const json& value);
json to_json(const EvalSample& sample);

struct RatingRecord {
  std::string session_id;
  std::string rater_id;
  std::string sample_id;
  int display_slot = 0;  // 1-based
  int correctness = 0;
  int completeness = 0;
  int readability = 0;
  std::string rubric_version = std::string(kRubricVersion);
  std::string timestamp;
  std::string note;  // optional: false or misleading content spotted

  std::array<int, 3> scores() const { return {correctness, completeness, readability}; }
};

json to_json(const RatingRecord& record);
RatingRecord rating_from_json(const json& value);

class EvalSession {
 public:
  // Needs >= 1 sample, >= 2 models, >= 1 rater; every sample must carry a
  // response for every model.
  static EvalSession create(std::string id, std::vector<EvalSample> samples,
                            std::vector<std::string> models,
                            std::vector<std::string> raters, std::uint64_t seed);

  const std::string& id() const { return id_; }
  const std::vector<EvalSample>& samples() const { return samples_; }
  const std::vector<std::string>& models() const { return models_; }
  const std::vector<std::string>& raters() const { return raters_; }
  std::uint64_t seed() const { return seed_; }
  // assignment()[sample][slot - 1] = index into models().
  const std::vector<std::vector<std::size_t>>& assignment() const { return assignment_; }
  const std::vector<RatingRecord>& ratings() const { return ratings_; }

  std::size_t pending_count() const;
  bool complete() const { return pending_count() == 0; }
  bool is_rated(std::size_t rater, std::size_t sample, std::size_t slot) const;

  // Blinded item for the lowest sample with a pending slot, or
  // {"done": true}. Throws kUnknownRater.
  json next_item(std::string_view rater) const;

  // Validates and records; throws kUnknownRater, kUnknownSlot, kOutOfRange,
  // kAlreadyRated. Fills session id, rubric version and timestamp if empty.
  const RatingRecord& submit(RatingRecord record);

  // Snapshot without ratings (those live in the append-only log).
  json snapshot() const;
  static EvalSession from_snapshot(const json& value);
  // Re-applies a logged record on load; tolerates nothing but valid records.
  void replay(const RatingRecord& record);

 private:
  std::size_t rater_index(std::string_view rater) const;
  std::size_t sample_index(std::string_view sample) const;
  std::size_t status_index(std::size_t rater, std::size_t sample, std::size_t slot) const;
  void build_index();

  std::string id_;
  std::vector<EvalSample> samples_;
  std::vector<std::string> models_;
  std::vector<std::string> raters_;
  std::uint64_t seed_ = 0;
  std::vector<std::vector<std::size_t>> assignment_;
  std::vector<char> rated_;
  std::vector<RatingRecord> ratings_;
  std::map<std::string, std::size_t, std::less<>> sample_lookup_;
};

// Un-blinded results. Means are over every rating collected so far.
struct DimensionStats {
  double sum = 0.0;
  std::size_t count = 0;
  double mean() const { return count ? sum / static_cast<double>(count) : 0.0; }
};

struct AggregateReport {
  std::string session_id;
  bool complete = false;
  std::vector<std::string> models;
  std::vector<std::string> task_groups;  // in order of first appearance
  // (task group, model) -> dimension -> stats
  std::map<std::pair<std::string, std::string>, std::array<DimensionStats, 3>> cells;
  struct SampleAverage {
    std::string sample_id;
    std::string task_group;
    std::string model;
    std::array<DimensionStats, 3> dims;
  };
  std::vector<SampleAverage> per_sample;
};

AggregateReport aggregate(const EvalSession& session);
json to_json(const AggregateReport& report);

// Session persistence: <root>/<id>/session.json (atomic snapshot) plus
// <root>/<id>/ratings.jsonl (append-only). Thread-safe; writes to one
// session are serialized.
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path root);

  void create(const EvalSession& session);
  // Loads from disk on first use. Throws kUnknownSession.
  json next_item(const std::string& session_id, std::string_view rater);
  json submit(const std::string& session_id, RatingRecord record);
  AggregateReport report(const std::string& session_id);
  bool exists(const std::string& session_id);

  // Reads a session straight from disk (ignores the cache).
  EvalSession load(const std::string& session_id) const;

 private:
  struct Entry {
    std::shared_mutex mutex;
    std::unique_ptr<EvalSession> session;
  };
  std::shared_ptr<Entry> entry(const std::string& session_id);

  std::filesystem::path root_;
  std::mutex map_mutex_;
  std::map<std::string, std::shared_ptr<Entry>> entries_;
};

// Builds sessions from a JSONL fixture of samples.
std::vector<EvalSample> read_samples(const std::filesystem::path& path);

// HTTP front end:
//   GET  /sessions/{id}/next?rater=R
//   POST /sessions/{id}/ratings
//   GET  /sessions/{id}/report
class Server {
 public:
  explicit Server(SessionStore& store);
  ~Server();

  // Binds and serves until stop(); returns false if the bind failed.
  bool listen(const std::string& host, int port);
  // Binds to a free port and serves on a background thread.
  int start_background(const std::string& host = "127.0.0.1");
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace eyebench::humaneval
