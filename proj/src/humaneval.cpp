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

#include "eyebench/humaneval.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <numeric>
#include <set>

namespace eyebench::humaneval {

namespace {

std::string utc_now() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm parts{};
  gmtime_r(&now, &parts);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &parts);
  return buffer;
}

// Short anchors for the 1/3/5 points of each dimension.
const json& rubric() {
  static const json kRubric = {
      {"version", kRubricVersion},
      {"scale", {1, 2, 3, 4, 5}},
      {"dimensions",
       json::array(
           {{{"key", "correctness"},
             {"question", "Is the response correct?"},
             {"anchors",
              {{"1", "contains false or misleading content"},
               {"3", "main point right, some inaccuracies"},
               {"5", "accurate with respect to the note"}}}},
            {{"key", "completeness"},
             {"question", "Does the response capture the key information?"},
             {"anchors",
              {{"1", "misses key information"},
               {"3", "moderately complete, some details missing"},
               {"5", "includes all relevant information"}}}},
            {{"key", "readability"},
             {"question", "Is the response easy to read?"},
             {"anchors",
              {{"1", "hard to follow, many errors"},
               {"3", "readable with noticeable errors"},
               {"5", "clear, well structured"}}}}})}};
  return kRubric;
}

}  // namespace

EvalSample sample_from_json(const json& value) {
  try {
    EvalSample sample;
    sample.sample_id = value.at("sample_id").get<std::string>();
    sample.task_group = value.value("task_group", "ehr_summarization");
    sample.note = value.at("note").get<std::string>();
    sample.responses = value.at("responses").get<std::map<std::string, std::string>>();
    return sample;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedRecord, std::string("sample: ") + e.what());
  }
}

json to_json(const EvalSample& sample) {
  return {{"sample_id", sample.sample_id},
          {"task_group", sample.task_group},
          {"note", sample.note},
          {"responses", sample.responses}};
}

json to_json(const RatingRecord& record) {
  json out = {{"session_id", record.session_id},
              {"rater_id", record.rater_id},
              {"sample_id", record.sample_id},
              {"display_slot", record.display_slot},
              {"correctness", record.correctness},
              {"completeness", record.completeness},
              {"readability", record.readability},
              {"rubric_version", record.rubric_version},
              {"timestamp", record.timestamp}};
  if (!record.note.empty()) out["note"] = record.note;
  return out;
}

RatingRecord rating_from_json(const json& value) {
  try {
    RatingRecord record;
    record.session_id = value.value("session_id", "");
    record.rater_id = value.at("rater_id").get<std::string>();
    record.sample_id = value.at("sample_id").get<std::string>();
    record.display_slot = value.at("display_slot").get<int>();
    record.correctness = value.at("correctness").get<int>();
    record.completeness = value.at("completeness").get<int>();
    record.readability = value.at("readability").get<int>();
    record.rubric_version = value.value("rubric_version", std::string(kRubricVersion));
    record.timestamp = value.value("timestamp", "");
    record.note = value.value("note", "");
    return record;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedRecord, std::string("rating: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

EvalSession EvalSession::create(std::string id, std::vector<EvalSample> samples,
                                std::vector<std::string> models,
                                std::vector<std::string> raters, std::uint64_t seed) {
  if (id.empty()) throw Error(ErrorCode::kInvalidArgument, "session id is empty");
  if (samples.empty()) throw Error(ErrorCode::kInvalidArgument, "session needs samples");
  if (models.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "session needs at least two models");
  }
  if (raters.empty()) throw Error(ErrorCode::kInvalidArgument, "session needs raters");
  if (std::set<std::string>(models.begin(), models.end()).size() != models.size() ||
      std::set<std::string>(raters.begin(), raters.end()).size() != raters.size()) {
    throw Error(ErrorCode::kInvalidArgument, "duplicate model or rater id");
  }
  std::set<std::string> seen;
  for (const auto& sample : samples) {
    if (!seen.insert(sample.sample_id).second) {
      throw Error(ErrorCode::kDuplicateSampleIds,
                  "sample '" + sample.sample_id + "' appears twice");
    }
    if (sample.responses.size() != models.size()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "sample '" + sample.sample_id + "' must have one response per model");
    }
    for (const auto& model : models) {
      if (!sample.responses.count(model)) {
        throw Error(ErrorCode::kInvalidArgument,
                    "sample '" + sample.sample_id + "' lacks a response from " + model);
      }
    }
  }
  EvalSession session;
  session.id_ = std::move(id);
  session.samples_ = std::move(samples);
  session.models_ = std::move(models);
  session.raters_ = std::move(raters);
  session.seed_ = seed;
  for (const auto& sample : session.samples_) {
    std::vector<std::size_t> order(session.models_.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, "assignment:" + sample.sample_id));
    rng.shuffle(order);
    session.assignment_.push_back(std::move(order));
  }
  session.build_index();
  return session;
}

void EvalSession::build_index() {
  sample_lookup_.clear();
  for (std::size_t i = 0; i < samples_.size(); ++i) sample_lookup_[samples_[i].sample_id] = i;
  rated_.assign(raters_.size() * samples_.size() * models_.size(), 0);
}

std::size_t EvalSession::status_index(std::size_t rater, std::size_t sample,
                                      std::size_t slot) const {
  return (rater * samples_.size() + sample) * models_.size() + slot;
}

bool EvalSession::is_rated(std::size_t rater, std::size_t sample, std::size_t slot) const {
  return rated_.at(status_index(rater, sample, slot)) != 0;
}

std::size_t EvalSession::pending_count() const {
  return static_cast<std::size_t>(std::count(rated_.begin(), rated_.end(), 0));
}

std::size_t EvalSession::rater_index(std::string_view rater) const {
  auto it = std::find(raters_.begin(), raters_.end(), rater);
  if (it == raters_.end()) {
    throw Error(ErrorCode::kUnknownRater,
                "rater '" + std::string(rater) + "' is not part of session " + id_);
  }
  return static_cast<std::size_t>(it - raters_.begin());
}

std::size_t EvalSession::sample_index(std::string_view sample) const {
  auto it = sample_lookup_.find(sample);
  if (it == sample_lookup_.end()) {
    throw Error(ErrorCode::kUnknownSlot, "no sample '" + std::string(sample) + "'");
  }
  return it->second;
}

json EvalSession::next_item(std::string_view rater) const {
  const std::size_t r = rater_index(rater);
  std::size_t rated = 0;
  for (std::size_t s = 0; s < samples_.size(); ++s) {
    for (std::size_t k = 0; k < models_.size(); ++k) rated += is_rated(r, s, k) ? 1 : 0;
  }
  const std::size_t total = samples_.size() * models_.size();
  for (std::size_t s = 0; s < samples_.size(); ++s) {
    json pending = json::array();
    for (std::size_t k = 0; k < models_.size(); ++k) {
      if (!is_rated(r, s, k)) pending.push_back(k + 1);
    }
    if (pending.empty()) continue;
    json responses = json::array();
    for (std::size_t k = 0; k < models_.size(); ++k) {
      const std::string& model = models_[assignment_[s][k]];
      responses.push_back({{"slot", k + 1},
                           {"label", "Response " + std::to_string(k + 1)},
                           {"text", samples_[s].responses.at(model)}});
    }
    return {{"done", false},
            {"session_id", id_},
            {"sample_id", samples_[s].sample_id},
            {"sample_index", s + 1},
            {"sample_count", samples_.size()},
            {"task_group", samples_[s].task_group},
            {"note", samples_[s].note},
            {"responses", responses},
            {"pending_slots", pending},
            {"progress", {{"rated", rated}, {"total", total}}},
            {"rubric", rubric()}};
  }
  return {{"done", true},
          {"session_id", id_},
          {"progress", {{"rated", rated}, {"total", total}}}};
}

const RatingRecord& EvalSession::submit(RatingRecord record) {
  if (record.session_id.empty()) record.session_id = id_;
  if (record.session_id != id_) {
    throw Error(ErrorCode::kUnknownSession,
                "record is for session '" + record.session_id + "'");
  }
  const std::size_t r = rater_index(record.rater_id);
  const std::size_t s = sample_index(record.sample_id);
  if (record.display_slot < 1 ||
      static_cast<std::size_t>(record.display_slot) > models_.size()) {
    throw Error(ErrorCode::kUnknownSlot,
                "display slot " + std::to_string(record.display_slot) + " does not exist");
  }
  const auto scores = record.scores();
  for (std::size_t d = 0; d < scores.size(); ++d) {
    if (scores[d] < 1 || scores[d] > 5) {
      throw Error(ErrorCode::kOutOfRange, std::string(kDimensions[d]) + " must be 1..5, got " +
                                              std::to_string(scores[d]));
    }
  }
  const std::size_t slot = static_cast<std::size_t>(record.display_slot) - 1;
  if (is_rated(r, s, slot)) {
    throw Error(ErrorCode::kAlreadyRated, record.rater_id + " already rated slot " +
                                              std::to_string(record.display_slot) +
                                              " of " + record.sample_id);
  }
  if (record.rubric_version.empty()) record.rubric_version = std::string(kRubricVersion);
  if (record.timestamp.empty()) record.timestamp = utc_now();
  rated_[status_index(r, s, slot)] = 1;
  ratings_.push_back(std::move(record));
  return ratings_.back();
}

void EvalSession::replay(const RatingRecord& record) { submit(record); }

json EvalSession::snapshot() const {
  json samples = json::array();
  for (const auto& sample : samples_) samples.push_back(to_json(sample));
  return {{"session_store", 1},
          {"id", id_},
          {"seed", seed_},
          {"models", models_},
          {"raters", raters_},
          {"samples", samples},
          {"assignment", assignment_}};
}

EvalSession EvalSession::from_snapshot(const json& value) {
  try {
    EvalSession session;
    session.id_ = value.at("id").get<std::string>();
    session.seed_ = value.at("seed").get<std::uint64_t>();
    session.models_ = value.at("models").get<std::vector<std::string>>();
    session.raters_ = value.at("raters").get<std::vector<std::string>>();
    for (const auto& sample : value.at("samples")) {
      session.samples_.push_back(sample_from_json(sample));
    }
    session.assignment_ = value.at("assignment").get<std::vector<std::vector<std::size_t>>>();
    if (session.assignment_.size() != session.samples_.size()) {
      throw Error(ErrorCode::kMalformedRecord, "assignment does not cover every sample");
    }
    for (const auto& order : session.assignment_) {
      std::vector<std::size_t> sorted = order;
      std::sort(sorted.begin(), sorted.end());
      for (std::size_t k = 0; k < sorted.size(); ++k) {
        if (sorted.size() != session.models_.size() || sorted[k] != k) {
          throw Error(ErrorCode::kMalformedRecord, "assignment is not a permutation");
        }
      }
    }
    session.build_index();
    return session;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedRecord, std::string("session: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

AggregateReport aggregate(const EvalSession& session) {
  AggregateReport report;
  report.session_id = session.id();
  report.complete = session.complete();
  report.models = session.models();
  for (const auto& sample : session.samples()) {
    if (std::find(report.task_groups.begin(), report.task_groups.end(), sample.task_group) ==
        report.task_groups.end()) {
      report.task_groups.push_back(sample.task_group);
    }
    for (const auto& model : session.models()) report.cells[{sample.task_group, model}];
  }
  std::map<std::pair<std::string, std::string>, std::size_t> per_sample_index;
  for (std::size_t s = 0; s < session.samples().size(); ++s) {
    const auto& sample = session.samples()[s];
    for (const auto& model : session.models()) {
      per_sample_index[{sample.sample_id, model}] = report.per_sample.size();
      report.per_sample.push_back({sample.sample_id, sample.task_group, model, {}});
    }
  }
  std::map<std::string, std::size_t> sample_lookup;
  for (std::size_t s = 0; s < session.samples().size(); ++s) {
    sample_lookup[session.samples()[s].sample_id] = s;
  }
  for (const auto& record : session.ratings()) {
    const std::size_t s = sample_lookup.at(record.sample_id);
    const auto& sample = session.samples()[s];
    const std::string& model =
        session.models()[session.assignment()[s][record.display_slot - 1]];
    auto& cell = report.cells[{sample.task_group, model}];
    auto& per = report.per_sample[per_sample_index.at({sample.sample_id, model})].dims;
    const auto scores = record.scores();
    for (std::size_t d = 0; d < 3; ++d) {
      cell[d].sum += scores[d];
      ++cell[d].count;
      per[d].sum += scores[d];
      ++per[d].count;
    }
  }
  return report;
}

json to_json(const AggregateReport& report) {
  auto dims_json = [](const std::array<DimensionStats, 3>& dims) {
    json out = json::object();
    for (std::size_t d = 0; d < 3; ++d) {
      out[std::string(kDimensions[d])] = {
          {"mean", dims[d].count ? json(dims[d].mean()) : json(nullptr)},
          {"count", dims[d].count}};
    }
    return out;
  };
  json cells = json::array();
  for (const auto& [key, dims] : report.cells) {
    json cell = {{"task_group", key.first}, {"model", key.second}};
    cell.update(dims_json(dims));
    cells.push_back(cell);
  }
  json per_sample = json::array();
  for (const auto& entry : report.per_sample) {
    json row = {{"sample_id", entry.sample_id},
                {"task_group", entry.task_group},
                {"model", entry.model}};
    row.update(dims_json(entry.dims));
    per_sample.push_back(row);
  }
  return {{"session_id", report.session_id},
          {"complete", report.complete},
          {"models", report.models},
          {"task_groups", report.task_groups},
          {"cells", cells},
          {"per_sample", per_sample}};
}

// ---------------------------------------------------------------------------

SessionStore::SessionStore(std::filesystem::path root) : root_(std::move(root)) {
  std::filesystem::create_directories(root_);
}

void SessionStore::create(const EvalSession& session) {
  const auto dir = root_ / session.id();
  if (std::filesystem::exists(dir / "session.json")) {
    throw Error(ErrorCode::kInvalidArgument, "session '" + session.id() + "' already exists");
  }
  std::filesystem::create_directories(dir);
  atomic_write_file(dir / "session.json", session.snapshot().dump(2) + "\n");
  std::ofstream(dir / "ratings.jsonl", std::ios::app);
  for (const auto& record : session.ratings()) {
    std::ofstream(dir / "ratings.jsonl", std::ios::app) << to_json(record).dump() << '\n';
  }
  std::lock_guard lock(map_mutex_);
  entries_.erase(session.id());
}

EvalSession SessionStore::load(const std::string& session_id) const {
  const auto dir = root_ / session_id;
  if (session_id.empty() || session_id.find('/') != std::string::npos ||
      session_id.find("..") != std::string::npos ||
      !std::filesystem::exists(dir / "session.json")) {
    throw Error(ErrorCode::kUnknownSession, "no session '" + session_id + "'");
  }
  json snapshot = json::parse(read_file(dir / "session.json"), nullptr, false);
  if (snapshot.is_discarded()) {
    throw Error(ErrorCode::kMalformedRecord, session_id + ": corrupt session.json");
  }
  EvalSession session = EvalSession::from_snapshot(snapshot);
  const auto log = dir / "ratings.jsonl";
  if (std::filesystem::exists(log)) {
    std::ifstream in(log);
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) {
      if (!trim(line).empty()) lines.push_back(line);
    }
    for (std::size_t i = 0; i < lines.size(); ++i) {
      json value = json::parse(lines[i], nullptr, false);
      if (value.is_discarded()) {
        // A torn final write is the only tolerated corruption.
        if (i + 1 == lines.size()) break;
        throw Error(ErrorCode::kMalformedRecord,
                    session_id + ": corrupt rating log line " + std::to_string(i + 1));
      }
      session.replay(rating_from_json(value));
    }
  }
  return session;
}

std::shared_ptr<SessionStore::Entry> SessionStore::entry(const std::string& session_id) {
  std::shared_ptr<Entry> found;
  {
    std::lock_guard lock(map_mutex_);
    auto& slot = entries_[session_id];
    if (!slot) slot = std::make_shared<Entry>();
    found = slot;
  }
  std::unique_lock lock(found->mutex);
  if (!found->session) {
    try {
      found->session = std::make_unique<EvalSession>(load(session_id));
    } catch (...) {
      lock.unlock();
      std::lock_guard map_lock(map_mutex_);
      entries_.erase(session_id);
      throw;
    }
  }
  return found;
}

bool SessionStore::exists(const std::string& session_id) {
  try {
    entry(session_id);
    return true;
  } catch (const Error&) {
    return false;
  }
}

json SessionStore::next_item(const std::string& session_id, std::string_view rater) {
  auto e = entry(session_id);
  std::shared_lock lock(e->mutex);
  return e->session->next_item(rater);
}

json SessionStore::submit(const std::string& session_id, RatingRecord record) {
  auto e = entry(session_id);
  std::unique_lock lock(e->mutex);
  const RatingRecord& stored = e->session->submit(std::move(record));
  try {
    std::ofstream out(root_ / session_id / "ratings.jsonl", std::ios::app);
    out << to_json(stored).dump() << '\n';
    out.flush();
    if (!out) throw Error(ErrorCode::kIo, "could not append rating");
  } catch (...) {
    // Drop the in-memory copy so the next access reloads the durable state.
    e->session.reset();
    throw;
  }
  return {{"accepted", true},
          {"record", to_json(stored)},
          {"remaining", e->session->pending_count()}};
}

AggregateReport SessionStore::report(const std::string& session_id) {
  auto e = entry(session_id);
  std::shared_lock lock(e->mutex);
  return aggregate(*e->session);
}

std::vector<EvalSample> read_samples(const std::filesystem::path& path) {
  std::vector<EvalSample> samples;
  for (const auto& value : read_jsonl_file(path)) {
    if (value.is_discarded()) {
      throw Error(ErrorCode::kMalformedRecord, path.string() + ": unparseable sample line");
    }
    samples.push_back(sample_from_json(value));
  }
  return samples;
}

}  // namespace eyebench::humaneval
