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

// End-to-end orchestration driven by one JSON config file.
//
// Stage artifacts, all under output_dir:
//   ingest  -> corpus.jsonl
//   curate  -> instructions.jsonl, curation.json
//   split   -> split.json, eval_items.jsonl
//   infer   -> responses/<model>.jsonl
//   extract -> extracted/<model>.jsonl
//   score   -> scores.csv, classification.csv, neural.csv
//   compare -> comparisons.csv, comparisons.json
//   report  -> report.md, metric_table.csv, secondary_table.csv,
//              rating_table.csv
// manifest.json records, per stage, the digest of its inputs and outputs; a
// stage whose inputs and outputs are unchanged is skipped.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "eyebench/common.hpp"
#include "eyebench/llm_gateway.hpp"
#include "eyebench/stats.hpp"

namespace eyebench::pipeline {

inline constexpr std::string_view kToolVersion = "0.1.0";

struct ImportedResponses {
  std::string model_id;
  std::filesystem::path path;  // JSONL of {item_id, text}
};

struct HumanEvalSessionConfig {
  std::string id;
  std::filesystem::path samples;  // JSONL of samples
  std::vector<std::string> models;
  std::vector<std::string> raters;
  std::optional<std::uint64_t> seed;
};

struct RunConfig {
  std::filesystem::path case_reports;
  std::filesystem::path abstracts;
  std::filesystem::path study_items;
  std::optional<std::vector<std::string>> journal_whitelist;
  std::optional<std::filesystem::path> templates;

  std::size_t case_report_sample = 600;
  std::string weak_label_backend;  // model_id of a configured backend

  std::vector<gateway::BackendConfig> backends;
  std::vector<ImportedResponses> imported_responses;
  std::optional<std::filesystem::path> external_long_form;
  std::optional<std::filesystem::path> external_mcq;

  stats::BootstrapConfig bootstrap;
  std::optional<int> n_comparisons;
  std::string reference_model;
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;
  int jobs = 4;
  std::string scorer_endpoint;

  std::filesystem::path humaneval_store;
  std::string humaneval_host = "127.0.0.1";
  int humaneval_port = 8080;
  std::vector<HumanEvalSessionConfig> sessions;

  // Relative paths resolve against base_dir. Throws Error(kConfigInvalid).
  static RunConfig from_json(const json& value, const std::filesystem::path& base_dir);
  static RunConfig load(const std::filesystem::path& path);

  // Every model that has responses: backends first, then imports.
  std::vector<std::string> model_ids() const;
};

enum class Stage { kIngest, kCurate, kSplit, kInfer, kExtract, kScore, kCompare, kReport };

inline constexpr Stage kAllStages[] = {Stage::kIngest,  Stage::kCurate, Stage::kSplit,
                                       Stage::kInfer,   Stage::kExtract, Stage::kScore,
                                       Stage::kCompare, Stage::kReport};

std::string_view stage_name(Stage stage);
std::optional<Stage> parse_stage(std::string_view name);

struct StageOutcome {
  Stage stage;
  bool skipped = false;  // inputs and outputs unchanged since the last run
  std::string summary;
};

// Builds the transport for a backend; tests substitute their own.
using TransportFactory =
    std::function<std::shared_ptr<gateway::Transport>(const gateway::BackendConfig&)>;

class Pipeline {
 public:
  Pipeline(RunConfig config, std::ostream& log);

  void set_transport_factory(TransportFactory factory) { factory_ = std::move(factory); }

  // Throws Error; kMissingUpstreamArtifact when an earlier stage's output
  // is absent.
  StageOutcome run(Stage stage);
  std::vector<StageOutcome> run_all();

  // Creates configured sessions that do not exist yet, then serves the
  // human-evaluation API until the process is stopped.
  void serve();

  const RunConfig& config() const { return config_; }
  std::filesystem::path path(std::string_view relative) const;

 private:
  StageOutcome ingest();
  StageOutcome curate();
  StageOutcome split();
  StageOutcome infer();
  StageOutcome extract();
  StageOutcome score();
  StageOutcome compare();
  StageOutcome report();

  std::shared_ptr<gateway::Transport> transport_for(const gateway::BackendConfig& backend);
  void ensure_sessions();

  RunConfig config_;
  std::ostream& log_;
  TransportFactory factory_;
};

// Exit code for an error escaping a stage: 2 for configuration problems,
// 1 otherwise.
int exit_code_for(const Error& error);

}  // namespace eyebench::pipeline
