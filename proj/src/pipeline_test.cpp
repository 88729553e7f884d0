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

#include "eyebench/pipeline.hpp"

#include <doctest.h>

#include <atomic>
#include <sstream>

#include "temp_dir.hpp"

using namespace eyebench;
using namespace eyebench::pipeline;

namespace {

const std::filesystem::path kMini = std::filesystem::path(EYEBENCH_SOURCE_DIR) / "data" / "mini";

json mini_config(const std::filesystem::path& output_dir) {
  json config = json::parse(read_file(kMini / "config.json"));
  config["output_dir"] = output_dir.string();
  config["humaneval"]["store"] = (output_dir / "humaneval").string();
  config["curation"]["case_report_sample"] = 2;
  return config;
}

void expect_config_invalid(const json& value) {
  try {
    RunConfig::from_json(value, kMini);
    FAIL("expected ConfigInvalid");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kConfigInvalid);
    CHECK(exit_code_for(e) == 2);
  }
}

// Counts requests on the way to the offline mock backend.
class CountingTransport : public gateway::Transport {
 public:
  CountingTransport(std::string profile, std::atomic<int>& counter)
      : inner_(std::move(profile)), counter_(counter) {}
  gateway::HttpResponse post(const gateway::HttpRequest& request) override {
    ++counter_;
    return inner_.post(request);
  }

 private:
  gateway::MockBackendTransport inner_;
  std::atomic<int>& counter_;
};

}  // namespace

TEST_CASE("stage names") {
  for (Stage stage : kAllStages) CHECK(parse_stage(stage_name(stage)) == stage);
  CHECK(stage_name(Stage::kCompare) == "compare");
  CHECK_FALSE(parse_stage("deploy").has_value());
}

TEST_CASE("config validation") {
  testing::TempDir dir;
  const json good = mini_config(dir.path());
  const auto config = RunConfig::from_json(good, kMini);
  CHECK(config.model_ids().size() == 4);
  CHECK(config.case_reports == kMini / "case_reports.jsonl");
  CHECK(config.bootstrap.seed == 42);
  CHECK(config.sessions.size() == 1);

  json bad = good;
  bad.erase("reference_model");
  expect_config_invalid(bad);
  bad = good;
  bad["reference_model"] = "nobody";
  expect_config_invalid(bad);
  bad = good;
  bad["curation"]["weak_label_backend"] = "nobody";
  expect_config_invalid(bad);
  bad = good;
  bad["jobs"] = 0;
  expect_config_invalid(bad);
  bad = good;
  bad["bootstrap"]["ci_level"] = 2.0;
  expect_config_invalid(bad);
  bad = good;
  bad["backends"].push_back(good["backends"][0]);
  expect_config_invalid(bad);
  bad = good;
  bad["backends"][0]["default_params"] = {{"temperature", 1}};
  expect_config_invalid(bad);

  try {
    RunConfig::load(dir.path() / "missing.json");
    FAIL("expected ConfigInvalid");
  } catch (const Error& e) {
    CHECK(exit_code_for(e) == 2);
  }
  atomic_write_file(dir.path() / "broken.json", "{");
  CHECK_THROWS_AS(RunConfig::load(dir.path() / "broken.json"), Error);
  CHECK(exit_code_for(Error(ErrorCode::kBackendError, "x")) == 1);
}

TEST_CASE("stages refuse to run without upstream artifacts") {
  testing::TempDir dir;
  std::ostringstream log;
  Pipeline pipeline(RunConfig::from_json(mini_config(dir.path()), kMini), log);
  for (Stage stage : {Stage::kCurate, Stage::kSplit, Stage::kInfer, Stage::kReport}) {
    try {
      pipeline.run(stage);
      FAIL("expected MissingUpstreamArtifact");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kMissingUpstreamArtifact);
      CHECK(exit_code_for(e) == 1);
    }
  }
}

TEST_CASE("full run with an imported model, then a no-op rerun") {
  testing::TempDir dir;
  json raw = mini_config(dir.path());
  raw["imported_responses"] = json::array(
      {{{"model_id", "pmc-import"}, {"path", (dir.path() / "pmc.jsonl").string()}}});
  std::ostringstream log;
  std::atomic<int> requests{0};
  Pipeline pipeline(RunConfig::from_json(raw, kMini), log);
  pipeline.set_transport_factory([&](const gateway::BackendConfig& backend) {
    return std::make_shared<CountingTransport>(backend.endpoint_url.substr(7), requests);
  });

  for (Stage stage : {Stage::kIngest, Stage::kCurate, Stage::kSplit}) {
    CHECK_FALSE(pipeline.run(stage).skipped);
  }
  // Answer every evaluation item with a constant guess.
  std::string imported;
  for (const auto& item : read_jsonl_file(pipeline.path("eval_items.jsonl"))) {
    imported += json{{"item_id", item["id"]}, {"text", "A"}}.dump() + "\n";
  }
  atomic_write_file(dir.path() / "pmc.jsonl", imported);

  for (Stage stage : {Stage::kInfer, Stage::kExtract, Stage::kScore, Stage::kCompare,
                      Stage::kReport}) {
    CHECK_FALSE(pipeline.run(stage).skipped);
  }
  CHECK(requests > 0);
  const std::string report = read_file(pipeline.path("report.md"));
  CHECK(report.find("pmc-import") != std::string::npos);
  CHECK(report.find("| Task | leme-mock |") != std::string::npos);
  CHECK(read_file(pipeline.path("neural.csv")).find(",absent,") != std::string::npos);

  // Split invariants on the written artifact.
  const json split = json::parse(read_file(pipeline.path("split.json")));
  CHECK(split.is_object());

  const int before = requests;
  for (const auto& outcome : pipeline.run_all()) {
    CAPTURE(stage_name(outcome.stage));
    CHECK(outcome.skipped);
  }
  CHECK(requests == before);

  // Changing an input re-runs that stage.
  atomic_write_file(dir.path() / "pmc.jsonl", imported + "\n");
  CHECK_FALSE(pipeline.run(Stage::kInfer).skipped);

  // A truncated import no longer covers the item set.
  atomic_write_file(dir.path() / "pmc.jsonl", imported.substr(0, imported.find('\n') + 1));
  try {
    pipeline.run(Stage::kInfer);
    FAIL("expected InstanceSetMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInstanceSetMismatch);
  }
}
