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

// Drives the eyebench CLI end to end on the mini corpus.

#include <doctest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <sstream>

#include <httplib.h>

#include "eyebench/humaneval.hpp"
#include "eyebench/pipeline.hpp"
#include "mock_scorer.hpp"
#include "temp_dir.hpp"

using namespace eyebench;
namespace fs = std::filesystem;

namespace {

const fs::path kMiniConfig = fs::path(EYEBENCH_SOURCE_DIR) / "data" / "mini" / "config.json";

const std::vector<std::string> kDeterministicArtifacts = {
    "corpus.jsonl",     "instructions.jsonl", "curation.json",    "split.json",
    "eval_items.jsonl", "scores.csv",         "classification.csv", "neural.csv",
    "comparisons.csv",  "report.md",          "metric_table.csv", "secondary_table.csv"};

int cli(const std::string& args, const fs::path& log) {
  const std::string command =
      std::string(EYEBENCH_CLI) + " " + args + " > '" + log.string() + "' 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> digests(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& name : kDeterministicArtifacts) out[name] = sha256_file(dir / name);
  for (const char* sub : {"responses", "extracted"}) {
    for (const auto& entry : fs::directory_iterator(dir / sub)) {
      out[std::string(sub) + "/" + entry.path().filename().string()] = sha256_file(entry.path());
    }
  }
  return out;
}

}  // namespace

TEST_CASE("CLI exit codes") {
  testing::TempDir dir;
  const fs::path log = dir / "log.txt";
  CHECK(cli("--help", log) == 0);
  CHECK(cli("", log) == 2);
  CHECK(cli("run", log) == 2);  // --config is required
  CHECK(cli("bogus -c x", log) == 2);
  CHECK(cli("run -c " + (dir / "missing.json").string(), log) == 2);
  CHECK(cli("run -c '" + kMiniConfig.string() + "' -j 0", log) == 2);
  // A downstream stage on an empty output directory.
  CHECK(cli("report -c '" + kMiniConfig.string() + "' -o '" + (dir / "out").string() + "'",
            log) == 1);
  CHECK(read_file(log).find("MissingUpstreamArtifact") != std::string::npos);
}

TEST_CASE("two runs into separate directories agree byte for byte") {
  testing::TempDir dir;
  const fs::path a = dir / "a", b = dir / "b";
  REQUIRE(cli("run -c '" + kMiniConfig.string() + "' -o '" + a.string() + "'", dir / "a.log") ==
          0);
  REQUIRE(cli("run -c '" + kMiniConfig.string() + "' -j 1 -o '" + b.string() + "'",
              dir / "b.log") == 0);
  const auto da = digests(a), db = digests(b);
  CHECK(da.size() == db.size());
  for (const auto& [name, digest] : da) {
    CAPTURE(name);
    CHECK(db.at(name) == digest);
  }
  // A different seed changes the split.
  const fs::path c = dir / "c";
  REQUIRE(cli("split -c '" + kMiniConfig.string() + "' --seed 7 -o '" + c.string() + "'",
              dir / "c.log") == 1);  // needs curate first
  REQUIRE(cli("ingest -c '" + kMiniConfig.string() + "' --seed 7 -o '" + c.string() + "'",
              dir / "c.log") == 0);
  REQUIRE(cli("curate -c '" + kMiniConfig.string() + "' --seed 7 -o '" + c.string() + "'",
              dir / "c.log") == 0);
  REQUIRE(cli("split -c '" + kMiniConfig.string() + "' --seed 7 -o '" + c.string() + "'",
              dir / "c.log") == 0);
  CHECK(sha256_file(c / "split.json") != da.at("split.json"));
  // Rerunning is a no-op.
  REQUIRE(cli("run -c '" + kMiniConfig.string() + "' -o '" + a.string() + "'", dir / "a2.log") ==
          0);
  CHECK(read_file(dir / "a2.log").find("report: up to date") != std::string::npos);
  CHECK(digests(a) == da);
}

TEST_CASE("neural scores through a configured scorer endpoint") {
  testing::TempDir dir;
  testing::MockScorer scorer;
  json raw = json::parse(read_file(kMiniConfig));
  raw["output_dir"] = (dir / "out").string();
  raw["humaneval"]["store"] = (dir / "he").string();
  raw["curation"]["case_report_sample"] = 2;
  raw["scorer_endpoint"] = scorer.endpoint();
  std::ostringstream log;
  pipeline::Pipeline pipeline(pipeline::RunConfig::from_json(raw, kMiniConfig.parent_path()),
                              log);
  pipeline.run_all();
  CHECK(scorer.requests() > 0);
  CHECK(scorer.max_batch() <= 64);
  const std::string neural = read_file(pipeline.path("neural.csv"));
  CHECK(neural.find(",ok,") != std::string::npos);
  CHECK(neural.find(",absent,") == std::string::npos);
  const std::string report = read_file(pipeline.path("report.md"));
  CHECK(report.find("BERT Score") != std::string::npos);
}

TEST_CASE("configured human-evaluation sessions are created from samples") {
  testing::TempDir dir;
  json raw = json::parse(read_file(kMiniConfig));
  raw["output_dir"] = (dir / "out").string();
  raw["humaneval"]["store"] = (dir / "he").string();
  const auto config = pipeline::RunConfig::from_json(raw, kMiniConfig.parent_path());
  REQUIRE(config.sessions.size() == 1);

  const auto& session = config.sessions[0];
  humaneval::SessionStore store(config.humaneval_store);
  store.create(humaneval::EvalSession::create(session.id, humaneval::read_samples(session.samples),
                                              session.models, session.raters, config.seed));
  humaneval::Server server(store);
  const int port = server.start_background("127.0.0.1");
  httplib::Client client("127.0.0.1", port);
  auto next = client.Get("/sessions/mini/next?rater=r1");
  REQUIRE(next);
  CHECK(next->status == 200);
  CHECK(json::parse(next->body).is_object());
  for (const auto& model : session.models) CHECK(next->body.find(model) == std::string::npos);
  auto unknown = client.Get("/sessions/mini/next?rater=nobody");
  REQUIRE(unknown);
  CHECK(unknown->status == 404);
  server.stop();
}
