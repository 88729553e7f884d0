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

// eyebench: command-line driver for the evaluation pipeline.
//
// Exit codes: 0 success, 1 runtime failure, 2 configuration error.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "eyebench/pipeline.hpp"

namespace {

using eyebench::pipeline::Pipeline;
using eyebench::pipeline::RunConfig;
using eyebench::pipeline::Stage;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> output_dir;
};

RunConfig load(const Options& options) {
  RunConfig config = RunConfig::load(options.config);
  if (options.seed) {
    config.seed = *options.seed;
    config.bootstrap.seed = *options.seed;
  }
  if (options.jobs) {
    if (*options.jobs < 1) {
      throw eyebench::Error(eyebench::ErrorCode::kConfigInvalid, "--jobs must be >= 1");
    }
    config.jobs = *options.jobs;
  }
  if (options.output_dir) config.output_dir = *options.output_dir;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ophthalmology LLM evaluation pipeline"};
  app.require_subcommand(1);
  Options options;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", options.config, "Run configuration (JSON)")->required();
    sub->add_option("--seed", options.seed, "Override the configured seed");
    sub->add_option("-j,--jobs", options.jobs, "Concurrent backend requests");
    sub->add_option("-o,--output-dir", options.output_dir, "Override the output directory");
  };

  std::optional<Stage> chosen;
  bool run_all = false;
  bool serve = false;
  for (Stage stage : eyebench::pipeline::kAllStages) {
    const std::string name(eyebench::pipeline::stage_name(stage));
    auto* sub = app.add_subcommand(name, "Run the " + name + " stage");
    add_common(sub);
    sub->callback([&chosen, stage] { chosen = stage; });
  }
  auto* run = app.add_subcommand("run", "Run every stage in order, skipping up-to-date ones");
  add_common(run);
  run->callback([&run_all] { run_all = true; });
  auto* srv = app.add_subcommand("serve", "Serve the human-evaluation API");
  add_common(srv);
  srv->callback([&serve] { serve = true; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    Pipeline pipeline(load(options), std::cerr);
    if (serve) {
      pipeline.serve();
    } else if (run_all) {
      pipeline.run_all();
    } else if (chosen) {
      pipeline.run(*chosen);
    }
  } catch (const eyebench::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return eyebench::pipeline::exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
