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

#include "eyebench/templates.hpp"

#include <doctest.h>

#include <set>

#include "temp_dir.hpp"

using namespace eyebench;

namespace {

const std::string kGoldenDir = std::string(EYEBENCH_TEST_DATA) + "/golden/templates";

json golden_payloads() { return json::parse(read_file(kGoldenDir + "/payloads.json")); }

}  // namespace

TEST_CASE("task slugs round trip") {
  std::set<std::string> slugs;
  for (TaskKind task : all_tasks()) {
    const std::string slug = task_slug(task);
    CHECK(parse_task(slug) == task);
    slugs.insert(slug);
  }
  CHECK(slugs.size() == 19);
  CHECK(task_slug(case_qa_task(1)) == "case_qa_01");
  CHECK(task_slug(case_qa_task(15)) == "case_qa_15");
  CHECK(case_qa_index(TaskKind::kMcq) == std::nullopt);
  CHECK(case_qa_index(case_qa_task(7)) == 7);
  CHECK_FALSE(parse_task("case_qa_16").has_value());
  CHECK_THROWS_AS(case_qa_task(0), Error);
}

TEST_CASE("rendered prompts match the golden files byte for byte") {
  const json payloads = golden_payloads();
  const auto& registry = TemplateRegistry::builtin();
  std::size_t checked = 0;
  for (const auto& [slug, payload] : payloads.items()) {
    CAPTURE(slug);
    const auto rendered =
        registry.render(slug, payload.get<std::map<std::string, std::string>>());
    CHECK(format_prompt(rendered) == read_file(kGoldenDir + "/" + slug + ".txt"));
    ++checked;
  }
  CHECK(checked == 20);
  for (TaskKind task : all_tasks()) CHECK(payloads.contains(task_slug(task)));
  CHECK(payloads.contains(std::string(kLongFormQaSlug)));
}

TEST_CASE("builtin registry digest is pinned") {
  // Any edit to a shipped instruction string changes this value.
  CHECK(TemplateRegistry::builtin().digest() ==
        "a11962871a2f84bb01534b28cb01adf45309cf9664706179da049dad99b87597");
}

TEST_CASE("case questions are distinct") {
  std::set<std::string_view> unique(case_questions().begin(), case_questions().end());
  CHECK(unique.size() == 15);
  for (int i = 1; i <= 15; ++i) {
    const auto& tmpl = TemplateRegistry::builtin().get(task_slug(case_qa_task(i)));
    CHECK(tmpl.input.find(case_questions()[i - 1]) != std::string::npos);
    CHECK(placeholders(tmpl.input) == std::vector<std::string>{"case_report"});
  }
}

TEST_CASE("placeholders") {
  CHECK(placeholders("{a} and {b_2} then {a}") == std::vector<std::string>{"a", "b_2", "a"});
  CHECK(placeholders("{} {not valid} {x").empty());
  CHECK(placeholders(TemplateRegistry::builtin().get("mcq").input) ==
        std::vector<std::string>{"question", "option_a", "option_b", "option_c", "option_d"});
}

TEST_CASE("render substitutes once and reports missing values") {
  const auto& registry = TemplateRegistry::builtin();
  // Payload text containing braces is copied verbatim.
  const auto rendered = registry.render("short_answer_qa", {{"question", "what is {x}?"}});
  CHECK(rendered.input.find("what is {x}?") != std::string::npos);
  try {
    registry.render("mcq", {{"question", "q"}});
    FAIL("expected MissingPlaceholder");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMissingPlaceholder);
  }
  CHECK_THROWS_AS(registry.get("nope"), Error);
}

TEST_CASE("registry load validates coverage") {
  testing::TempDir dir;
  const auto& builtin = TemplateRegistry::builtin();
  atomic_write_file(dir.path() / "full.json", builtin.to_json().dump(2));
  const auto loaded = TemplateRegistry::load(dir.path() / "full.json");
  CHECK(loaded.digest() == builtin.digest());

  json partial = builtin.to_json();
  partial["templates"].erase("mcq");
  try {
    TemplateRegistry::from_json(partial);
    FAIL("expected ConfigInvalid");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kConfigInvalid);
  }
  atomic_write_file(dir.path() / "bad.json", "{not json");
  CHECK_THROWS_AS(TemplateRegistry::load(dir.path() / "bad.json"), Error);
}
