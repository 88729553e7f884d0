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

#include <algorithm>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "eyebench/corpus.hpp"
#include "eyebench/curation.hpp"
#include "eyebench/extraction.hpp"
#include "eyebench/humaneval.hpp"
#include "eyebench/metrics.hpp"
#include "eyebench/report.hpp"
#include "eyebench/templates.hpp"

namespace eyebench::pipeline {

namespace fs = std::filesystem;

namespace {

constexpr std::array<std::string_view, 8> kStageNames = {
    "ingest", "curate", "split", "infer", "extract", "score", "compare", "report"};

struct EvalTaskInfo {
  std::string_view key;
  std::string_view label;
  std::string_view short_label;
  std::string_view group;
  bool mcq;
};

// Row order of the metric table.
constexpr std::array<EvalTaskInfo, 6> kEvalTasks = {{
    {"abstract_completion", "Abstract completion (Rouge-L)", "Abstract completion", "Internal validation", false},
    {"fill_in_blank", "Fill-in-the-blank (Rouge-L)", "Fill-in-the-blank", "Internal validation", false},
    {"mcq", "MCQ (Accuracy Score)", "MCQ (internal)", "Internal validation", true},
    {"short_answer_qa", "Short-answer QA (Rouge-L)", "Short-answer QA", "Internal validation", false},
    {"long_form_qa", "Long-form QA (Rouge-L)", "Long-form QA", "External validation", false},
    {"mcq_external", "MCQ (Accuracy Score)", "MCQ (external)", "External validation", true},
}};

const EvalTaskInfo& eval_task_info(std::string_view key) {
  for (const auto& info : kEvalTasks) {
    if (info.key == key) return info;
  }
  throw Error(ErrorCode::kMalformedRecord, "unknown evaluation task '" + std::string(key) + "'");
}

std::string file_safe(std::string_view id) {
  std::string out;
  for (char c : id) {
    out.push_back(is_ascii_alnum(c) || c == '.' || c == '-' || c == '_' ? c : '_');
  }
  return out;
}

fs::path resolve(const fs::path& base, const std::string& value) {
  fs::path p(value);
  return p.is_absolute() ? p : base / p;
}

std::string jsonl(const std::vector<json>& records) {
  std::string out;
  for (const auto& record : records) {
    out += record.dump();
    out += '\n';
  }
  return out;
}

std::vector<json> read_records(const fs::path& path) {
  auto records = read_jsonl_file(path);
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].is_discarded()) {
      throw Error(ErrorCode::kMalformedRecord,
                  path.string() + ": line " + std::to_string(i + 1) + " is not JSON");
    }
  }
  return records;
}

// Minimal CSV reader for the files this module writes (no quoted commas in
// numeric columns; quoted fields are unescaped).
std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(read_file(path));
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char c = line[i];
      if (quoted) {
        if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else if (c == '"') {
          quoted = false;
        } else {
          field += c;
        }
      } else if (c == '"') {
        quoted = true;
      } else if (c == ',') {
        fields.push_back(std::move(field));
        field.clear();
      } else {
        field += c;
      }
    }
    fields.push_back(std::move(field));
    rows.push_back(std::move(fields));
  }
  return rows;
}

struct EvalItem {
  std::string id;
  std::string eval_task;
  extraction::AnswerKind kind;
  std::string instruction;
  std::string input;
  std::string reference;
  extraction::McqOptions options;
};

json to_json(const EvalItem& item) {
  json out = {{"id", item.id},
              {"eval_task", item.eval_task},
              {"answer_kind", extraction::answer_kind_name(item.kind)},
              {"instruction", item.instruction},
              {"input", item.input},
              {"reference", item.reference}};
  if (item.kind == extraction::AnswerKind::kMcq) out["options"] = item.options;
  return out;
}

EvalItem eval_item_from_json(const json& value) {
  EvalItem item;
  item.id = value.at("id").get<std::string>();
  item.eval_task = value.at("eval_task").get<std::string>();
  auto kind = extraction::parse_answer_kind(value.at("answer_kind").get<std::string>());
  if (!kind) throw Error(ErrorCode::kMalformedRecord, "bad answer_kind in eval item");
  item.kind = *kind;
  item.instruction = value.at("instruction").get<std::string>();
  item.input = value.at("input").get<std::string>();
  item.reference = value.at("reference").get<std::string>();
  if (value.contains("options")) item.options = value["options"].get<extraction::McqOptions>();
  return item;
}

std::vector<EvalItem> read_eval_items(const fs::path& path) {
  std::vector<EvalItem> items;
  for (const auto& record : read_records(path)) items.push_back(eval_item_from_json(record));
  return items;
}

std::string prompt_for(const EvalItem& item) {
  return format_prompt({item.instruction, item.input});
}

// Manifest bookkeeping.
struct StageSpec {
  std::vector<fs::path> inputs;     // must exist
  std::vector<fs::path> optional;   // digested when present
  std::vector<fs::path> outputs;
  json config;
};

std::string digest_of(const fs::path& path) {
  std::error_code ec;
  if (!fs::exists(path, ec)) return "absent";
  if (fs::is_directory(path, ec)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(path)) {
      if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::string joined;
    for (const auto& file : files) {
      joined += fs::relative(file, path).generic_string() + ":" + sha256_file(file) + "\n";
    }
    return sha256_hex(joined);
  }
  return sha256_file(path);
}

}  // namespace

// ---------------------------------------------------------------------------

std::string_view stage_name(Stage stage) { return kStageNames[static_cast<std::size_t>(stage)]; }

std::optional<Stage> parse_stage(std::string_view name) {
  for (std::size_t i = 0; i < kStageNames.size(); ++i) {
    if (kStageNames[i] == name) return static_cast<Stage>(i);
  }
  return std::nullopt;
}

int exit_code_for(const Error& error) {
  return error.code() == ErrorCode::kConfigInvalid ? 2 : 1;
}

RunConfig RunConfig::from_json(const json& value, const fs::path& base_dir) {
  if (!value.is_object()) throw Error(ErrorCode::kConfigInvalid, "config must be an object");
  RunConfig config;
  try {
    const json corpus = value.value("corpus", json::object());
    if (corpus.contains("case_reports")) {
      config.case_reports = resolve(base_dir, corpus["case_reports"].get<std::string>());
    }
    if (corpus.contains("abstracts")) {
      config.abstracts = resolve(base_dir, corpus["abstracts"].get<std::string>());
    }
    if (corpus.contains("study_items")) {
      config.study_items = resolve(base_dir, corpus["study_items"].get<std::string>());
    }
    if (corpus.contains("journal_whitelist")) {
      config.journal_whitelist = corpus["journal_whitelist"].get<std::vector<std::string>>();
    }
    if (value.contains("templates") && !value["templates"].is_null()) {
      config.templates = resolve(base_dir, value["templates"].get<std::string>());
    }
    const json curation = value.value("curation", json::object());
    config.case_report_sample = curation.value("case_report_sample", std::size_t{600});
    config.weak_label_backend = curation.value("weak_label_backend", "");

    for (const auto& backend : value.value("backends", json::array())) {
      config.backends.push_back(gateway::BackendConfig::from_json(backend));
    }
    for (const auto& imported : value.value("imported_responses", json::array())) {
      config.imported_responses.push_back(
          {imported.at("model_id").get<std::string>(),
           resolve(base_dir, imported.at("path").get<std::string>())});
    }
    const json external = value.value("external_eval", json::object());
    if (external.contains("long_form_qa")) {
      config.external_long_form = resolve(base_dir, external["long_form_qa"].get<std::string>());
    }
    if (external.contains("mcq")) {
      config.external_mcq = resolve(base_dir, external["mcq"].get<std::string>());
    }
    const json bootstrap = value.value("bootstrap", json::object());
    config.bootstrap.sample_size = bootstrap.value("sample_size", std::size_t{30});
    config.bootstrap.repetitions = bootstrap.value("repetitions", std::size_t{100});
    config.bootstrap.ci_level = bootstrap.value("ci_level", 0.95);
    if (value.contains("n_comparisons") && !value["n_comparisons"].is_null()) {
      config.n_comparisons = value["n_comparisons"].get<int>();
    }
    config.reference_model = value.at("reference_model").get<std::string>();
    config.output_dir = resolve(base_dir, value.at("output_dir").get<std::string>());
    config.seed = value.value("seed", std::uint64_t{0});
    config.jobs = value.value("jobs", 4);
    config.scorer_endpoint = value.value("scorer_endpoint", "");

    const json humaneval = value.value("humaneval", json::object());
    config.humaneval_store =
        humaneval.contains("store")
            ? resolve(base_dir, humaneval["store"].get<std::string>())
            : config.output_dir / "humaneval";
    config.humaneval_host = humaneval.value("host", "127.0.0.1");
    config.humaneval_port = humaneval.value("port", 8080);
    for (const auto& session : humaneval.value("sessions", json::array())) {
      HumanEvalSessionConfig entry;
      entry.id = session.at("id").get<std::string>();
      entry.samples = resolve(base_dir, session.at("samples").get<std::string>());
      entry.models = session.value("models", std::vector<std::string>{});
      entry.raters = session.at("raters").get<std::vector<std::string>>();
      if (session.contains("seed")) entry.seed = session["seed"].get<std::uint64_t>();
      config.sessions.push_back(std::move(entry));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfigInvalid, e.what());
  }

  config.bootstrap.seed = config.seed;
  config.bootstrap.validate();
  if (config.jobs < 1) throw Error(ErrorCode::kConfigInvalid, "jobs must be >= 1");
  if (config.n_comparisons && *config.n_comparisons < 1) {
    throw Error(ErrorCode::kConfigInvalid, "n_comparisons must be >= 1");
  }
  std::set<std::string> ids;
  for (const auto& model : config.model_ids()) {
    if (!ids.insert(model).second) {
      throw Error(ErrorCode::kConfigInvalid, "model '" + model + "' configured twice");
    }
  }
  if (!ids.count(config.reference_model)) {
    throw Error(ErrorCode::kConfigInvalid,
                "reference_model '" + config.reference_model + "' has no responses configured");
  }
  if (!config.weak_label_backend.empty() &&
      std::none_of(config.backends.begin(), config.backends.end(), [&](const auto& b) {
        return b.model_id == config.weak_label_backend;
      })) {
    throw Error(ErrorCode::kConfigInvalid,
                "weak_label_backend '" + config.weak_label_backend + "' is not a backend");
  }
  return config;
}

RunConfig RunConfig::load(const fs::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfigInvalid, e.what());
  }
  json value = json::parse(text, nullptr, false, /*ignore_comments=*/true);
  if (value.is_discarded()) {
    throw Error(ErrorCode::kConfigInvalid, path.string() + " is not valid JSON");
  }
  return from_json(value, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

std::vector<std::string> RunConfig::model_ids() const {
  std::vector<std::string> ids;
  for (const auto& backend : backends) ids.push_back(backend.model_id);
  for (const auto& imported : imported_responses) ids.push_back(imported.model_id);
  return ids;
}

// ---------------------------------------------------------------------------

Pipeline::Pipeline(RunConfig config, std::ostream& log)
    : config_(std::move(config)), log_(log) {}

fs::path Pipeline::path(std::string_view relative) const {
  return config_.output_dir / fs::path(relative);
}

std::shared_ptr<gateway::Transport> Pipeline::transport_for(
    const gateway::BackendConfig& backend) {
  return factory_ ? factory_(backend) : gateway::make_transport(backend.endpoint_url);
}

StageOutcome Pipeline::run(Stage stage) {
  StageSpec spec;
  json templates_digest = config_.templates ? json(digest_of(*config_.templates)) : json("builtin");
  std::vector<std::string> models = config_.model_ids();
  switch (stage) {
    case Stage::kIngest:
      for (const auto& p : {config_.case_reports, config_.abstracts, config_.study_items}) {
        if (!p.empty()) spec.inputs.push_back(p);
      }
      spec.outputs = {path("corpus.jsonl")};
      spec.config = {{"whitelist", config_.journal_whitelist
                                       ? json(*config_.journal_whitelist)
                                       : json("default")}};
      break;
    case Stage::kCurate: {
      spec.inputs = {path("corpus.jsonl")};
      spec.outputs = {path("instructions.jsonl"), path("curation.json")};
      json backend = nullptr;
      for (const auto& b : config_.backends) {
        if (b.model_id == config_.weak_label_backend) backend = b.to_json();
      }
      spec.config = {{"templates", templates_digest},
                     {"sample", config_.case_report_sample},
                     {"weak_label", backend},
                     {"seed", config_.seed}};
      break;
    }
    case Stage::kSplit:
      spec.inputs = {path("instructions.jsonl")};
      if (config_.external_long_form) spec.inputs.push_back(*config_.external_long_form);
      if (config_.external_mcq) spec.inputs.push_back(*config_.external_mcq);
      spec.outputs = {path("split.json"), path("eval_items.jsonl")};
      spec.config = {{"templates", templates_digest}, {"seed", config_.seed}};
      break;
    case Stage::kInfer: {
      spec.inputs = {path("eval_items.jsonl")};
      json backends = json::array();
      for (const auto& b : config_.backends) backends.push_back(b.to_json());
      for (const auto& imported : config_.imported_responses) {
        spec.inputs.push_back(imported.path);
      }
      for (const auto& model : models) {
        spec.outputs.push_back(path("responses/" + file_safe(model) + ".jsonl"));
      }
      spec.config = {{"backends", backends}, {"models", models}};
      break;
    }
    case Stage::kExtract:
      spec.inputs = {path("eval_items.jsonl")};
      for (const auto& model : models) {
        spec.inputs.push_back(path("responses/" + file_safe(model) + ".jsonl"));
        spec.outputs.push_back(path("extracted/" + file_safe(model) + ".jsonl"));
      }
      spec.config = {{"models", models}};
      break;
    case Stage::kScore:
      spec.inputs = {path("eval_items.jsonl")};
      for (const auto& model : models) {
        spec.inputs.push_back(path("extracted/" + file_safe(model) + ".jsonl"));
      }
      spec.outputs = {path("scores.csv"), path("classification.csv"), path("neural.csv")};
      spec.config = {{"models", models}, {"scorer", config_.scorer_endpoint}};
      break;
    case Stage::kCompare:
      spec.inputs = {path("eval_items.jsonl"), path("scores.csv")};
      spec.outputs = {path("comparisons.csv"), path("comparisons.json")};
      spec.config = {{"reference", config_.reference_model},
                     {"sample_size", config_.bootstrap.sample_size},
                     {"repetitions", config_.bootstrap.repetitions},
                     {"ci_level", config_.bootstrap.ci_level},
                     {"n_comparisons", config_.n_comparisons ? json(*config_.n_comparisons)
                                                             : json(nullptr)},
                     {"seed", config_.seed},
                     {"models", models}};
      break;
    case Stage::kReport:
      spec.inputs = {path("comparisons.json"), path("classification.csv"), path("neural.csv")};
      for (const auto& session : config_.sessions) {
        spec.optional.push_back(config_.humaneval_store / session.id);
      }
      spec.outputs = {path("report.md"), path("metric_table.csv"),
                      path("secondary_table.csv"), path("rating_table.csv")};
      spec.config = {{"reference", config_.reference_model}, {"models", models}};
      break;
  }

  for (const auto& input : spec.inputs) {
    if (!fs::exists(input)) {
      throw Error(ErrorCode::kMissingUpstreamArtifact,
                  std::string(stage_name(stage)) + " needs " + input.string());
    }
  }
  json digests = json::array();
  for (const auto& input : spec.inputs) digests.push_back(digest_of(input));
  for (const auto& input : spec.optional) digests.push_back(digest_of(input));
  const std::string input_digest = sha256_hex(json{{"stage", stage_name(stage)},
                                                   {"version", kToolVersion},
                                                   {"config", spec.config},
                                                   {"inputs", digests}}
                                                  .dump());

  const fs::path manifest_path = path("manifest.json");
  json manifest = json::object();
  if (fs::exists(manifest_path)) {
    manifest = json::parse(read_file(manifest_path), nullptr, false);
    if (!manifest.is_object()) manifest = json::object();
  }
  const std::string name(stage_name(stage));
  if (manifest.contains("stages") && manifest["stages"].contains(name)) {
    const json& previous = manifest["stages"][name];
    bool same = previous.value("input_digest", "") == input_digest;
    const json outputs = previous.value("outputs", json::object());
    for (const auto& output : spec.outputs) {
      const std::string key = fs::relative(output, config_.output_dir).generic_string();
      same = same && outputs.contains(key) && outputs[key] == digest_of(output);
    }
    if (same) {
      log_ << name << ": up to date\n";
      return {stage, true, "up to date"};
    }
  }

  StageOutcome outcome;
  switch (stage) {
    case Stage::kIngest: outcome = ingest(); break;
    case Stage::kCurate: outcome = curate(); break;
    case Stage::kSplit: outcome = split(); break;
    case Stage::kInfer: outcome = infer(); break;
    case Stage::kExtract: outcome = extract(); break;
    case Stage::kScore: outcome = score(); break;
    case Stage::kCompare: outcome = compare(); break;
    case Stage::kReport: outcome = report(); break;
  }

  json outputs = json::object();
  for (const auto& output : spec.outputs) {
    outputs[fs::relative(output, config_.output_dir).generic_string()] = digest_of(output);
  }
  manifest["tool_version"] = kToolVersion;
  manifest["seed"] = config_.seed;
  manifest["stages"][name] = {{"input_digest", input_digest},
                              {"inputs", digests},
                              {"outputs", outputs}};
  atomic_write_file(manifest_path, manifest.dump(2) + "\n");
  log_ << name << ": " << outcome.summary << "\n";
  return outcome;
}

std::vector<StageOutcome> Pipeline::run_all() {
  std::vector<StageOutcome> outcomes;
  for (Stage stage : kAllStages) outcomes.push_back(run(stage));
  return outcomes;
}

// ---------------------------------------------------------------------------

StageOutcome Pipeline::ingest() {
  std::vector<corpus::Document> documents;
  std::ostringstream summary;
  auto absorb = [&](const char* label, corpus::IngestResult result) {
    summary << label << " " << result.documents.size() << "/" << result.input
            << " (skipped " << result.skipped << ", rejected " << result.rejected << ") ";
    for (const auto& line : result.diagnostics) log_ << "  " << line << "\n";
    for (auto& doc : result.documents) documents.push_back(std::move(doc));
  };
  if (!config_.case_reports.empty()) {
    absorb("case_reports", corpus::ingest_case_reports(read_jsonl_file(config_.case_reports)));
  }
  if (!config_.abstracts.empty()) {
    const auto records = read_jsonl_file(config_.abstracts);
    absorb("abstracts", config_.journal_whitelist
                            ? corpus::ingest_abstracts(records, *config_.journal_whitelist)
                            : corpus::ingest_abstracts(records));
  }
  if (!config_.study_items.empty()) {
    absorb("study_items", corpus::ingest_study_items(read_jsonl_file(config_.study_items)));
  }
  std::set<std::string> ids;
  for (const auto& doc : documents) {
    if (!ids.insert(doc.id).second) {
      throw Error(ErrorCode::kDuplicateId, "document id '" + doc.id + "' appears twice");
    }
  }
  std::sort(documents.begin(), documents.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  corpus::write_store(path("corpus.jsonl"), documents);
  return {Stage::kIngest, false, summary.str()};
}

StageOutcome Pipeline::curate() {
  const TemplateRegistry registry =
      config_.templates ? TemplateRegistry::load(*config_.templates) : TemplateRegistry::builtin();
  const auto documents = corpus::read_store(path("corpus.jsonl"));

  auto abstracts = curation::curate_abstracts(documents, registry);
  auto knowledge = curation::curate_study_items(documents, registry);
  curation::CurationResult cases;
  const auto sampled = curation::sample_case_reports(documents, config_.case_report_sample,
                                                     derive_seed(config_.seed, "case_sample"));
  if (!sampled.empty()) {
    if (config_.weak_label_backend.empty()) {
      throw Error(ErrorCode::kConfigInvalid, "case reports present but no weak_label_backend");
    }
    const auto& backend = *std::find_if(
        config_.backends.begin(), config_.backends.end(),
        [&](const auto& b) { return b.model_id == config_.weak_label_backend; });
    auto cache = std::make_shared<gateway::ResponseCache>(path("cache"));
    gateway::Client client(backend, transport_for(backend), cache);
    cases = curation::curate_case_reports(sampled, client, config_.jobs, registry);
  }

  std::vector<json> records;
  json failures = json::object();
  json counts = json::object();
  auto add = [&](const char* label, const curation::CurationResult& result) {
    for (const auto& instance : result.instances) {
      const std::string problem = curation::check_instance(instance, registry);
      if (!problem.empty()) {
        throw Error(ErrorCode::kMalformedRecord, instance.id + ": " + problem);
      }
      records.push_back(curation::to_json(instance));
    }
    counts[label] = result.instances.size();
    failures[label] = result.failures;
  };
  add("case_qa", cases);
  add("abstract_completion", abstracts);
  add("knowledge_qa", knowledge);
  atomic_write_file(path("instructions.jsonl"), jsonl(records));
  atomic_write_file(path("curation.json"),
                    json{{"counts", counts},
                         {"failures", failures},
                         {"case_reports_sampled", sampled.size()},
                         {"total", records.size()}}
                            .dump(2) + "\n");
  return {Stage::kCurate, false, std::to_string(records.size()) + " instructions"};
}

StageOutcome Pipeline::split() {
  const TemplateRegistry registry =
      config_.templates ? TemplateRegistry::load(*config_.templates) : TemplateRegistry::builtin();
  std::vector<curation::InstructionInstance> instances;
  for (const auto& record : read_records(path("instructions.jsonl"))) {
    instances.push_back(curation::instance_from_json(record));
  }
  // Each category is split on its own so the 9:1 ratio holds per category.
  std::map<std::string, std::vector<std::string>> categories;
  std::map<std::string, const curation::InstructionInstance*> by_id;
  for (const auto& instance : instances) {
    by_id[instance.id] = &instance;
    if (case_qa_index(instance.task)) {
      categories["case_qa"].push_back(instance.id);
    } else if (instance.task == TaskKind::kAbstractCompletion) {
      categories["abstract_completion"].push_back(instance.id);
    } else {
      categories["knowledge_qa"].push_back(instance.id);
    }
  }
  json manifest = {{"seed", config_.seed}, {"categories", json::object()}};
  std::vector<std::string> validation;
  for (const auto& [category, ids] : categories) {
    if (category == "case_qa") {
      manifest["categories"][category] = {{"train", ids},
                                          {"validation", json::array()},
                                          {"train_count", ids.size()},
                                          {"validation_count", 0},
                                          {"seed", nullptr}};
      continue;
    }
    const auto result = curation::split_train_val(ids, derive_seed(config_.seed, "split:" + category));
    manifest["categories"][category] = curation::to_json(result);
    validation.insert(validation.end(), result.validation.begin(), result.validation.end());
  }
  atomic_write_file(path("split.json"), manifest.dump(1) + "\n");

  std::vector<json> items;
  std::sort(validation.begin(), validation.end());
  for (const auto& id : validation) {
    const auto& instance = *by_id.at(id);
    EvalItem item;
    item.id = instance.id;
    item.eval_task = task_slug(instance.task);
    item.kind = extraction::answer_kind_for(instance.task);
    item.instruction = instance.instruction;
    item.input = instance.input;
    item.reference = instance.output;
    if (instance.task == TaskKind::kMcq) {
      auto options = extraction::options_from_input(instance.input);
      if (!options) throw Error(ErrorCode::kMalformedRecord, id + ": options not recoverable");
      item.options = *options;
    }
    items.push_back(to_json(item));
  }
  if (config_.external_long_form) {
    for (const auto& record : read_records(*config_.external_long_form)) {
      EvalItem item;
      item.id = "external:" + record.at("id").get<std::string>();
      item.eval_task = "long_form_qa";
      item.kind = extraction::AnswerKind::kLongFormQa;
      const auto rendered = registry.render(
          kLongFormQaSlug, {{"question", record.at("question").get<std::string>()}});
      item.instruction = rendered.instruction;
      item.input = rendered.input;
      item.reference = record.at("answer").get<std::string>();
      items.push_back(to_json(item));
    }
  }
  if (config_.external_mcq) {
    for (const auto& record : read_records(*config_.external_mcq)) {
      const auto options = record.at("options").get<std::vector<std::string>>();
      if (options.size() != 4) {
        throw Error(ErrorCode::kWrongOptionCount, "external MCQ needs four options");
      }
      EvalItem item;
      item.id = "external-mcq:" + record.at("id").get<std::string>();
      item.eval_task = "mcq_external";
      item.kind = extraction::AnswerKind::kMcq;
      const auto rendered = registry.render("mcq", {{"question", record.at("question").get<std::string>()},
                                                    {"option_a", options[0]},
                                                    {"option_b", options[1]},
                                                    {"option_c", options[2]},
                                                    {"option_d", options[3]}});
      item.instruction = rendered.instruction;
      item.input = rendered.input;
      std::string answer = record.at("answer").get<std::string>();
      for (std::size_t i = 0; i < 4; ++i) {
        if (options[i] == answer) answer = std::string(1, static_cast<char>('A' + i));
      }
      if (answer.size() != 1 || answer[0] < 'A' || answer[0] > 'D') {
        throw Error(ErrorCode::kMalformedRecord, item.id + ": answer is not an option");
      }
      item.reference = answer;
      std::copy(options.begin(), options.end(), item.options.begin());
      items.push_back(to_json(item));
    }
  }
  atomic_write_file(path("eval_items.jsonl"), jsonl(items));
  return {Stage::kSplit, false,
          std::to_string(instances.size()) + " instructions split, " +
              std::to_string(items.size()) + " evaluation items"};
}

StageOutcome Pipeline::infer() {
  const auto items = read_eval_items(path("eval_items.jsonl"));
  std::vector<std::string> prompts;
  for (const auto& item : items) prompts.push_back(prompt_for(item));
  auto cache = std::make_shared<gateway::ResponseCache>(path("cache"));
  std::size_t failures = 0;

  for (const auto& backend : config_.backends) {
    gateway::Client client(backend, transport_for(backend), cache);
    const auto entries = client.batch_complete(prompts, config_.jobs);
    std::vector<json> records;
    for (std::size_t i = 0; i < items.size(); ++i) {
      const auto& entry = entries[i];
      if (!entry.ok() && entry.error_code == ErrorCode::kAuthMissing) {
        throw Error(ErrorCode::kAuthMissing, entry.error_message);
      }
      json record = {{"item_id", items[i].id}, {"model_id", backend.model_id}};
      if (entry.ok()) {
        record["text"] = entry.response->text;
        record["request_digest"] = entry.response->request_digest;
      } else {
        ++failures;
        record["text"] = "";
        record["error"] = entry.error_message;
      }
      records.push_back(record);
    }
    atomic_write_file(path("responses/" + file_safe(backend.model_id) + ".jsonl"), jsonl(records));
  }

  for (const auto& imported : config_.imported_responses) {
    std::map<std::string, std::string> texts;
    for (const auto& record : read_records(imported.path)) {
      texts[record.at("item_id").get<std::string>()] = record.at("text").get<std::string>();
    }
    std::vector<json> records;
    for (const auto& item : items) {
      auto it = texts.find(item.id);
      if (it == texts.end()) {
        throw Error(ErrorCode::kInstanceSetMismatch,
                    imported.model_id + " has no response for " + item.id);
      }
      records.push_back({{"item_id", item.id},
                         {"model_id", imported.model_id},
                         {"text", it->second},
                         {"imported", true}});
    }
    atomic_write_file(path("responses/" + file_safe(imported.model_id) + ".jsonl"),
                      jsonl(records));
  }
  return {Stage::kInfer, false,
          std::to_string(items.size()) + " items x " +
              std::to_string(config_.model_ids().size()) + " models, " +
              std::to_string(failures) + " failed requests"};
}

StageOutcome Pipeline::extract() {
  const auto items = read_eval_items(path("eval_items.jsonl"));
  std::map<std::string, const EvalItem*> by_id;
  for (const auto& item : items) by_id[item.id] = &item;
  std::size_t unparseable = 0;
  for (const auto& model : config_.model_ids()) {
    const auto responses = read_records(path("responses/" + file_safe(model) + ".jsonl"));
    if (responses.size() != items.size()) {
      throw Error(ErrorCode::kInstanceSetMismatch, model + " responses do not cover every item");
    }
    std::vector<json> records;
    for (const auto& response : responses) {
      const std::string id = response.at("item_id").get<std::string>();
      auto it = by_id.find(id);
      if (it == by_id.end()) throw Error(ErrorCode::kInstanceSetMismatch, "unknown item " + id);
      const EvalItem& item = *it->second;
      const std::string text = response.at("text").get<std::string>();
      const auto answer = item.kind == extraction::AnswerKind::kMcq
                              ? extraction::extract_mcq(text, item.options)
                              : extraction::extract_freeform(text, item.kind);
      if (!answer.parsed()) ++unparseable;
      records.push_back({{"item_id", id},
                         {"eval_task", item.eval_task},
                         {"model_id", model},
                         {"extracted", extraction::to_json(answer)}});
    }
    atomic_write_file(path("extracted/" + file_safe(model) + ".jsonl"), jsonl(records));
  }
  return {Stage::kExtract, false, std::to_string(unparseable) + " unparseable MCQ responses"};
}

StageOutcome Pipeline::score() {
  const auto items = read_eval_items(path("eval_items.jsonl"));
  const auto models = config_.model_ids();
  std::ostringstream scores, classification, neural;
  scores << "eval_task,item_id,model,metric,value\n";
  classification << "eval_task,model,accuracy,macro_f1,n_unparseable,n\n";
  neural << "eval_task,model,status,bert_score,bart_score,n\n";

  std::vector<std::string> task_order;
  for (const auto& info : kEvalTasks) {
    if (std::any_of(items.begin(), items.end(),
                    [&](const auto& item) { return item.eval_task == info.key; })) {
      task_order.emplace_back(info.key);
    }
  }
  for (const auto& model : models) {
    std::map<std::string, extraction::ExtractedAnswer> answers;
    for (const auto& record : read_records(path("extracted/" + file_safe(model) + ".jsonl"))) {
      answers[record.at("item_id").get<std::string>()] =
          extraction::extracted_from_json(record.at("extracted"));
    }
    for (const auto& task : task_order) {
      const bool mcq = eval_task_info(task).mcq;
      std::vector<extraction::ExtractedAnswer> predictions;
      std::vector<std::string> golds;
      std::vector<metrics::ScorePair> pairs;
      for (const auto& item : items) {
        if (item.eval_task != task) continue;
        auto it = answers.find(item.id);
        if (it == answers.end()) {
          throw Error(ErrorCode::kInstanceSetMismatch, model + " lacks " + item.id);
        }
        if (mcq) {
          predictions.push_back(it->second);
          golds.push_back(item.reference);
          const bool right = it->second.parsed() && it->second.value == item.reference;
          scores << task << ',' << item.id << ',' << model << ",correct," << (right ? 1 : 0)
                 << '\n';
        } else {
          const auto rouge = metrics::rouge_l(it->second.value, item.reference);
          scores << task << ',' << item.id << ',' << model << ",rouge_l_f,"
                 << format_fixed(rouge.f, 6) << '\n';
          pairs.push_back({it->second.value, item.reference});
        }
      }
      if (mcq) {
        const auto result = metrics::classify_scores(predictions, golds);
        classification << task << ',' << model << ',' << format_fixed(result.accuracy, 6) << ','
                       << format_fixed(result.macro_f1, 6) << ',' << result.n_unparseable
                       << ',' << golds.size() << '\n';
        continue;
      }
      if (config_.scorer_endpoint.empty()) {
        neural << task << ',' << model << ",absent,,," << pairs.size() << '\n';
        continue;
      }
      try {
        const auto values = metrics::score_neural(pairs, config_.scorer_endpoint);
        double bert = 0.0, bart = 0.0;
        for (const auto& v : values) {
          bert += v.bert_score;
          bart += v.bart_score;
        }
        const double n = values.empty() ? 1.0 : static_cast<double>(values.size());
        neural << task << ',' << model << ",ok," << format_fixed(bert / n, 6) << ','
               << format_fixed(bart / n, 6) << ',' << values.size() << '\n';
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kScorerUnavailable) throw;
        log_ << "  neural scores absent for " << task << "/" << model << ": " << e.what() << "\n";
        neural << task << ',' << model << ",absent,,," << pairs.size() << '\n';
      }
    }
  }
  atomic_write_file(path("scores.csv"), scores.str());
  atomic_write_file(path("classification.csv"), classification.str());
  atomic_write_file(path("neural.csv"), neural.str());
  return {Stage::kScore, false,
          std::to_string(task_order.size()) + " tasks x " + std::to_string(models.size()) +
              " models scored"};
}

StageOutcome Pipeline::compare() {
  const auto items = read_eval_items(path("eval_items.jsonl"));
  std::map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < items.size(); ++i) position[items[i].id] = i;

  // task -> model -> (item position, value)
  std::map<std::string, std::map<std::string, std::vector<std::pair<std::size_t, double>>>> raw;
  const auto rows = read_csv(path("scores.csv"));
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != 5) throw Error(ErrorCode::kMalformedRecord, "scores.csv row " + std::to_string(r));
    raw[row[0]][row[2]].emplace_back(position.at(row[1]), std::stod(row[4]));
  }

  std::vector<stats::TaskComparison> results;
  for (const auto& info : kEvalTasks) {
    auto task = raw.find(std::string(info.key));
    if (task == raw.end()) continue;
    std::map<std::string, std::vector<double>> per_model;
    for (auto& [model, values] : task->second) {
      std::sort(values.begin(), values.end());
      for (const auto& [pos, value] : values) per_model[model].push_back(value);
    }
    stats::BootstrapConfig cfg = config_.bootstrap;
    cfg.seed = derive_seed(config_.seed, "bootstrap:" + std::string(info.key));
    results.push_back({std::string(info.key), config_.reference_model,
                       stats::compare_models(per_model, config_.reference_model, cfg,
                                             config_.n_comparisons)});
  }
  atomic_write_file(path("comparisons.csv"), stats::comparisons_csv(results));

  json out = json::array();
  for (const auto& task : results) {
    json summaries = json::object();
    for (const auto& [model, s] : task.result.summaries) {
      summaries[model] = {{"mean", s.mean},
                          {"sd", s.sd},
                          {"ci_low", s.ci_low},
                          {"ci_high", s.ci_high},
                          {"replicate_means", s.replicate_means}};
    }
    json comparisons = json::array();
    for (const auto& c : task.result.comparisons) {
      comparisons.push_back({{"model_a", c.model_a},
                             {"model_b", c.model_b},
                             {"p_raw", c.p_raw},
                             {"p_adjusted", c.p_adjusted},
                             {"n_comparisons", c.n_comparisons},
                             {"marker", stats::marker_name(c.marker)}});
    }
    out.push_back({{"task", task.task},
                   {"reference_model", task.reference_model},
                   {"summaries", summaries},
                   {"comparisons", comparisons}});
  }
  atomic_write_file(path("comparisons.json"), out.dump(1) + "\n");
  return {Stage::kCompare, false, std::to_string(results.size()) + " tasks compared"};
}

StageOutcome Pipeline::report() {
  json data = json::parse(read_file(path("comparisons.json")), nullptr, false);
  if (!data.is_array()) throw Error(ErrorCode::kMalformedRecord, "comparisons.json is corrupt");
  std::vector<stats::TaskComparison> results;
  for (const auto& task : data) {
    stats::TaskComparison entry;
    entry.task = task.at("task").get<std::string>();
    entry.reference_model = task.at("reference_model").get<std::string>();
    for (const auto& [model, s] : task.at("summaries").items()) {
      stats::BootstrapSummary summary;
      summary.mean = s.at("mean").get<double>();
      summary.sd = s.at("sd").get<double>();
      summary.ci_low = s.at("ci_low").get<double>();
      summary.ci_high = s.at("ci_high").get<double>();
      entry.result.summaries[model] = summary;
    }
    for (const auto& c : task.at("comparisons")) {
      stats::ComparisonResult result;
      result.model_a = c.at("model_a").get<std::string>();
      result.model_b = c.at("model_b").get<std::string>();
      result.p_raw = c.at("p_raw").get<double>();
      result.p_adjusted = c.at("p_adjusted").get<double>();
      result.n_comparisons = c.at("n_comparisons").get<int>();
      result.marker = stats::parse_marker_name(c.at("marker").get<std::string>())
                          .value_or(stats::Marker::kNone);
      entry.result.comparisons.push_back(result);
    }
    results.push_back(std::move(entry));
  }

  std::vector<report::MetricRow> rows;
  for (const auto& info : kEvalTasks) {
    if (std::any_of(results.begin(), results.end(),
                    [&](const auto& r) { return r.task == info.key; })) {
      rows.push_back({std::string(info.key), std::string(info.label), std::string(info.group)});
    }
  }
  const auto models = config_.model_ids();
  const auto metric = report::render_metric_table(results, rows, models, config_.reference_model);

  // Secondary metrics: macro-F1 for MCQ tasks, BERT/BART for text tasks.
  std::vector<report::SecondaryRow> secondary;
  std::map<std::pair<std::string, std::string>, std::size_t> secondary_index;
  auto secondary_row = [&](const std::string& task, const std::string& metric_name) {
    auto key = std::make_pair(task, metric_name);
    auto it = secondary_index.find(key);
    if (it != secondary_index.end()) return it->second;
    secondary_index[key] = secondary.size();
    secondary.push_back({std::string(eval_task_info(task).short_label), metric_name, {}});
    return secondary.size() - 1;
  };
  const auto classification = read_csv(path("classification.csv"));
  for (std::size_t r = 1; r < classification.size(); ++r) {
    const auto& row = classification[r];
    secondary[secondary_row(row[0], "Macro-F1")].values[row[1]] = std::stod(row[3]);
  }
  const auto neural = read_csv(path("neural.csv"));
  for (std::size_t r = 1; r < neural.size(); ++r) {
    const auto& row = neural[r];
    const bool ok = row[2] == "ok";
    const std::size_t bert = secondary_row(row[0], "BERT Score");
    const std::size_t bart = secondary_row(row[0], "BART Score");
    secondary[bert].values[row[1]] = ok ? std::optional<double>(std::stod(row[3])) : std::nullopt;
    secondary[bart].values[row[1]] = ok ? std::optional<double>(std::stod(row[4])) : std::nullopt;
  }
  const auto secondary_table = report::render_secondary_table(secondary, models);

  std::ostringstream md;
  md << "# Evaluation report\n\n"
     << "Primary metrics, presented as mean ± SD (95% CI) over " << config_.bootstrap.repetitions
     << " bootstrap replicates of " << config_.bootstrap.sample_size << " items. Reference: "
     << config_.reference_model << ".\n\n"
     << metric.markdown << "\n## Secondary metrics\n\n" << secondary_table.markdown;

  std::string rating_csv = "session,task_group,dimension,model,mean,count\n";
  if (!config_.sessions.empty()) {
    humaneval::SessionStore store(config_.humaneval_store);
    for (const auto& session : config_.sessions) {
      if (!store.exists(session.id)) continue;
      const auto aggregate = store.report(session.id);
      const auto table = report::render_rating_table(aggregate, session.models);
      md << "\n## Human evaluation: " << session.id << "\n\n" << table.markdown;
      std::istringstream lines(table.csv);
      std::string line;
      std::getline(lines, line);
      while (std::getline(lines, line)) rating_csv += session.id + "," + line + "\n";
    }
  }
  atomic_write_file(path("report.md"), md.str());
  atomic_write_file(path("metric_table.csv"), metric.csv);
  atomic_write_file(path("secondary_table.csv"), secondary_table.csv);
  atomic_write_file(path("rating_table.csv"), rating_csv);
  return {Stage::kReport, false, std::to_string(rows.size()) + " metric rows rendered"};
}

// ---------------------------------------------------------------------------

void Pipeline::ensure_sessions() {
  humaneval::SessionStore store(config_.humaneval_store);
  for (const auto& session : config_.sessions) {
    if (store.exists(session.id)) continue;
    auto samples = humaneval::read_samples(session.samples);
    std::vector<std::string> models = session.models;
    if (models.empty() && !samples.empty()) {
      for (const auto& [model, text] : samples.front().responses) models.push_back(model);
    }
    store.create(humaneval::EvalSession::create(
        session.id, std::move(samples), models, session.raters,
        session.seed.value_or(derive_seed(config_.seed, "session:" + session.id))));
    log_ << "created session " << session.id << "\n";
  }
}

void Pipeline::serve() {
  ensure_sessions();
  humaneval::SessionStore store(config_.humaneval_store);
  humaneval::Server server(store);
  log_ << "serving human evaluation on http://" << config_.humaneval_host << ":"
       << config_.humaneval_port << "\n";
  log_.flush();
  if (!server.listen(config_.humaneval_host, config_.humaneval_port)) {
    throw Error(ErrorCode::kIo, "could not bind " + config_.humaneval_host + ":" +
                                    std::to_string(config_.humaneval_port));
  }
}

}  // namespace eyebench::pipeline
