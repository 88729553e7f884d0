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

// Markdown and CSV renderings of metric and rating tables.

#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eyebench/humaneval.hpp"
#include "eyebench/stats.hpp"

namespace eyebench::report {

inline constexpr std::string_view kMissing = "—";
inline constexpr std::string_view kFootnote =
    "* p<0.05, † p<0.0001 (after Bonferroni correction)";

// Half away from zero, with a small guard against binary representation
// error (4.485 -> "4.49"); never renders "-0.00".
std::string fixed(double value, int decimals = 2);

// "{mean} ± {sd} ({ci_low}, {ci_high})" followed by "*" or "†".
std::string format_cell(double mean, double sd, double ci_low, double ci_high,
                        stats::Marker marker = stats::Marker::kNone);
std::string format_cell(const stats::BootstrapSummary& summary,
                        stats::Marker marker = stats::Marker::kNone);

struct MetricRow {
  std::string task;   // key into the comparison results
  std::string label;  // e.g. "Abstract completion (Rouge-L)"
  std::string group;  // e.g. "Internal validation"
};

struct RenderedTable {
  std::string markdown;
  std::string csv;
  std::vector<std::string> flagged;  // cells rendered as missing
};

// Columns start with each task's reference model, then `models` in order.
// Throws Error(kMissingCell) when a (task, model) has no summary.
RenderedTable render_metric_table(std::span<const stats::TaskComparison> results,
                                  std::span<const MetricRow> rows,
                                  std::span<const std::string> models,
                                  const std::string& reference_model);

// Secondary metrics (BERT/BART score, macro-F1); absent values render "—".
struct SecondaryRow {
  std::string label;
  std::string metric;
  std::map<std::string, std::optional<double>> values;  // model -> value
};

RenderedTable render_secondary_table(std::span<const SecondaryRow> rows,
                                     std::span<const std::string> models);

// Display name of a rating task group.
std::string group_label(std::string_view task_group);

// One block per task group, rows Correctness/Completeness/Readability,
// one column per model (`models` order, or the report's when empty).
RenderedTable render_rating_table(const humaneval::AggregateReport& report,
                                  std::span<const std::string> models = {});

}  // namespace eyebench::report
