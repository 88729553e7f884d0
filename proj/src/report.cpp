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

#include "eyebench/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace eyebench::report {

namespace {

std::string csv_field(std::string_view value) {
  if (value.find_first_of(",\"\n") == std::string_view::npos) return std::string(value);
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void table_row(std::ostringstream& md, std::string_view first,
               const std::vector<std::string>& cells) {
  md << "| " << first;
  for (const auto& cell : cells) md << " | " << cell;
  md << " |\n";
}

void table_header(std::ostringstream& md, std::string_view first,
                  const std::vector<std::string>& columns) {
  table_row(md, first, columns);
  md << "|---";
  for (std::size_t i = 0; i < columns.size(); ++i) md << "|---";
  md << "|\n";
}

std::vector<std::string> blanks(std::size_t n) { return std::vector<std::string>(n, ""); }

std::vector<std::string> column_order(std::span<const std::string> models,
                                      const std::string& reference) {
  std::vector<std::string> columns;
  if (!reference.empty()) columns.push_back(reference);
  for (const auto& model : models) {
    if (model != reference) columns.push_back(model);
  }
  return columns;
}

}  // namespace

std::string fixed(double value, int decimals) {
  if (!std::isfinite(value)) return std::string(kMissing);
  const double scale = std::pow(10.0, decimals);
  double scaled = value * scale;
  scaled = std::round(scaled + std::copysign(1e-9 * std::max(1.0, std::fabs(scaled)), scaled));
  if (scaled == 0.0) scaled = 0.0;  // drops the sign of -0
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*f", decimals, scaled / scale);
  return buffer;
}

std::string format_cell(double mean, double sd, double ci_low, double ci_high,
                        stats::Marker marker) {
  return fixed(mean) + " ± " + fixed(sd) + " (" + fixed(ci_low) + ", " + fixed(ci_high) +
         ")" + std::string(stats::marker_symbol(marker));
}

std::string format_cell(const stats::BootstrapSummary& summary, stats::Marker marker) {
  return format_cell(summary.mean, summary.sd, summary.ci_low, summary.ci_high, marker);
}

RenderedTable render_metric_table(std::span<const stats::TaskComparison> results,
                                  std::span<const MetricRow> rows,
                                  std::span<const std::string> models,
                                  const std::string& reference_model) {
  const auto columns = column_order(models, reference_model);
  std::ostringstream md, csv;
  csv << "group,task,model,mean,sd,ci_low,ci_high,marker\n";
  table_header(md, "Task", columns);

  std::string current_group;
  for (const auto& row : rows) {
    auto found = std::find_if(results.begin(), results.end(),
                              [&](const auto& r) { return r.task == row.task; });
    if (found == results.end()) {
      throw Error(ErrorCode::kMissingCell, "no results for task '" + row.task + "'");
    }
    if (row.group != current_group) {
      current_group = row.group;
      table_row(md, "**" + row.group + "**", blanks(columns.size()));
    }
    std::vector<std::string> cells;
    for (const auto& model : columns) {
      auto summary = found->result.summaries.find(model);
      if (summary == found->result.summaries.end()) {
        throw Error(ErrorCode::kMissingCell,
                    "no summary for (" + row.task + ", " + model + ")");
      }
      stats::Marker marker = stats::Marker::kNone;
      for (const auto& comparison : found->result.comparisons) {
        if (comparison.model_b == model) marker = comparison.marker;
      }
      const auto& s = summary->second;
      cells.push_back(format_cell(s, marker));
      csv << csv_field(row.group) << ',' << csv_field(row.task) << ',' << csv_field(model)
          << ',' << format_fixed(s.mean, 6) << ',' << format_fixed(s.sd, 6) << ','
          << format_fixed(s.ci_low, 6) << ',' << format_fixed(s.ci_high, 6) << ','
          << stats::marker_name(marker) << '\n';
    }
    table_row(md, row.label, cells);
  }
  md << '\n' << kFootnote << '\n';
  return {md.str(), csv.str(), {}};
}

RenderedTable render_secondary_table(std::span<const SecondaryRow> rows,
                                     std::span<const std::string> models) {
  std::vector<std::string> columns(models.begin(), models.end());
  std::ostringstream md, csv;
  RenderedTable table;
  csv << "task,metric,model,value\n";
  table_header(md, "Task (metric)", columns);
  for (const auto& row : rows) {
    std::vector<std::string> cells;
    for (const auto& model : columns) {
      auto it = row.values.find(model);
      const bool present = it != row.values.end() && it->second.has_value();
      cells.push_back(present ? fixed(*it->second) : std::string(kMissing));
      if (!present) table.flagged.push_back(row.label + "/" + row.metric + "/" + model);
      csv << csv_field(row.label) << ',' << csv_field(row.metric) << ','
          << csv_field(model) << ',' << (present ? format_fixed(*it->second, 6) : "")
          << '\n';
    }
    table_row(md, row.label + " (" + row.metric + ")", cells);
  }
  table.markdown = md.str();
  table.csv = csv.str();
  return table;
}

std::string group_label(std::string_view task_group) {
  if (task_group == "ehr_summarization") return "Patient EHR summarization";
  if (task_group == "clinical_qa") return "Clinical QA";
  return std::string(task_group);
}

RenderedTable render_rating_table(const humaneval::AggregateReport& report,
                                  std::span<const std::string> models) {
  std::vector<std::string> columns(models.begin(), models.end());
  if (columns.empty()) columns = report.models;
  static constexpr std::array<std::string_view, 3> kLabels = {"Correctness", "Completeness",
                                                              "Readability"};
  RenderedTable table;
  std::ostringstream md, csv;
  csv << "task_group,dimension,model,mean,count\n";
  table_header(md, "", columns);
  for (const auto& group : report.task_groups) {
    table_row(md, "**" + group_label(group) + "**", blanks(columns.size()));
    for (std::size_t d = 0; d < 3; ++d) {
      std::vector<std::string> cells;
      for (const auto& model : columns) {
        auto it = report.cells.find({group, model});
        const humaneval::DimensionStats* stats =
            it == report.cells.end() ? nullptr : &it->second[d];
        if (!stats || stats->count == 0) {
          cells.emplace_back(kMissing);
          table.flagged.push_back(group + "/" + std::string(humaneval::kDimensions[d]) + "/" +
                                  model);
          csv << csv_field(group) << ',' << humaneval::kDimensions[d] << ','
              << csv_field(model) << ",,0\n";
          continue;
        }
        cells.push_back(fixed(stats->mean()));
        csv << csv_field(group) << ',' << humaneval::kDimensions[d] << ','
            << csv_field(model) << ',' << format_fixed(stats->mean(), 6) << ','
            << stats->count << '\n';
      }
      table_row(md, kLabels[d], cells);
    }
  }
  if (!report.complete) md << "\n_Incomplete: not every rating has been collected._\n";
  table.markdown = md.str();
  table.csv = csv.str();
  return table;
}

}  // namespace eyebench::report
