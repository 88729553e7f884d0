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

// Bootstrap summaries, the two-sided Wilcoxon rank-sum test and Bonferroni
// correction.

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eyebench/common.hpp"

namespace eyebench::stats {

struct BootstrapConfig {
  std::size_t sample_size = 30;
  std::size_t repetitions = 100;
  std::uint64_t seed = 0;
  double ci_level = 0.95;

  // Throws Error(kConfigInvalid) for zero sizes or ci_level outside (0, 1).
  void validate() const;
};

struct BootstrapSummary {
  double mean = 0.0;
  double sd = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::vector<double> replicate_means;
};

// repetitions x sample_size indices into [0, population), drawn with
// replacement from Rng(cfg.seed).
std::vector<std::vector<std::size_t>> resample_indices(std::size_t population,
                                                       const BootstrapConfig& cfg);

BootstrapSummary bootstrap(std::span<const double> scores, const BootstrapConfig& cfg);
BootstrapSummary bootstrap_with(std::span<const double> scores,
                                const std::vector<std::vector<std::size_t>>& indices,
                                double ci_level);
// Mean, n-1 SD and percentile interval of precomputed replicate means.
BootstrapSummary summarize(std::vector<double> replicate_means, double ci_level);

// Linear interpolation between order statistics (h = (n-1)q).
double percentile(std::span<const double> sorted, double q);

// Midranks (1-based) of the pooled sample a ++ b.
std::vector<double> midranks(std::span<const double> pooled);

// Two-sided p. Exact enumeration when |a|+|b| <= 12 and there are no ties,
// otherwise the normal approximation below.
double ranksum_test(std::span<const double> a, std::span<const double> b);
// Normal approximation with tie-corrected variance and continuity correction.
double ranksum_normal_approx(std::span<const double> a, std::span<const double> b);
// Exact two-sided p from the null distribution of the rank sum; requires no
// ties and |a|+|b| <= 20.
double ranksum_exact(std::span<const double> a, std::span<const double> b);

inline constexpr std::size_t kExactRankSumLimit = 12;

double bonferroni(double p_raw, int m);

enum class Marker { kNone, kStar, kDagger };

// kDagger below 1e-4, kStar below 0.05; applied to adjusted p-values.
Marker marker_for(double p_adjusted);
std::string_view marker_symbol(Marker marker);  // "", "*", "†"
std::string_view marker_name(Marker marker);    // "none", "star", "dagger"
std::optional<Marker> parse_marker_name(std::string_view name);

struct ComparisonResult {
  std::string model_a;  // reference
  std::string model_b;
  double p_raw = 1.0;
  double p_adjusted = 1.0;
  int n_comparisons = 1;
  Marker marker = Marker::kNone;
};

struct ModelComparison {
  std::map<std::string, BootstrapSummary> summaries;
  std::vector<ComparisonResult> comparisons;  // one per non-reference model
};

// Every model is resampled with the same indices. m defaults to the number
// of non-reference models.
ModelComparison compare_models(const std::map<std::string, std::vector<double>>& scores,
                               const std::string& reference_model,
                               const BootstrapConfig& cfg,
                               std::optional<int> n_comparisons = std::nullopt);

struct TaskComparison {
  std::string task;
  std::string reference_model;
  ModelComparison result;
};

// task,model,mean,sd,ci_low,ci_high,p_raw,p_adjusted,marker. The reference
// row leaves the p columns empty.
std::string comparisons_csv(std::span<const TaskComparison> tasks);

}  // namespace eyebench::stats
