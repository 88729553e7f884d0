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

#include "eyebench/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace eyebench::stats {

void BootstrapConfig::validate() const {
  if (sample_size == 0 || repetitions == 0) {
    throw Error(ErrorCode::kConfigInvalid, "bootstrap sizes must be positive");
  }
  if (!(ci_level > 0.0 && ci_level < 1.0)) {
    throw Error(ErrorCode::kConfigInvalid, "ci_level must be in (0, 1)");
  }
}

std::vector<std::vector<std::size_t>> resample_indices(std::size_t population,
                                                       const BootstrapConfig& cfg) {
  cfg.validate();
  if (population == 0) throw Error(ErrorCode::kEmptyScores, "nothing to resample");
  Rng rng(cfg.seed);
  std::vector<std::vector<std::size_t>> indices(cfg.repetitions);
  for (auto& replicate : indices) {
    replicate.resize(cfg.sample_size);
    for (auto& index : replicate) {
      index = static_cast<std::size_t>(rng.uniform_index(population));
    }
  }
  return indices;
}

double percentile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw Error(ErrorCode::kEmptyScores, "percentile of nothing");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

BootstrapSummary summarize(std::vector<double> replicate_means, double ci_level) {
  if (replicate_means.empty()) throw Error(ErrorCode::kEmptyScores, "no replicates");
  BootstrapSummary summary;
  std::vector<double> sorted = replicate_means;
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(replicate_means.size());
  if (sorted.front() == sorted.back()) {
    summary.mean = sorted.front();
    summary.sd = 0.0;
  } else {
    summary.mean = std::accumulate(replicate_means.begin(), replicate_means.end(), 0.0) / n;
    double squares = 0.0;
    for (double x : replicate_means) squares += (x - summary.mean) * (x - summary.mean);
    summary.sd = replicate_means.size() > 1 ? std::sqrt(squares / (n - 1.0)) : 0.0;
  }
  const double tail = (1.0 - ci_level) / 2.0;
  summary.ci_low = percentile(sorted, tail);
  summary.ci_high = percentile(sorted, 1.0 - tail);
  summary.replicate_means = std::move(replicate_means);
  return summary;
}

BootstrapSummary bootstrap_with(std::span<const double> scores,
                                const std::vector<std::vector<std::size_t>>& indices,
                                double ci_level) {
  if (scores.empty()) throw Error(ErrorCode::kEmptyScores, "no scores to bootstrap");
  std::vector<double> means;
  means.reserve(indices.size());
  for (const auto& replicate : indices) {
    // Running mean: exact for constant input, unlike sum / n.
    double mean = 0.0;
    std::size_t k = 0;
    for (std::size_t index : replicate) mean += (scores[index] - mean) / static_cast<double>(++k);
    means.push_back(mean);
  }
  return summarize(std::move(means), ci_level);
}

BootstrapSummary bootstrap(std::span<const double> scores, const BootstrapConfig& cfg) {
  if (scores.empty()) throw Error(ErrorCode::kEmptyScores, "no scores to bootstrap");
  return bootstrap_with(scores, resample_indices(scores.size(), cfg), cfg.ci_level);
}

std::vector<double> midranks(std::span<const double> pooled) {
  std::vector<std::size_t> order(pooled.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return pooled[x] < pooled[y]; });
  std::vector<double> ranks(pooled.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && pooled[order[j + 1]] == pooled[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

namespace {

struct RankSums {
  double w = 0.0;  // rank sum of a
  std::size_t n = 0;
  std::size_t m = 0;
  bool ties = false;
  double tie_term = 0.0;  // sum of t^3 - t over tie groups
};

RankSums rank_sums(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) {
    throw Error(ErrorCode::kEmptyInput, "rank-sum test needs two non-empty samples");
  }
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const auto ranks = midranks(pooled);
  RankSums sums;
  sums.n = a.size();
  sums.m = b.size();
  for (std::size_t i = 0; i < a.size(); ++i) sums.w += ranks[i];
  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    if (t > 1) {
      sums.ties = true;
      sums.tie_term += t * t * t - t;
    }
    i = j;
  }
  return sums;
}

}  // namespace

double ranksum_normal_approx(std::span<const double> a, std::span<const double> b) {
  const RankSums s = rank_sums(a, b);
  const double n = static_cast<double>(s.n);
  const double m = static_cast<double>(s.m);
  const double total = n + m;
  const double expected = n * (total + 1.0) / 2.0;
  const double variance =
      n * m / 12.0 * ((total + 1.0) - s.tie_term / (total * (total - 1.0)));
  if (!(variance > 0.0)) return 1.0;
  const double z = std::max(0.0, std::fabs(s.w - expected) - 0.5) / std::sqrt(variance);
  return std::clamp(std::erfc(z / std::sqrt(2.0)), 0.0, 1.0);
}

double ranksum_exact(std::span<const double> a, std::span<const double> b) {
  const RankSums s = rank_sums(a, b);
  const std::size_t total = s.n + s.m;
  if (s.ties || total > 20) {
    throw Error(ErrorCode::kInvalidArgument, "exact rank-sum needs untied small samples");
  }
  // ways[k][sum]: subsets of {1..N} with k elements and the given sum.
  const std::size_t max_sum = total * (total + 1) / 2;
  std::vector<std::vector<double>> ways(s.n + 1, std::vector<double>(max_sum + 1, 0.0));
  ways[0][0] = 1.0;
  for (std::size_t r = 1; r <= total; ++r) {
    for (std::size_t k = std::min(r, s.n); k >= 1; --k) {
      for (std::size_t sum = max_sum; sum >= r; --sum) {
        ways[k][sum] += ways[k - 1][sum - r];
      }
    }
  }
  const auto w = static_cast<std::size_t>(std::llround(s.w));
  double below = 0.0, above = 0.0, all = 0.0;
  for (std::size_t sum = 0; sum <= max_sum; ++sum) {
    const double count = ways[s.n][sum];
    all += count;
    if (sum <= w) below += count;
    if (sum >= w) above += count;
  }
  return std::clamp(2.0 * std::min(below, above) / all, 0.0, 1.0);
}

double ranksum_test(std::span<const double> a, std::span<const double> b) {
  const RankSums s = rank_sums(a, b);
  if (!s.ties && s.n + s.m <= kExactRankSumLimit) return ranksum_exact(a, b);
  return ranksum_normal_approx(a, b);
}

double bonferroni(double p_raw, int m) {
  if (m < 1) throw Error(ErrorCode::kInvalidArgument, "Bonferroni m must be >= 1");
  return std::min(1.0, p_raw * static_cast<double>(m));
}

Marker marker_for(double p_adjusted) {
  if (p_adjusted < 1e-4) return Marker::kDagger;
  if (p_adjusted < 0.05) return Marker::kStar;
  return Marker::kNone;
}

std::string_view marker_symbol(Marker marker) {
  switch (marker) {
    case Marker::kStar: return "*";
    case Marker::kDagger: return "†";
    default: return "";
  }
}

std::string_view marker_name(Marker marker) {
  switch (marker) {
    case Marker::kStar: return "star";
    case Marker::kDagger: return "dagger";
    default: return "none";
  }
}

std::optional<Marker> parse_marker_name(std::string_view name) {
  if (name == "none" || name.empty()) return Marker::kNone;
  if (name == "star") return Marker::kStar;
  if (name == "dagger") return Marker::kDagger;
  return std::nullopt;
}

ModelComparison compare_models(const std::map<std::string, std::vector<double>>& scores,
                               const std::string& reference_model,
                               const BootstrapConfig& cfg,
                               std::optional<int> n_comparisons) {
  auto reference = scores.find(reference_model);
  if (reference == scores.end()) {
    throw Error(ErrorCode::kMissingReference,
                "reference model '" + reference_model + "' has no scores");
  }
  const std::size_t population = reference->second.size();
  if (population == 0) throw Error(ErrorCode::kEmptyScores, "reference has no scores");
  for (const auto& [model, list] : scores) {
    if (list.size() != population) {
      throw Error(ErrorCode::kInstanceSetMismatch,
                  model + " has " + std::to_string(list.size()) + " scores, " +
                      reference_model + " has " + std::to_string(population));
    }
  }
  const int m = n_comparisons.value_or(static_cast<int>(scores.size()) - 1);
  const auto indices = resample_indices(population, cfg);

  ModelComparison out;
  for (const auto& [model, list] : scores) {
    out.summaries[model] = bootstrap_with(list, indices, cfg.ci_level);
  }
  const auto& ref_means = out.summaries[reference_model].replicate_means;
  for (const auto& [model, summary] : out.summaries) {
    if (model == reference_model) continue;
    ComparisonResult result;
    result.model_a = reference_model;
    result.model_b = model;
    result.p_raw = ranksum_test(ref_means, summary.replicate_means);
    result.n_comparisons = std::max(m, 1);
    result.p_adjusted = bonferroni(result.p_raw, result.n_comparisons);
    result.marker = marker_for(result.p_adjusted);
    out.comparisons.push_back(result);
  }
  return out;
}

std::string comparisons_csv(std::span<const TaskComparison> tasks) {
  std::ostringstream csv;
  csv << "task,model,mean,sd,ci_low,ci_high,p_raw,p_adjusted,marker\n";
  for (const auto& task : tasks) {
    auto row = [&](const std::string& model, const BootstrapSummary& s,
                   const ComparisonResult* c) {
      csv << task.task << ',' << model << ',' << format_fixed(s.mean, 6) << ','
          << format_fixed(s.sd, 6) << ',' << format_fixed(s.ci_low, 6) << ','
          << format_fixed(s.ci_high, 6) << ',';
      if (c) {
        char p_raw[32], p_adj[32];
        std::snprintf(p_raw, sizeof(p_raw), "%.6e", c->p_raw);
        std::snprintf(p_adj, sizeof(p_adj), "%.6e", c->p_adjusted);
        csv << p_raw << ',' << p_adj << ',' << marker_name(c->marker);
      } else {
        csv << ",,";
      }
      csv << '\n';
    };
    auto ref = task.result.summaries.find(task.reference_model);
    if (ref != task.result.summaries.end()) row(ref->first, ref->second, nullptr);
    for (const auto& comparison : task.result.comparisons) {
      row(comparison.model_b, task.result.summaries.at(comparison.model_b), &comparison);
    }
  }
  return csv.str();
}

}  // namespace eyebench::stats
