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

// Brute-force reference implementations and random generators shared by the
// unit tests and the acceptance binary. Nothing here calls into the library.

#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace eyebench::testing {

// Longest common subsequence by enumerating every subsequence of `a`.
// Exponential; keep a.size() small.
inline std::size_t lcs_bruteforce(const std::vector<std::string>& a,
                                  const std::vector<std::string>& b) {
  std::size_t best = 0;
  const std::size_t n = a.size();
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    const auto bits = static_cast<std::size_t>(__builtin_popcount(mask));
    if (bits <= best) continue;
    std::size_t j = 0;
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      if (!(mask & (1u << i))) continue;
      while (j < b.size() && b[j] != a[i]) ++j;
      if (j == b.size()) ok = false;
      else ++j;
    }
    if (ok) best = bits;
  }
  return best;
}

// Average ranks (1-based) with ties sharing their mean rank.
inline std::vector<double> midranks_reference(const std::vector<double>& pooled) {
  const std::size_t n = pooled.size();
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n; ++i) {
    double less = 0, equal = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (pooled[j] < pooled[i]) ++less;
      else if (pooled[j] == pooled[i]) ++equal;
    }
    ranks[i] = less + (equal + 1.0) / 2.0;
  }
  return ranks;
}

// Two-sided exact rank-sum p-value by enumerating every assignment of the
// pooled ranks to the first sample: 2 * min(P(W <= w), P(W >= w)), capped
// at 1. Handles ties through midranks. Needs a.size() + b.size() <= 20.
inline double ranksum_enumerate(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> pooled(a);
  pooled.insert(pooled.end(), b.begin(), b.end());
  const auto ranks = midranks_reference(pooled);
  const std::size_t n = a.size(), total = pooled.size();
  double observed = 0;
  for (std::size_t i = 0; i < n; ++i) observed += ranks[i];
  std::uint64_t le = 0, ge = 0, count = 0;
  for (std::uint32_t mask = 0; mask < (1u << total); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != n) continue;
    double w = 0;
    for (std::size_t i = 0; i < total; ++i) {
      if (mask & (1u << i)) w += ranks[i];
    }
    ++count;
    if (w <= observed + 1e-9) ++le;
    if (w >= observed - 1e-9) ++ge;
  }
  const double p = 2.0 * static_cast<double>(std::min(le, ge)) / static_cast<double>(count);
  return std::min(1.0, p);
}

// Random token sequence over a small vocabulary so matches are common.
inline std::vector<std::string> random_tokens(std::mt19937_64& rng, std::size_t max_len,
                                              std::size_t vocab = 6,
                                              std::size_t min_len = 0) {
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  std::uniform_int_distribution<std::size_t> word(0, vocab - 1);
  std::vector<std::string> out(len(rng));
  for (auto& token : out) token = "w" + std::to_string(word(rng));
  return out;
}

// Distinct continuous scores for a rank-sum instance.
inline std::vector<double> random_sample(std::mt19937_64& rng, std::size_t n, double shift = 0) {
  std::normal_distribution<double> dist(shift, 1.0);
  std::vector<double> out(n);
  for (auto& v : out) v = dist(rng);
  return out;
}

inline std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

}  // namespace eyebench::testing
