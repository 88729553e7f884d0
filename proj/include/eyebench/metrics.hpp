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

// Automatic metrics: Rouge-L, MCQ accuracy / macro-F1, and the client side
// of the neural scorer protocol.

#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "eyebench/common.hpp"
#include "eyebench/extraction.hpp"

namespace eyebench::metrics {

// Lowercased alphanumeric runs; everything else delimits. Non-ASCII code
// points count as word characters unless they are punctuation or symbols
// in the Latin-1 and General Punctuation blocks.
std::vector<std::string> tokenize(std::string_view text);

// Length of the longest common subsequence (two-row DP).
std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
};

RougeScore rouge_l(std::string_view candidate, std::string_view reference);
RougeScore rouge_l_tokens(std::span<const std::string> candidate,
                          std::span<const std::string> reference);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct ClassificationScore {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::map<std::string, ClassMetrics> per_class;  // "A".."D"
  std::size_t n_unparseable = 0;
};

// Unparseable predictions are wrong and belong to no predicted class.
ClassificationScore classify_scores(std::span<const extraction::ExtractedAnswer> predictions,
                                    std::span<const std::string> golds);

// Per-instance correctness (1.0 / 0.0) for bootstrapping accuracy.
std::vector<double> correctness(std::span<const extraction::ExtractedAnswer> predictions,
                                std::span<const std::string> golds);

struct NeuralScores {
  double bert_score = 0.0;  // [0, 1]
  double bart_score = 0.0;  // <= 0
};

struct ScorePair {
  std::string candidate;
  std::string reference;
};

inline constexpr std::size_t kScorerBatchLimit = 64;

// POST <endpoint>/score with [{candidate, reference}, ...] in batches of at
// most 64; expects an aligned [{bert_score, bart_score}, ...]. Any protocol
// violation raises Error(kScorerUnavailable).
class ScorerClient {
 public:
  explicit ScorerClient(std::string endpoint, int max_in_flight = 4,
                        double timeout_seconds = 120.0);

  std::vector<NeuralScores> score(std::span<const ScorePair> pairs) const;

 private:
  std::vector<NeuralScores> score_batch(std::span<const ScorePair> pairs) const;

  std::string endpoint_;
  int max_in_flight_;
  double timeout_seconds_;
};

std::vector<NeuralScores> score_neural(std::span<const ScorePair> pairs,
                                       const std::string& scorer_endpoint);

}  // namespace eyebench::metrics
