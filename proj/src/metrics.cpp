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

#include "eyebench/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <thread>

#include <httplib.h>

namespace eyebench::metrics {

namespace {

// Decodes one code point at `pos`; returns its byte length (1 for invalid
// bytes, reported as cp = 0xFFFD).
std::size_t decode(std::string_view s, std::size_t pos, char32_t& cp) {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  std::size_t len = 1;
  if (b0 < 0x80) {
    cp = b0;
    return 1;
  }
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    cp = 0xFFFD;
    return 1;
  }
  if (pos + len > s.size()) {
    cp = 0xFFFD;
    return 1;
  }
  for (std::size_t i = 1; i < len; ++i) {
    const auto b = static_cast<unsigned char>(s[pos + i]);
    if ((b & 0xC0) != 0x80) {
      cp = 0xFFFD;
      return 1;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  return len;
}

bool is_word_code_point(char32_t cp) {
  if (cp < 0x80) return is_ascii_alnum(static_cast<char>(cp));
  if (cp == 0xFFFD) return false;
  if (cp <= 0xBF) return false;  // Latin-1 controls, NBSP, symbols
  if (cp == 0xD7 || cp == 0xF7) return false;
  if (cp >= 0x2000 && cp <= 0x206F) return false;  // general punctuation
  if (cp >= 0x3000 && cp <= 0x303F) return false;  // CJK punctuation
  return true;
}

double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

double harmonic(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

int letter_index(std::string_view letter) {
  if (letter.size() == 1 && letter[0] >= 'A' && letter[0] <= 'D') return letter[0] - 'A';
  return -1;
}

struct Endpoint {
  std::string origin;
  std::string base_path;
};

Endpoint split_endpoint(const std::string& url) {
  const std::size_t scheme = url.find("://");
  if (scheme == std::string::npos) {
    throw Error(ErrorCode::kScorerUnavailable, "malformed scorer endpoint '" + url + "'");
  }
  const std::size_t path = url.find('/', scheme + 3);
  Endpoint endpoint;
  endpoint.origin = url.substr(0, path);
  endpoint.base_path = path == std::string::npos ? "" : url.substr(path);
  while (!endpoint.base_path.empty() && endpoint.base_path.back() == '/') {
    endpoint.base_path.pop_back();
  }
  return endpoint;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (std::size_t pos = 0; pos < text.size();) {
    char32_t cp = 0;
    const std::size_t len = decode(text, pos, cp);
    if (is_word_code_point(cp)) {
      if (cp < 0x80) {
        const char c = static_cast<char>(cp);
        current.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c + 32) : c);
      } else {
        current.append(text.substr(pos, len));
      }
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
    pos += len;
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  if (a.empty() || b.empty()) return 0;
  if (b.size() > a.size()) std::swap(a, b);
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

RougeScore rouge_l_tokens(std::span<const std::string> candidate,
                          std::span<const std::string> reference) {
  RougeScore score;
  if (candidate.empty() || reference.empty()) return score;
  const double lcs = static_cast<double>(lcs_length(candidate, reference));
  score.precision = lcs / static_cast<double>(candidate.size());
  score.recall = lcs / static_cast<double>(reference.size());
  score.f = harmonic(score.precision, score.recall);
  return score;
}

RougeScore rouge_l(std::string_view candidate, std::string_view reference) {
  const auto c = tokenize(candidate);
  const auto r = tokenize(reference);
  return rouge_l_tokens(c, r);
}

ClassificationScore classify_scores(
    std::span<const extraction::ExtractedAnswer> predictions,
    std::span<const std::string> golds) {
  if (predictions.size() != golds.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                std::to_string(predictions.size()) + " predictions vs " +
                    std::to_string(golds.size()) + " golds");
  }
  std::array<double, 4> true_pos{}, predicted{}, actual{};
  ClassificationScore score;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    const int gold = letter_index(golds[i]);
    if (gold < 0) {
      throw Error(ErrorCode::kInvalidArgument, "gold label '" + golds[i] + "' not in A-D");
    }
    actual[gold] += 1;
    const auto& prediction = predictions[i];
    const int guess = prediction.parsed() ? letter_index(prediction.value) : -1;
    if (guess < 0) {
      ++score.n_unparseable;
      continue;
    }
    predicted[guess] += 1;
    if (guess == gold) {
      true_pos[gold] += 1;
      ++correct;
    }
  }
  score.accuracy = ratio(static_cast<double>(correct), static_cast<double>(golds.size()));
  double sum = 0.0;
  for (int k = 0; k < 4; ++k) {
    ClassMetrics m;
    m.precision = ratio(true_pos[k], predicted[k]);
    m.recall = ratio(true_pos[k], actual[k]);
    m.f1 = harmonic(m.precision, m.recall);
    sum += m.f1;
    score.per_class[std::string(1, static_cast<char>('A' + k))] = m;
  }
  score.macro_f1 = sum / 4.0;
  return score;
}

std::vector<double> correctness(std::span<const extraction::ExtractedAnswer> predictions,
                                std::span<const std::string> golds) {
  if (predictions.size() != golds.size()) {
    throw Error(ErrorCode::kLengthMismatch, "predictions and golds differ in length");
  }
  std::vector<double> out(golds.size(), 0.0);
  for (std::size_t i = 0; i < golds.size(); ++i) {
    if (predictions[i].parsed() && predictions[i].value == golds[i]) out[i] = 1.0;
  }
  return out;
}

// ---------------------------------------------------------------------------

ScorerClient::ScorerClient(std::string endpoint, int max_in_flight,
                           double timeout_seconds)
    : endpoint_(std::move(endpoint)),
      max_in_flight_(std::max(1, max_in_flight)),
      timeout_seconds_(timeout_seconds) {}

std::vector<NeuralScores> ScorerClient::score_batch(std::span<const ScorePair> pairs) const {
  const Endpoint endpoint = split_endpoint(endpoint_);
  json body = json::array();
  for (const auto& pair : pairs) {
    body.push_back({{"candidate", pair.candidate}, {"reference", pair.reference}});
  }
  httplib::Client client(endpoint.origin);
  const auto seconds = static_cast<time_t>(timeout_seconds_);
  client.set_connection_timeout(seconds, 0);
  client.set_read_timeout(seconds, 0);
  client.set_write_timeout(seconds, 0);
  auto result = client.Post(endpoint.base_path + "/score", body.dump(), "application/json");
  if (!result) {
    throw Error(ErrorCode::kScorerUnavailable,
                "scorer unreachable: " + httplib::to_string(result.error()));
  }
  if (result->status != 200) {
    throw Error(ErrorCode::kScorerUnavailable,
                "scorer returned status " + std::to_string(result->status));
  }
  json reply = json::parse(result->body, nullptr, false);
  if (!reply.is_array() || reply.size() != pairs.size()) {
    throw Error(ErrorCode::kScorerUnavailable, "scorer reply is not an aligned array");
  }
  std::vector<NeuralScores> out;
  out.reserve(pairs.size());
  for (const auto& item : reply) {
    if (!item.is_object() || !item.contains("bert_score") || !item.contains("bart_score") ||
        !item["bert_score"].is_number() || !item["bart_score"].is_number()) {
      throw Error(ErrorCode::kScorerUnavailable, "scorer reply item malformed");
    }
    NeuralScores scores{item["bert_score"].get<double>(), item["bart_score"].get<double>()};
    if (scores.bert_score < 0.0 || scores.bert_score > 1.0 || scores.bart_score > 0.0) {
      throw Error(ErrorCode::kScorerUnavailable, "scorer reply out of range");
    }
    out.push_back(scores);
  }
  return out;
}

std::vector<NeuralScores> ScorerClient::score(std::span<const ScorePair> pairs) const {
  std::vector<NeuralScores> out(pairs.size());
  if (pairs.empty()) return out;
  const std::size_t batches = (pairs.size() + kScorerBatchLimit - 1) / kScorerBatchLimit;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t b = next++; b < batches; b = next++) {
      {
        std::lock_guard lock(failure_mutex);
        if (failure) return;
      }
      const std::size_t begin = b * kScorerBatchLimit;
      const std::size_t count = std::min(kScorerBatchLimit, pairs.size() - begin);
      try {
        auto scores = score_batch(pairs.subspan(begin, count));
        std::copy(scores.begin(), scores.end(), out.begin() + begin);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t threads =
      std::min<std::size_t>(static_cast<std::size_t>(max_in_flight_), batches);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& thread : pool) thread.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::vector<NeuralScores> score_neural(std::span<const ScorePair> pairs,
                                       const std::string& scorer_endpoint) {
  if (pairs.empty()) return {};
  return ScorerClient(scorer_endpoint).score(pairs);
}

}  // namespace eyebench::metrics
