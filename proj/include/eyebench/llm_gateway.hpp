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

// Uniform completion client for chat-completions style backends.
//
// Every request is temperature 0 unless a call overrides it, goes through a
// per-backend sliding-window rate limiter, is retried with exponential
// backoff on transient failures, and is cached on disk by the content digest
// of (model, prompt, params). API keys are read from the environment only.

#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eyebench/common.hpp"

namespace eyebench::gateway {

enum class ApiStyle { kChat, kCompletions };

struct BackendConfig {
  std::string model_id;
  std::string endpoint_url;  // http(s)://... or mock://<profile>
  std::string auth_env_var;  // empty: no Authorization header
  int max_retries = 3;
  int requests_per_minute = 60;
  double timeout_seconds = 60.0;
  double backoff_initial_ms = 500.0;
  double backoff_max_ms = 30000.0;
  ApiStyle api_style = ApiStyle::kChat;
  // Extra request parameters; temperature is pinned to 0 here.
  json default_params = json{{"temperature", 0}};

  // Throws Error(kConfigInvalid) on missing keys, rpm < 1 or a non-zero
  // default temperature.
  static BackendConfig from_json(const json& value);
  json to_json() const;
};

struct RawResponse {
  std::string request_digest;
  std::string model_id;
  std::string text;
  double latency_ms = 0.0;
  bool cached = false;
  std::string timestamp;  // ISO-8601 UTC
};

json to_json(const RawResponse& response);
RawResponse raw_response_from_json(const json& value);

class BackendError : public Error {
 public:
  BackendError(int status, std::string body)
      : Error(ErrorCode::kBackendError,
              "status " + std::to_string(status) + ": " + body.substr(0, 512)),
        status_(status),
        body_(std::move(body)) {}

  int status() const noexcept { return status_; }
  const std::string& body() const noexcept { return body_; }

 private:
  int status_;
  std::string body_;
};

// Content digest of a request; a pure function of its arguments.
std::string request_digest(std::string_view model_id, std::string_view prompt,
                           const json& params);

// ---------------------------------------------------------------------------
// Time source, injectable so limiter/backoff tests need not sleep.

class Clock {
 public:
  using time_point = std::chrono::steady_clock::time_point;
  using duration = std::chrono::steady_clock::duration;

  virtual ~Clock() = default;
  virtual time_point now() = 0;
  virtual void sleep_for(duration d) = 0;
};

class SystemClock : public Clock {
 public:
  time_point now() override;
  void sleep_for(duration d) override;
};

// sleep_for advances the clock instead of blocking.
class ManualClock : public Clock {
 public:
  time_point now() override;
  void sleep_for(duration d) override;
  void advance(duration d) { sleep_for(d); }

 private:
  std::mutex mutex_;
  time_point current_{};
};

std::shared_ptr<Clock> system_clock();

// At most `requests_per_minute` grants in any 60-second window.
class RateLimiter {
 public:
  RateLimiter(int requests_per_minute, std::shared_ptr<Clock> clock);
  void acquire();

 private:
  std::size_t limit_;
  std::shared_ptr<Clock> clock_;
  std::mutex mutex_;
  std::deque<Clock::time_point> grants_;
};

// ---------------------------------------------------------------------------
// Transport.

struct HttpRequest {
  std::string url;
  std::string body;
  std::map<std::string, std::string> headers;
  double timeout_seconds = 60.0;
};

struct HttpResponse {
  int status = 0;  // 0: no response (connection failure, timeout)
  std::string body;
  std::string error;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse post(const HttpRequest& request) = 0;
};

// Plain HTTP(S) POST.
class HttpTransport : public Transport {
 public:
  HttpResponse post(const HttpRequest& request) override;
};

// Offline backend behind mock://<profile> URLs. Replies are deterministic
// functions of (model, prompt): "echo" returns the prompt's input section,
// any other profile returns a model-dependent window of it. Multiple-choice
// prompts get a model-dependent letter in one of several answer styles.
class MockBackendTransport : public Transport {
 public:
  explicit MockBackendTransport(std::string profile) : profile_(std::move(profile)) {}
  HttpResponse post(const HttpRequest& request) override;
  static std::string reply(std::string_view profile, std::string_view model,
                           std::string_view prompt);

 private:
  std::string profile_;
};

std::shared_ptr<Transport> make_transport(const std::string& endpoint_url);

// ---------------------------------------------------------------------------
// Content-addressed response cache: <dir>/<digest[0:2]>/<digest>.json.

class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path directory);
  std::optional<RawResponse> get(const std::string& digest) const;
  void put(const RawResponse& response);
  const std::filesystem::path& directory() const { return directory_; }

 private:
  std::filesystem::path path_for(const std::string& digest) const;
  std::filesystem::path directory_;
};

// ---------------------------------------------------------------------------

class CompletionSource {
 public:
  virtual ~CompletionSource() = default;
  virtual RawResponse complete(std::string_view prompt) = 0;
  virtual std::string model_id() const = 0;
};

struct CallOptions {
  std::optional<double> temperature;
};

struct BatchEntry {
  std::optional<RawResponse> response;
  std::optional<ErrorCode> error_code;
  std::string error_message;

  bool ok() const { return response.has_value(); }
};

class Client : public CompletionSource {
 public:
  // cache may be null (no caching). limiter defaults to a private one.
  Client(BackendConfig config, std::shared_ptr<Transport> transport,
         std::shared_ptr<ResponseCache> cache = nullptr,
         std::shared_ptr<Clock> clock = system_clock(),
         std::shared_ptr<RateLimiter> limiter = nullptr);

  RawResponse complete(std::string_view prompt) override;
  RawResponse complete(std::string_view prompt, const CallOptions& options);
  std::string model_id() const override { return config_.model_id; }

  // Results are index-aligned with `prompts`; failures become error
  // entries rather than aborting the batch.
  std::vector<BatchEntry> batch_complete(std::span<const std::string> prompts,
                                         int max_in_flight);

  const BackendConfig& config() const { return config_; }
  std::size_t network_calls() const { return network_calls_.load(); }

 private:
  json request_params(const CallOptions& options) const;
  std::string call_backend(std::string_view prompt, const json& params);

  BackendConfig config_;
  std::shared_ptr<Transport> transport_;
  std::shared_ptr<ResponseCache> cache_;
  std::shared_ptr<Clock> clock_;
  std::shared_ptr<RateLimiter> limiter_;
  std::atomic<std::size_t> network_calls_{0};
};

}  // namespace eyebench::gateway
