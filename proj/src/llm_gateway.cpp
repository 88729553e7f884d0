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

#include "eyebench/llm_gateway.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <sstream>
#include <thread>

#include <httplib.h>

namespace eyebench::gateway {

namespace {

std::string utc_timestamp() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm parts{};
  gmtime_r(&now, &parts);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &parts);
  return buffer;
}

bool is_transient(int status) {
  return status == 0 || status == 408 || status == 409 || status == 429 ||
         status >= 500;
}

template <typename T>
T value_or(const json& object, const char* key, T fallback) {
  auto it = object.find(key);
  if (it == object.end() || it->is_null()) return fallback;
  return it->get<T>();
}

}  // namespace

BackendConfig BackendConfig::from_json(const json& value) {
  if (!value.is_object()) {
    throw Error(ErrorCode::kConfigInvalid, "backend entry must be an object");
  }
  BackendConfig config;
  try {
    config.model_id = value.at("model_id").get<std::string>();
    config.endpoint_url = value.at("endpoint_url").get<std::string>();
    config.auth_env_var = value_or<std::string>(value, "auth_env_var", "");
    config.max_retries = value_or<int>(value, "max_retries", config.max_retries);
    config.requests_per_minute =
        value_or<int>(value, "requests_per_minute", config.requests_per_minute);
    config.timeout_seconds =
        value_or<double>(value, "timeout_seconds", config.timeout_seconds);
    config.backoff_initial_ms =
        value_or<double>(value, "backoff_initial_ms", config.backoff_initial_ms);
    config.backoff_max_ms =
        value_or<double>(value, "backoff_max_ms", config.backoff_max_ms);
    const std::string style = value_or<std::string>(value, "api_style", "chat");
    if (style == "chat") {
      config.api_style = ApiStyle::kChat;
    } else if (style == "completions") {
      config.api_style = ApiStyle::kCompletions;
    } else {
      throw Error(ErrorCode::kConfigInvalid, "unknown api_style '" + style + "'");
    }
    if (auto it = value.find("default_params"); it != value.end()) {
      if (!it->is_object()) {
        throw Error(ErrorCode::kConfigInvalid, "default_params must be an object");
      }
      config.default_params = *it;
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfigInvalid, std::string("backend: ") + e.what());
  }
  if (config.model_id.empty() || config.endpoint_url.empty()) {
    throw Error(ErrorCode::kConfigInvalid, "backend needs model_id and endpoint_url");
  }
  if (config.requests_per_minute < 1) {
    throw Error(ErrorCode::kConfigInvalid, "requests_per_minute must be >= 1");
  }
  if (config.max_retries < 0 || config.timeout_seconds <= 0) {
    throw Error(ErrorCode::kConfigInvalid, "bad retry/timeout settings");
  }
  auto temperature = config.default_params.find("temperature");
  if (temperature == config.default_params.end()) {
    config.default_params["temperature"] = 0;
  } else if (!temperature->is_number() || temperature->get<double>() != 0.0) {
    throw Error(ErrorCode::kConfigInvalid,
                "default temperature must be 0; override per call instead");
  }
  return config;
}

json BackendConfig::to_json() const {
  return {{"model_id", model_id},
          {"endpoint_url", endpoint_url},
          {"auth_env_var", auth_env_var},
          {"max_retries", max_retries},
          {"requests_per_minute", requests_per_minute},
          {"timeout_seconds", timeout_seconds},
          {"backoff_initial_ms", backoff_initial_ms},
          {"backoff_max_ms", backoff_max_ms},
          {"api_style", api_style == ApiStyle::kChat ? "chat" : "completions"},
          {"default_params", default_params}};
}

json to_json(const RawResponse& response) {
  return {{"request_digest", response.request_digest},
          {"model_id", response.model_id},
          {"text", response.text},
          {"latency_ms", response.latency_ms},
          {"timestamp", response.timestamp}};
}

RawResponse raw_response_from_json(const json& value) {
  RawResponse response;
  response.request_digest = value.at("request_digest").get<std::string>();
  response.model_id = value.value("model_id", "");
  response.text = value.at("text").get<std::string>();
  response.latency_ms = value.value("latency_ms", 0.0);
  response.timestamp = value.value("timestamp", "");
  return response;
}

std::string request_digest(std::string_view model_id, std::string_view prompt,
                           const json& params) {
  json canonical = {{"model", model_id}, {"prompt", prompt}, {"params", params}};
  return sha256_hex(canonical.dump());
}

// ---------------------------------------------------------------------------

Clock::time_point SystemClock::now() { return std::chrono::steady_clock::now(); }

void SystemClock::sleep_for(duration d) {
  if (d > duration::zero()) std::this_thread::sleep_for(d);
}

Clock::time_point ManualClock::now() {
  std::lock_guard lock(mutex_);
  return current_;
}

void ManualClock::sleep_for(duration d) {
  std::lock_guard lock(mutex_);
  if (d > duration::zero()) current_ += d;
}

std::shared_ptr<Clock> system_clock() {
  static auto clock = std::make_shared<SystemClock>();
  return clock;
}

RateLimiter::RateLimiter(int requests_per_minute, std::shared_ptr<Clock> clock)
    : limit_(static_cast<std::size_t>(requests_per_minute)), clock_(std::move(clock)) {
  if (requests_per_minute < 1) {
    throw Error(ErrorCode::kInvalidArgument, "requests_per_minute must be >= 1");
  }
}

void RateLimiter::acquire() {
  constexpr auto kWindow = std::chrono::seconds(60);
  std::unique_lock lock(mutex_);
  while (true) {
    const auto now = clock_->now();
    while (!grants_.empty() && grants_.front() <= now - kWindow) {
      grants_.pop_front();
    }
    if (grants_.size() < limit_) {
      grants_.push_back(now);
      return;
    }
    const auto wait = grants_.front() + kWindow - now;
    lock.unlock();
    clock_->sleep_for(wait);
    lock.lock();
  }
}

// ---------------------------------------------------------------------------

HttpResponse HttpTransport::post(const HttpRequest& request) {
  const std::size_t scheme_end = request.url.find("://");
  if (scheme_end == std::string::npos) {
    return {0, "", "malformed url '" + request.url + "'"};
  }
  const std::size_t path_start = request.url.find('/', scheme_end + 3);
  const std::string origin = request.url.substr(0, path_start);
  const std::string path =
      path_start == std::string::npos ? "/" : request.url.substr(path_start);

  httplib::Client client(origin);
  const auto timeout = std::chrono::duration<double>(request.timeout_seconds);
  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto micros =
      std::chrono::duration_cast<std::chrono::microseconds>(timeout - seconds);
  client.set_connection_timeout(seconds.count(), micros.count());
  client.set_read_timeout(seconds.count(), micros.count());
  client.set_write_timeout(seconds.count(), micros.count());

  httplib::Headers headers;
  for (const auto& [key, value] : request.headers) headers.emplace(key, value);
  auto result = client.Post(path, headers, request.body, "application/json");
  if (!result) return {0, "", httplib::to_string(result.error())};
  return {result->status, result->body, ""};
}

std::string MockBackendTransport::reply(std::string_view profile,
                                        std::string_view model,
                                        std::string_view prompt) {
  std::string input(prompt);
  if (auto start = prompt.find("\nInput: "); start != std::string_view::npos) {
    auto end = prompt.rfind("\nOutput:");
    if (end == std::string_view::npos || end < start) end = prompt.size();
    input = std::string(prompt.substr(start + 8, end - start - 8));
  }
  const std::uint64_t hash =
      derive_seed(0, std::string(model) + "\n" + std::string(prompt));

  if (prompt.find("Please answer with A, B, C, or D only.") != std::string_view::npos) {
    const char letter = static_cast<char>('A' + hash % 4);
    std::string option;
    std::istringstream lines(input);
    for (std::string line; std::getline(lines, line);) {
      if (line.size() > 3 && line[0] == letter && line[1] == '.' && line[2] == ' ') {
        option = line.substr(3);
      }
    }
    switch ((hash >> 8) % 4) {
      case 0: return std::string(1, letter);
      case 1: return std::string(1, letter) + ". " + option;
      case 2: return std::string("The correct answer is ") + letter + ".";
      default: return std::string("Answer: (") + letter + ") " + option;
    }
  }
  if (profile == "echo") return input;

  std::vector<std::string> words;
  std::istringstream stream(input);
  for (std::string word; stream >> word;) words.push_back(word);
  if (words.empty()) return "";
  const std::size_t length = std::min<std::size_t>(words.size(), 4 + hash % 24);
  const std::size_t start = (hash >> 16) % (words.size() - length + 1);
  std::string out;
  for (std::size_t i = start; i < start + length; ++i) {
    if (!out.empty()) out.push_back(' ');
    out += words[i];
  }
  return out;
}

HttpResponse MockBackendTransport::post(const HttpRequest& request) {
  json body = json::parse(request.body, nullptr, false);
  if (body.is_discarded()) return {400, R"({"error":"bad json"})", ""};
  const std::string model = body.value("model", "");
  std::string prompt;
  if (body.contains("messages") && body["messages"].is_array() &&
      !body["messages"].empty()) {
    prompt = body["messages"].back().value("content", "");
  } else {
    prompt = body.value("prompt", "");
  }
  const std::string text = reply(profile_, model, prompt);
  json response = {
      {"object", "chat.completion"},
      {"model", model},
      {"choices",
       json::array({{{"index", 0},
                     {"message", {{"role", "assistant"}, {"content", text}}},
                     {"text", text},
                     {"finish_reason", "stop"}}})}};
  return {200, response.dump(), ""};
}

std::shared_ptr<Transport> make_transport(const std::string& endpoint_url) {
  constexpr std::string_view kMock = "mock://";
  if (endpoint_url.rfind(kMock, 0) == 0) {
    return std::make_shared<MockBackendTransport>(endpoint_url.substr(kMock.size()));
  }
  return std::make_shared<HttpTransport>();
}

// ---------------------------------------------------------------------------

ResponseCache::ResponseCache(std::filesystem::path directory)
    : directory_(std::move(directory)) {
  std::filesystem::create_directories(directory_);
}

std::filesystem::path ResponseCache::path_for(const std::string& digest) const {
  return directory_ / digest.substr(0, 2) / (digest + ".json");
}

std::optional<RawResponse> ResponseCache::get(const std::string& digest) const {
  const auto path = path_for(digest);
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return std::nullopt;
  json value = json::parse(read_file(path), nullptr, false);
  if (value.is_discarded()) return std::nullopt;
  try {
    RawResponse response = raw_response_from_json(value);
    if (response.request_digest != digest) return std::nullopt;
    response.cached = true;
    return response;
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

void ResponseCache::put(const RawResponse& response) {
  atomic_write_file(path_for(response.request_digest), to_json(response).dump());
}

// ---------------------------------------------------------------------------

Client::Client(BackendConfig config, std::shared_ptr<Transport> transport,
               std::shared_ptr<ResponseCache> cache, std::shared_ptr<Clock> clock,
               std::shared_ptr<RateLimiter> limiter)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      cache_(std::move(cache)),
      clock_(std::move(clock)),
      limiter_(std::move(limiter)) {
  if (!limiter_) {
    limiter_ = std::make_shared<RateLimiter>(config_.requests_per_minute, clock_);
  }
}

json Client::request_params(const CallOptions& options) const {
  json params = config_.default_params;
  params["temperature"] = options.temperature.value_or(0.0);
  return params;
}

RawResponse Client::complete(std::string_view prompt) {
  return complete(prompt, CallOptions{});
}

RawResponse Client::complete(std::string_view prompt, const CallOptions& options) {
  if (prompt.empty()) throw Error(ErrorCode::kInvalidArgument, "empty prompt");
  const json params = request_params(options);
  const std::string digest = request_digest(config_.model_id, prompt, params);
  if (cache_) {
    if (auto hit = cache_->get(digest)) return *hit;
  }

  const auto started = clock_->now();
  RawResponse response;
  response.text = call_backend(prompt, params);
  response.latency_ms =
      std::chrono::duration<double, std::milli>(clock_->now() - started).count();
  response.request_digest = digest;
  response.model_id = config_.model_id;
  response.timestamp = utc_timestamp();
  response.cached = false;
  if (cache_) cache_->put(response);
  return response;
}

std::string Client::call_backend(std::string_view prompt, const json& params) {
  HttpRequest request;
  request.url = config_.endpoint_url;
  request.timeout_seconds = config_.timeout_seconds;
  request.headers["Content-Type"] = "application/json";
  if (!config_.auth_env_var.empty()) {
    const char* secret = std::getenv(config_.auth_env_var.c_str());
    if (secret == nullptr || *secret == '\0') {
      throw Error(ErrorCode::kAuthMissing,
                  "environment variable " + config_.auth_env_var + " is not set");
    }
    request.headers["Authorization"] = std::string("Bearer ") + secret;
  }
  json body = params;
  body["model"] = config_.model_id;
  if (config_.api_style == ApiStyle::kChat) {
    body["messages"] = json::array({{{"role", "user"}, {"content", prompt}}});
  } else {
    body["prompt"] = prompt;
  }
  request.body = body.dump();

  HttpResponse last;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      const double delay = std::min(config_.backoff_max_ms,
                                    config_.backoff_initial_ms *
                                        std::pow(2.0, attempt - 1));
      clock_->sleep_for(std::chrono::duration_cast<Clock::duration>(
          std::chrono::duration<double, std::milli>(delay)));
    }
    limiter_->acquire();
    ++network_calls_;
    last = transport_->post(request);
    if (last.status == 200) {
      json reply = json::parse(last.body, nullptr, false);
      try {
        const json& choice = reply.at("choices").at(0);
        if (config_.api_style == ApiStyle::kChat) {
          return choice.at("message").at("content").get<std::string>();
        }
        return choice.at("text").get<std::string>();
      } catch (const json::exception&) {
        throw BackendError(200, "unparseable completion body: " + last.body);
      }
    }
    if (!is_transient(last.status)) break;
  }
  if (last.status == 429) {
    throw Error(ErrorCode::kRateLimitedExhausted,
                config_.model_id + ": still rate limited after " +
                    std::to_string(config_.max_retries) + " retries");
  }
  throw BackendError(last.status, last.status == 0 ? last.error : last.body);
}

std::vector<BatchEntry> Client::batch_complete(std::span<const std::string> prompts,
                                               int max_in_flight) {
  if (max_in_flight < 1) {
    throw Error(ErrorCode::kInvalidArgument, "max_in_flight must be >= 1");
  }
  std::vector<BatchEntry> results(prompts.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < prompts.size(); i = next++) {
      try {
        results[i].response = complete(prompts[i]);
      } catch (const Error& e) {
        results[i].error_code = e.code();
        results[i].error_message = e.what();
      }
    }
  };
  const std::size_t threads =
      std::min<std::size_t>(static_cast<std::size_t>(max_in_flight), prompts.size());
  if (threads <= 1) {
    worker();
    return results;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& thread : pool) thread.join();
  return results;
}

}  // namespace eyebench::gateway
