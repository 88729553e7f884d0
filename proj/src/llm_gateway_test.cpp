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

#include <doctest.h>

#include <cstdlib>

#include "temp_dir.hpp"

using namespace eyebench;
using namespace eyebench::gateway;
using namespace std::chrono_literals;

namespace {

json chat_body(const std::string& text) {
  return {{"choices", json::array({{{"message", {{"role", "assistant"}, {"content", text}}}}})}};
}

// Replays a fixed list of statuses, then succeeds. Records the clock time of
// every request.
class ScriptedTransport : public Transport {
 public:
  ScriptedTransport(std::vector<int> statuses, std::shared_ptr<Clock> clock)
      : statuses_(std::move(statuses)), clock_(std::move(clock)) {}

  HttpResponse post(const HttpRequest& request) override {
    std::lock_guard lock(mutex_);
    times.push_back(clock_->now());
    requests.push_back(request);
    const std::size_t i = times.size() - 1;
    if (i < statuses_.size() && statuses_[i] != 200) {
      return {statuses_[i], "{\"error\":\"scripted\"}", statuses_[i] ? "" : "refused"};
    }
    const json body = json::parse(request.body);
    const std::string prompt = body.contains("messages")
                                   ? body["messages"][0]["content"].get<std::string>()
                                   : body["prompt"].get<std::string>();
    return {200, chat_body("re: " + prompt).dump(), ""};
  }

  std::vector<Clock::time_point> times;
  std::vector<HttpRequest> requests;

 private:
  std::mutex mutex_;
  std::vector<int> statuses_;
  std::shared_ptr<Clock> clock_;
};

BackendConfig config(int retries = 3) {
  BackendConfig c;
  c.model_id = "test-model";
  c.endpoint_url = "http://unused";
  c.max_retries = retries;
  c.requests_per_minute = 1000;
  c.backoff_initial_ms = 500;
  c.backoff_max_ms = 1500;
  return c;
}

double ms_between(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double, std::milli>(b - a).count();
}

}  // namespace

TEST_CASE("backend config parsing") {
  const auto c = BackendConfig::from_json(
      {{"model_id", "gpt"}, {"endpoint_url", "mock://gpt"}, {"requests_per_minute", 10}});
  CHECK(c.model_id == "gpt");
  CHECK(c.requests_per_minute == 10);
  CHECK(c.default_params["temperature"] == 0);
  CHECK(BackendConfig::from_json(c.to_json()).to_json() == c.to_json());

  auto expect_invalid = [](const json& value) {
    try {
      BackendConfig::from_json(value);
      FAIL("expected ConfigInvalid");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kConfigInvalid);
    }
  };
  expect_invalid({{"endpoint_url", "x"}});
  expect_invalid({{"model_id", "m"}, {"endpoint_url", "x"}, {"requests_per_minute", 0}});
  expect_invalid({{"model_id", "m"}, {"endpoint_url", "x"}, {"api_style", "grpc"}});
  expect_invalid({{"model_id", "m"},
                  {"endpoint_url", "x"},
                  {"default_params", {{"temperature", 0.7}}}});
  expect_invalid(json::array());
}

TEST_CASE("request digests are pure and parameter sensitive") {
  const json params = {{"temperature", 0}};
  CHECK(request_digest("m", "p", params) == request_digest("m", "p", params));
  CHECK(request_digest("m", "p", params) != request_digest("m2", "p", params));
  CHECK(request_digest("m", "p", params) != request_digest("m", "p ", params));
  CHECK(request_digest("m", "p", params) !=
        request_digest("m", "p", json{{"temperature", 0.5}}));
}

TEST_CASE("rate limiter grants at most N per minute") {
  auto clock = std::make_shared<ManualClock>();
  RateLimiter limiter(3, clock);
  const auto start = clock->now();
  std::vector<Clock::time_point> grants;
  for (int i = 0; i < 7; ++i) {
    limiter.acquire();
    grants.push_back(clock->now());
  }
  // Grants 0-2 immediately, 3-5 at +60 s, 6 at +120 s.
  CHECK(grants[2] == start);
  CHECK(grants[3] - start == 60s);
  CHECK(grants[5] - start == 60s);
  CHECK(grants[6] - start == 120s);
  for (std::size_t i = 3; i < grants.size(); ++i) CHECK(grants[i] - grants[i - 3] >= 60s);
}

TEST_CASE("transient failures are retried with exponential backoff") {
  auto clock = std::make_shared<ManualClock>();
  auto transport = std::make_shared<ScriptedTransport>(std::vector<int>{503, 0, 429}, clock);
  Client client(config(), transport, nullptr, clock);
  const auto response = client.complete("hello");
  CHECK(response.text == "re: hello");
  CHECK(response.model_id == "test-model");
  CHECK_FALSE(response.cached);
  REQUIRE(transport->times.size() == 4);
  CHECK(ms_between(transport->times[0], transport->times[1]) == doctest::Approx(500));
  CHECK(ms_between(transport->times[1], transport->times[2]) == doctest::Approx(1000));
  // Capped at backoff_max_ms.
  CHECK(ms_between(transport->times[2], transport->times[3]) == doctest::Approx(1500));
  CHECK(client.network_calls() == 4);

  const json body = json::parse(transport->requests[0].body);
  CHECK(body["temperature"] == 0);
  CHECK(body["model"] == "test-model");
  CHECK(transport->requests[0].headers.count("Authorization") == 0);
}

TEST_CASE("retry exhaustion and permanent failures") {
  auto clock = std::make_shared<ManualClock>();
  {
    auto transport = std::make_shared<ScriptedTransport>(std::vector<int>(10, 429), clock);
    Client client(config(2), transport, nullptr, clock);
    try {
      client.complete("x");
      FAIL("expected RateLimitedExhausted");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kRateLimitedExhausted);
    }
    CHECK(transport->times.size() == 3);
  }
  {
    auto transport = std::make_shared<ScriptedTransport>(std::vector<int>{400}, clock);
    Client client(config(), transport, nullptr, clock);
    try {
      client.complete("x");
      FAIL("expected BackendError");
    } catch (const BackendError& e) {
      CHECK(e.status() == 400);
      CHECK(e.code() == ErrorCode::kBackendError);
    }
    CHECK(transport->times.size() == 1);
  }
  {
    auto transport = std::make_shared<ScriptedTransport>(std::vector<int>(10, 500), clock);
    Client client(config(1), transport, nullptr, clock);
    CHECK_THROWS_AS(client.complete("x"), BackendError);
    CHECK(transport->times.size() == 2);
  }
  {
    Client client(config(), std::make_shared<ScriptedTransport>(std::vector<int>{}, clock),
                  nullptr, clock);
    CHECK_THROWS_AS(client.complete(""), Error);
  }
}

TEST_CASE("API keys come from the environment") {
  auto clock = std::make_shared<ManualClock>();
  auto transport = std::make_shared<ScriptedTransport>(std::vector<int>{}, clock);
  auto c = config();
  c.auth_env_var = "EYEBENCH_TEST_KEY_UNSET";
  ::unsetenv("EYEBENCH_TEST_KEY_UNSET");
  Client missing(c, transport, nullptr, clock);
  try {
    missing.complete("x");
    FAIL("expected AuthMissing");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kAuthMissing);
  }
  CHECK(transport->times.empty());

  c.auth_env_var = "EYEBENCH_TEST_KEY_SET";
  ::setenv("EYEBENCH_TEST_KEY_SET", "sk-test", 1);
  Client present(c, transport, nullptr, clock);
  present.complete("x");
  CHECK(transport->requests.back().headers.at("Authorization") == "Bearer sk-test");
  ::unsetenv("EYEBENCH_TEST_KEY_SET");
}

TEST_CASE("completions API style") {
  auto clock = std::make_shared<ManualClock>();
  auto c = config();
  c.api_style = ApiStyle::kCompletions;
  auto mock = std::make_shared<MockBackendTransport>("echo");
  Client client(c, mock, nullptr, clock);
  CHECK_FALSE(client.complete("Task: t\nInput: hello there\nOutput:").text.empty());
}

TEST_CASE("responses are cached by content digest") {
  testing::TempDir dir;
  auto clock = std::make_shared<ManualClock>();
  auto transport = std::make_shared<ScriptedTransport>(std::vector<int>{}, clock);
  auto cache = std::make_shared<ResponseCache>(dir.path());
  Client client(config(), transport, cache, clock);
  const auto first = client.complete("cached prompt");
  const auto second = client.complete("cached prompt");
  CHECK(transport->times.size() == 1);
  CHECK(second.cached);
  CHECK(second.text == first.text);
  CHECK(second.request_digest == first.request_digest);
  // Different temperature is a different request.
  client.complete("cached prompt", CallOptions{0.7});
  CHECK(transport->times.size() == 2);
  // A fresh client sharing the directory hits the cache too.
  Client other(config(), transport, std::make_shared<ResponseCache>(dir.path()), clock);
  CHECK(other.complete("cached prompt").cached);
  CHECK(transport->times.size() == 2);
  CHECK(std::filesystem::exists(dir.path() / first.request_digest.substr(0, 2) /
                                (first.request_digest + ".json")));
}

TEST_CASE("batch completion keeps order and isolates failures") {
  auto clock = std::make_shared<ManualClock>();
  auto transport = std::make_shared<ScriptedTransport>(std::vector<int>{}, clock);
  Client client(config(), transport, nullptr, clock);
  std::vector<std::string> prompts;
  for (int i = 0; i < 20; ++i) prompts.push_back("p" + std::to_string(i));
  prompts[7] = "";
  const auto results = client.batch_complete(prompts, 4);
  REQUIRE(results.size() == 20);
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (i == 7) {
      CHECK_FALSE(results[i].ok());
      CHECK(results[i].error_code == ErrorCode::kInvalidArgument);
    } else {
      REQUIRE(results[i].ok());
      CHECK(results[i].response->text == "re: " + prompts[i]);
    }
  }
  CHECK_THROWS_AS(client.batch_complete(prompts, 0), Error);
}

TEST_CASE("mock backend replies are deterministic") {
  const std::string prompt =
      "Task: Answer the question.\nInput: Which drug treats infantile hemangioma? "
      "Propranolol is first line.\nOutput:";
  const auto a = MockBackendTransport::reply("leme", "leme-mock", prompt);
  CHECK(a == MockBackendTransport::reply("leme", "leme-mock", prompt));
  CHECK_FALSE(a.empty());
  const std::string mcq =
      "Task: Pick one.\nInput: Q?\nA. x\nB. y\nC. z\nD. w\nPlease answer with A, B, C, or D "
      "only.\nOutput:";
  const auto letter = MockBackendTransport::reply("gpt", "gpt-mock", mcq);
  CHECK(letter == MockBackendTransport::reply("gpt", "gpt-mock", mcq));
  CHECK(letter.find_first_of("ABCD") != std::string::npos);
  CHECK(MockBackendTransport::reply("echo", "any", prompt).find("Propranolol") !=
        std::string::npos);
  CHECK(make_transport("mock://leme") != nullptr);
  CHECK(make_transport("http://localhost:1") != nullptr);
}
