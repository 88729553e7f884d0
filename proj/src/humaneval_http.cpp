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

#include <thread>

#include <httplib.h>

#include "eyebench/humaneval.hpp"

namespace eyebench::humaneval {

namespace {

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownSession:
    case ErrorCode::kUnknownRater:
      return 404;
    case ErrorCode::kAlreadyRated:
      return 409;
    case ErrorCode::kIo:
      return 500;
    default:
      return 400;
  }
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const Error& e) {
  send_json(res, status_for(e.code()),
            {{"error", error_code_name(e.code())}, {"message", e.what()}});
}

}  // namespace

struct Server::Impl {
  explicit Impl(SessionStore& s) : store(s) {}

  SessionStore& store;
  httplib::Server http;
  std::thread worker;
};

Server::Server(SessionStore& store) : impl_(std::make_unique<Impl>(store)) {
  auto& http = impl_->http;
  SessionStore& sessions = store;

  http.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                            {"Access-Control-Allow-Headers", "Content-Type"},
                            {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  http.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
  });

  http.Get(R"(/sessions/([^/]+)/next)",
           [&sessions](const httplib::Request& req, httplib::Response& res) {
             if (!req.has_param("rater")) {
               send_json(res, 400, {{"error", "InvalidArgument"},
                                    {"message", "missing rater parameter"}});
               return;
             }
             try {
               send_json(res, 200,
                         sessions.next_item(req.matches[1], req.get_param_value("rater")));
             } catch (const Error& e) {
               send_error(res, e);
             }
           });

  http.Post(R"(/sessions/([^/]+)/ratings)",
            [&sessions](const httplib::Request& req, httplib::Response& res) {
              json body = json::parse(req.body, nullptr, false);
              if (!body.is_object()) {
                send_json(res, 400, {{"error", "MalformedRecord"},
                                     {"message", "body must be a JSON object"}});
                return;
              }
              try {
                send_json(res, 201, sessions.submit(req.matches[1], rating_from_json(body)));
              } catch (const Error& e) {
                send_error(res, e);
              }
            });

  http.Get(R"(/sessions/([^/]+)/report)",
           [&sessions](const httplib::Request& req, httplib::Response& res) {
             try {
               send_json(res, 200, to_json(sessions.report(req.matches[1])));
             } catch (const Error& e) {
               send_error(res, e);
             }
           });

  http.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, {{"status", "ok"}});
  });
}

Server::~Server() { stop(); }

bool Server::listen(const std::string& host, int port) {
  return impl_->http.listen(host, port);
}

int Server::start_background(const std::string& host) {
  const int port = impl_->http.bind_to_any_port(host);
  if (port <= 0) throw Error(ErrorCode::kIo, "could not bind " + host);
  impl_->worker = std::thread([this] { impl_->http.listen_after_bind(); });
  impl_->http.wait_until_ready();
  return port;
}

void Server::stop() {
  if (!impl_) return;
  impl_->http.stop();
  if (impl_->worker.joinable()) impl_->worker.join();
}

}  // namespace eyebench::humaneval
