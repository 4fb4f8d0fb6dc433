// Copyright 2026 The fdkd Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "annotserve/server.h"

#include "common/error.h"
#include "httplib.h"

namespace fdkd {

void AnnotServeConfig::Validate() const {
  if (pairs.empty()) Fail(ErrorCode::kConfig, "annotserve.pairs is required");
  if (port < 0 || port > 65535) Fail(ErrorCode::kConfig, "annotserve.port out of range");
}

OrderedJson AnnotServeConfig::ToJson() const {
  OrderedJson j;
  j["pairs"] = pairs;
  j["log"] = log;
  j["host"] = host;
  j["port"] = port;
  j["seed"] = seed;
  j["static_dir"] = static_dir;
  return j;
}

AnnotServeConfig AnnotServeConfig::FromJson(const Json& j) {
  RequireKnownKeys(j, {"pairs", "log", "host", "port", "seed", "static_dir"}, "annotserve");
  AnnotServeConfig c;
  try {
    c.pairs = j.value("pairs", c.pairs);
    c.log = j.value("log", c.log);
    c.host = j.value("host", c.host);
    c.port = j.value("port", c.port);
    c.seed = j.value("seed", c.seed);
    c.static_dir = j.value("static_dir", c.static_dir);
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kConfig, std::string("annotserve: ") + e.what());
  }
  c.Validate();
  return c;
}

namespace {

int HttpStatus(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownTask: return 404;
    case ErrorCode::kDuplicateSubmission: return 409;
    case ErrorCode::kIo: return 500;
    default: return 400;
  }
}

void SendError(httplib::Response& res, ErrorCode code, const std::string& detail) {
  OrderedJson j;
  j["error"] = std::string(ErrorCodeName(code));
  j["detail"] = detail;
  res.status = HttpStatus(code);
  res.set_content(j.dump(), "application/json");
}

}  // namespace

class AnnotationServer::Impl {
 public:
  explicit Impl(AnnotationStore* store) : store_(store) {}

  void Routes(const std::string& static_dir) {
    server_.Get("/api/health", [this](const httplib::Request&, httplib::Response& res) {
      OrderedJson j;
      j["status"] = "ok";
      j["tasks"] = store_->task_count();
      j["judgments"] = store_->judgment_count();
      res.set_content(j.dump(), "application/json");
    });
    server_.Get("/api/tasks/next", [this](const httplib::Request& req, httplib::Response& res) {
      const std::string annotator = req.get_param_value("annotator");
      if (annotator.empty()) {
        SendError(res, ErrorCode::kInvalidArgument, "annotator query parameter is required");
        return;
      }
      OrderedJson j;
      auto task = store_->NextTask(annotator);
      j["task"] = task ? task->ToJson() : OrderedJson(nullptr);
      res.set_content(j.dump(), "application/json");
    });
    server_.Post("/api/judgments", [this](const httplib::Request& req, httplib::Response& res) {
      try {
        Json body;
        try {
          body = Json::parse(req.body);
        } catch (const Json::parse_error& e) {
          Fail(ErrorCode::kInvalidArgument, e.what());
        }
        HumanJudgmentRecord r = store_->Submit(HumanJudgmentRecord::FromClientJson(body));
        OrderedJson j;
        j["ok"] = true;
        j["task_id"] = r.task_id;
        j["timestamp"] = r.timestamp_ms;
        res.set_content(j.dump(), "application/json");
      } catch (const Error& e) {
        SendError(res, e.code(), e.detail());
      }
    });
    server_.Get("/api/export", [this](const httplib::Request&, httplib::Response& res) {
      std::string out;
      for (const auto& row : store_->Export()) out += row.dump() + "\n";
      res.set_content(out, "application/x-ndjson");
    });
    if (!static_dir.empty() && !server_.set_mount_point("/", static_dir)) {
      Fail(ErrorCode::kIo, "cannot serve " + static_dir);
    }
  }

  AnnotationStore* store_;
  httplib::Server server_;
};

AnnotationServer::AnnotationServer(AnnotationStore* store, std::string static_dir)
    : impl_(std::make_unique<Impl>(store)) {
  impl_->Routes(static_dir);
}

AnnotationServer::~AnnotationServer() { Stop(); }

int AnnotationServer::Bind(const std::string& host, int port) {
  if (port == 0) {
    const int p = impl_->server_.bind_to_any_port(host);
    if (p < 0) Fail(ErrorCode::kIo, "cannot bind " + host);
    return p;
  }
  if (!impl_->server_.bind_to_port(host, port)) {
    Fail(ErrorCode::kIo, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void AnnotationServer::Serve() { impl_->server_.listen_after_bind(); }

void AnnotationServer::Stop() {
  if (impl_) impl_->server_.stop();
}

void AnnotationServer::WaitUntilReady() const { impl_->server_.wait_until_ready(); }

}  // namespace fdkd
