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

#ifndef FDKD_ANNOTSERVE_SERVER_H_
#define FDKD_ANNOTSERVE_SERVER_H_

#include <memory>
#include <string>

#include "annotserve/store.h"
#include "common/jsonl.h"

namespace fdkd {

struct AnnotServeConfig {
  std::string pairs;  // pairs JSONL
  std::string log;    // judgment log; created on first submission
  std::string host = "127.0.0.1";
  int port = 8080;    // 0 picks a free port
  uint64_t seed = 1;  // slot randomization
  std::string static_dir;  // optional UI files served at /

  void Validate() const;  // throws kConfig
  OrderedJson ToJson() const;
  static AnnotServeConfig FromJson(const Json& j);
};

// HTTP front end over an AnnotationStore:
//   GET  /api/tasks/next?annotator=<id>  -> {"task": {...} | null}
//   POST /api/judgments                  -> {"ok": true, "timestamp": ...}
//   GET  /api/export                     -> JSONL
//   GET  /api/health                     -> {"status": "ok", ...}
// Errors are {"error": <code name>, "detail": ...} with 400, 404 or 409.
class AnnotationServer {
 public:
  AnnotationServer(AnnotationStore* store, std::string static_dir = {});
  ~AnnotationServer();

  // Binds host:port (port 0 picks one) and returns the bound port. Throws kIo.
  int Bind(const std::string& host, int port);
  // Serves until Stop(); call after Bind.
  void Serve();
  void Stop();
  void WaitUntilReady() const;

 private:
  class Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace fdkd

#endif  // FDKD_ANNOTSERVE_SERVER_H_
