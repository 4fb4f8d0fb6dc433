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

#ifndef FDKD_LLMCLIENT_LLM_CLIENT_H_
#define FDKD_LLMCLIENT_LLM_CLIENT_H_

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "common/jsonl.h"

namespace fdkd {

struct EndpointConfig {
  std::string base_url;  // empty: $DISTILL_API_BASE
  std::string model = "llama-2-70b-chat";
  std::string api_key_env = "DISTILL_API_KEY";  // empty: no Authorization header
  double timeout_seconds = 60.0;
  int max_retries = 3;
  double backoff_initial_ms = 500.0;
  double temperature = 0.8;
  double top_p = 1.0;
  int max_tokens = 128;
  bool logprobs = false;
  int top_logprobs = 5;
  int max_concurrency = 4;

  void Validate() const;
  OrderedJson ToJson() const;
  static EndpointConfig FromJson(const Json& j);
};

struct ChatMessage {
  std::string role;
  std::string content;
  bool operator==(const ChatMessage&) const = default;
};

struct TopLogprob {
  std::string token;
  double logprob = 0.0;
};

// One generated token with its most likely alternatives.
struct TokenLogprobs {
  std::string token;
  double logprob = 0.0;
  std::vector<TopLogprob> top;
};

struct ChatResult {
  std::string text;
  std::optional<std::vector<TokenLogprobs>> logprobs;  // present only if supplied
};

struct HttpResponse {
  int status = 0;
  std::string body;
  bool timed_out = false;
  std::string transport_error;  // non-empty when no HTTP response arrived
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse Post(const std::string& url, const std::string& body,
                            const std::map<std::string, std::string>& headers,
                            double timeout_seconds) = 0;
};

// cpp-httplib backed transport (http and https).
class HttpTransport : public Transport {
 public:
  HttpResponse Post(const std::string& url, const std::string& body,
                    const std::map<std::string, std::string>& headers,
                    double timeout_seconds) override;
};

// Replays recorded {request, response} JSONL records. Records are matched on
// the exact serialized request body; repeated identical requests consume the
// recorded responses in order and the last one repeats.
class FixtureTransport : public Transport {
 public:
  explicit FixtureTransport(const std::string& path);
  explicit FixtureTransport(const std::vector<Json>& records);

  HttpResponse Post(const std::string& url, const std::string& body,
                    const std::map<std::string, std::string>& headers,
                    double timeout_seconds) override;
  size_t requests_served() const { return served_; }

 private:
  void Load(const std::vector<Json>& records);

  std::mutex mu_;
  std::map<std::string, std::vector<HttpResponse>> responses_;
  std::map<std::string, size_t> cursor_;
  size_t served_ = 0;
};

// Forwards to another transport and appends each exchange to a JSONL file in
// the format FixtureTransport reads.
class RecordingTransport : public Transport {
 public:
  RecordingTransport(std::shared_ptr<Transport> inner, std::string path)
      : inner_(std::move(inner)), path_(std::move(path)) {}

  HttpResponse Post(const std::string& url, const std::string& body,
                    const std::map<std::string, std::string>& headers,
                    double timeout_seconds) override;

 private:
  std::shared_ptr<Transport> inner_;
  std::string path_;
  std::mutex mu_;
};

// OpenAI-compatible chat-completions client.
class LlmClient {
 public:
  using Sleeper = std::function<void(double milliseconds)>;

  LlmClient(EndpointConfig cfg, std::shared_ptr<Transport> transport,
            Sleeper sleeper = nullptr);

  // POST {base}/chat/completions; returns the first choice. Retries 5xx,
  // 429 and timeouts with exponential backoff. Throws kAuthError (401/403 or
  // unresolvable key, checked before any request), kTimeout, kRateLimited,
  // kTransport, kMalformedResponse.
  ChatResult ChatComplete(const std::vector<ChatMessage>& messages) const;

  // POST {base}/completions with echo=true, max_tokens=0; returns the
  // per-token log probabilities of the prompt itself (first token excluded).
  // Throws kLogprobsUnavailable when the endpoint does not supply them.
  std::vector<double> PromptLogprobs(const std::string& prompt) const;

  const EndpointConfig& config() const { return cfg_; }

  static Json BuildChatRequest(const EndpointConfig& cfg, const std::vector<ChatMessage>& messages);
  static ChatResult ParseChatResponse(const std::string& body);

 private:
  std::string ResolveKey() const;
  std::string PostWithRetry(const std::string& path, const Json& request) const;

  EndpointConfig cfg_;
  std::shared_ptr<Transport> transport_;
  Sleeper sleeper_;
};

}  // namespace fdkd

#endif  // FDKD_LLMCLIENT_LLM_CLIENT_H_
