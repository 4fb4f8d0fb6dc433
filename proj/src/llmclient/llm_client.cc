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

#include "llmclient/llm_client.h"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "common/error.h"
#include "httplib.h"

namespace fdkd {
namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // starts with '/'
};

SplitUrl Split(const std::string& url) {
  const size_t scheme = url.find("://");
  if (scheme == std::string::npos) Fail(ErrorCode::kConfig, "base_url needs a scheme: " + url);
  const size_t slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

std::string TrimSlash(std::string s) {
  while (!s.empty() && s.back() == '/') s.pop_back();
  return s;
}

}  // namespace

void EndpointConfig::Validate() const {
  if (!(timeout_seconds > 0)) Fail(ErrorCode::kConfig, "timeout_seconds must be > 0");
  if (max_retries < 0) Fail(ErrorCode::kConfig, "max_retries must be >= 0");
  if (backoff_initial_ms < 0) Fail(ErrorCode::kConfig, "backoff_initial_ms must be >= 0");
  if (!(temperature >= 0)) Fail(ErrorCode::kConfig, "temperature must be >= 0");
  if (!(top_p > 0 && top_p <= 1)) Fail(ErrorCode::kConfig, "top_p must be in (0, 1]");
  if (max_tokens < 1) Fail(ErrorCode::kConfig, "max_tokens must be >= 1");
  if (top_logprobs < 0 || top_logprobs > 20) Fail(ErrorCode::kConfig, "top_logprobs must be in [0, 20]");
  if (max_concurrency < 1) Fail(ErrorCode::kConfig, "max_concurrency must be >= 1");
}

OrderedJson EndpointConfig::ToJson() const {
  OrderedJson j;
  j["base_url"] = base_url;
  j["model"] = model;
  j["api_key_env"] = api_key_env;
  j["timeout_seconds"] = timeout_seconds;
  j["max_retries"] = max_retries;
  j["backoff_initial_ms"] = backoff_initial_ms;
  j["temperature"] = temperature;
  j["top_p"] = top_p;
  j["max_tokens"] = max_tokens;
  j["logprobs"] = logprobs;
  j["top_logprobs"] = top_logprobs;
  j["max_concurrency"] = max_concurrency;
  return j;
}

EndpointConfig EndpointConfig::FromJson(const Json& j) {
  RequireKnownKeys(j,
                   {"base_url", "model", "api_key_env", "timeout_seconds", "max_retries",
                    "backoff_initial_ms", "temperature", "top_p", "max_tokens", "logprobs",
                    "top_logprobs", "max_concurrency"},
                   "endpoint");
  EndpointConfig c;
  try {
    c.base_url = j.value("base_url", c.base_url);
    c.model = j.value("model", c.model);
    c.api_key_env = j.value("api_key_env", c.api_key_env);
    c.timeout_seconds = j.value("timeout_seconds", c.timeout_seconds);
    c.max_retries = j.value("max_retries", c.max_retries);
    c.backoff_initial_ms = j.value("backoff_initial_ms", c.backoff_initial_ms);
    c.temperature = j.value("temperature", c.temperature);
    c.top_p = j.value("top_p", c.top_p);
    c.max_tokens = j.value("max_tokens", c.max_tokens);
    c.logprobs = j.value("logprobs", c.logprobs);
    c.top_logprobs = j.value("top_logprobs", c.top_logprobs);
    c.max_concurrency = j.value("max_concurrency", c.max_concurrency);
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kConfig, std::string("endpoint: ") + e.what());
  }
  c.Validate();
  return c;
}

HttpResponse HttpTransport::Post(const std::string& url, const std::string& body,
                                 const std::map<std::string, std::string>& headers,
                                 double timeout_seconds) {
  const SplitUrl u = Split(url);
  httplib::Client cli(u.origin);
  const auto sec = static_cast<time_t>(timeout_seconds);
  const auto usec = static_cast<time_t>((timeout_seconds - sec) * 1e6);
  cli.set_connection_timeout(sec, usec);
  cli.set_read_timeout(sec, usec);
  cli.set_write_timeout(sec, usec);
  httplib::Headers h;
  for (const auto& [k, v] : headers) h.emplace(k, v);
  auto res = cli.Post(u.path, h, body, "application/json");
  HttpResponse out;
  if (!res) {
    out.timed_out = res.error() == httplib::Error::Read || res.error() == httplib::Error::Write ||
                    res.error() == httplib::Error::ConnectionTimeout;
    out.transport_error = httplib::to_string(res.error());
    return out;
  }
  out.status = res->status;
  out.body = res->body;
  return out;
}

FixtureTransport::FixtureTransport(const std::string& path) { Load(ReadJsonl(path)); }

FixtureTransport::FixtureTransport(const std::vector<Json>& records) { Load(records); }

void FixtureTransport::Load(const std::vector<Json>& records) {
  for (const auto& r : records) {
    if (!r.contains("request") || !r.contains("response")) {
      Fail(ErrorCode::kIo, "fixture record needs request and response");
    }
    const Json& resp = r["response"];
    HttpResponse h;
    h.status = resp.value("status", 200);
    const Json& body = resp.contains("body") ? resp["body"] : Json(nullptr);
    h.body = body.is_string() ? body.get<std::string>() : body.dump();
    responses_[r["request"].dump()].push_back(std::move(h));
  }
}

HttpResponse FixtureTransport::Post(const std::string&, const std::string& body,
                                    const std::map<std::string, std::string>&, double) {
  std::string key;
  try {
    key = Json::parse(body).dump();
  } catch (const nlohmann::json::exception&) {
    key = body;
  }
  std::lock_guard<std::mutex> lock(mu_);
  auto it = responses_.find(key);
  if (it == responses_.end()) {
    Fail(ErrorCode::kFixtureMiss, "no recorded response for request " + key.substr(0, 200));
  }
  size_t& cur = cursor_[key];
  const HttpResponse& r = it->second[std::min(cur, it->second.size() - 1)];
  ++cur;
  ++served_;
  return r;
}

HttpResponse RecordingTransport::Post(const std::string& url, const std::string& body,
                                      const std::map<std::string, std::string>& headers,
                                      double timeout_seconds) {
  HttpResponse r = inner_->Post(url, body, headers, timeout_seconds);
  if (!r.transport_error.empty()) return r;
  OrderedJson rec;
  rec["request"] = OrderedJson::parse(body);
  OrderedJson resp;
  resp["status"] = r.status;
  try {
    resp["body"] = OrderedJson::parse(r.body);
  } catch (const nlohmann::json::exception&) {
    resp["body"] = r.body;
  }
  rec["response"] = resp;
  std::lock_guard<std::mutex> lock(mu_);
  AppendJsonlLine(path_, rec);
  return r;
}

LlmClient::LlmClient(EndpointConfig cfg, std::shared_ptr<Transport> transport, Sleeper sleeper)
    : cfg_(std::move(cfg)), transport_(std::move(transport)), sleeper_(std::move(sleeper)) {
  cfg_.Validate();
  if (cfg_.base_url.empty()) {
    const char* env = std::getenv("DISTILL_API_BASE");
    if (env != nullptr) cfg_.base_url = env;
  }
  if (!transport_) transport_ = std::make_shared<HttpTransport>();
  if (!sleeper_) {
    sleeper_ = [](double ms) {
      std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(ms));
    };
  }
}

std::string LlmClient::ResolveKey() const {
  if (cfg_.api_key_env.empty()) return {};
  const char* key = std::getenv(cfg_.api_key_env.c_str());
  if (key == nullptr || *key == '\0') {
    Fail(ErrorCode::kAuthError, "environment variable " + cfg_.api_key_env + " is not set");
  }
  return key;
}

std::string LlmClient::PostWithRetry(const std::string& path, const Json& request) const {
  const std::string key = ResolveKey();
  if (cfg_.base_url.empty()) {
    Fail(ErrorCode::kConfig, "no endpoint base_url and DISTILL_API_BASE is unset");
  }
  const std::string url = TrimSlash(cfg_.base_url) + path;
  std::map<std::string, std::string> headers;
  if (!key.empty()) headers["Authorization"] = "Bearer " + key;
  const std::string body = request.dump();

  ErrorCode last = ErrorCode::kTransport;
  std::string last_detail;
  for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
    if (attempt > 0) sleeper_(cfg_.backoff_initial_ms * std::ldexp(1.0, attempt - 1));
    HttpResponse r = transport_->Post(url, body, headers, cfg_.timeout_seconds);
    if (!r.transport_error.empty()) {
      last = r.timed_out ? ErrorCode::kTimeout : ErrorCode::kTransport;
      last_detail = r.transport_error;
      continue;
    }
    if (r.status >= 200 && r.status < 300) return r.body;
    if (r.status == 401 || r.status == 403) {
      Fail(ErrorCode::kAuthError, "HTTP " + std::to_string(r.status));
    }
    last_detail = "HTTP " + std::to_string(r.status) + " from " + url;
    if (r.status == 429) {
      last = ErrorCode::kRateLimited;
    } else if (r.status >= 500) {
      last = ErrorCode::kTransport;
    } else {
      Fail(ErrorCode::kTransport, last_detail + ": " + r.body.substr(0, 200));
    }
  }
  Fail(last, last_detail + " after " + std::to_string(cfg_.max_retries) + " retries");
}

Json LlmClient::BuildChatRequest(const EndpointConfig& cfg,
                                 const std::vector<ChatMessage>& messages) {
  Json req;
  req["model"] = cfg.model;
  Json msgs = Json::array();
  for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  req["messages"] = msgs;
  req["temperature"] = cfg.temperature;
  req["top_p"] = cfg.top_p;
  req["max_tokens"] = cfg.max_tokens;
  if (cfg.logprobs) {
    req["logprobs"] = true;
    req["top_logprobs"] = cfg.top_logprobs;
  }
  return req;
}

ChatResult LlmClient::ParseChatResponse(const std::string& body) {
  ChatResult out;
  try {
    const Json j = Json::parse(body);
    const Json& choice = j.at("choices").at(0);
    out.text = choice.at("message").at("content").get<std::string>();
    if (choice.contains("logprobs") && choice["logprobs"].is_object() &&
        choice["logprobs"].contains("content") && choice["logprobs"]["content"].is_array()) {
      std::vector<TokenLogprobs> lps;
      for (const auto& t : choice["logprobs"]["content"]) {
        TokenLogprobs tl;
        tl.token = t.at("token").get<std::string>();
        tl.logprob = t.at("logprob").get<double>();
        if (t.contains("top_logprobs") && t["top_logprobs"].is_array()) {
          for (const auto& alt : t["top_logprobs"]) {
            tl.top.push_back({alt.at("token").get<std::string>(), alt.at("logprob").get<double>()});
          }
        }
        lps.push_back(std::move(tl));
      }
      out.logprobs = std::move(lps);
    }
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kMalformedResponse, e.what());
  }
  return out;
}

ChatResult LlmClient::ChatComplete(const std::vector<ChatMessage>& messages) const {
  return ParseChatResponse(PostWithRetry("/chat/completions", BuildChatRequest(cfg_, messages)));
}

std::vector<double> LlmClient::PromptLogprobs(const std::string& prompt) const {
  Json req;
  req["model"] = cfg_.model;
  req["prompt"] = prompt;
  req["echo"] = true;
  req["max_tokens"] = 0;
  req["logprobs"] = 1;
  const std::string body = PostWithRetry("/completions", req);
  std::vector<double> out;
  try {
    const Json j = Json::parse(body);
    const Json& choice = j.at("choices").at(0);
    if (!choice.contains("logprobs") || !choice["logprobs"].is_object() ||
        !choice["logprobs"].contains("token_logprobs")) {
      Fail(ErrorCode::kLogprobsUnavailable, "endpoint returned no prompt logprobs");
    }
    for (const auto& v : choice["logprobs"]["token_logprobs"]) {
      if (v.is_null()) continue;  // the first prompt token has no conditional
      out.push_back(v.get<double>());
    }
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kMalformedResponse, e.what());
  }
  if (out.empty()) Fail(ErrorCode::kLogprobsUnavailable, "empty prompt logprobs");
  return out;
}

}  // namespace fdkd
