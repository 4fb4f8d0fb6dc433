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

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <thread>

#include "common/error.h"
#include "common/parallel.h"
#include "gtest/gtest.h"
#include "httplib.h"
#include "llmclient/llm_client.h"
#include "llmclient/prompt.h"

namespace fdkd {
namespace {

Json ChatBody(const std::string& text, const Json& logprobs = nullptr) {
  Json choice = {{"index", 0}, {"message", {{"role", "assistant"}, {"content", text}}}};
  if (!logprobs.is_null()) choice["logprobs"] = logprobs;
  return {{"id", "x"}, {"choices", Json::array({choice})}};
}

EndpointConfig LocalConfig(const std::string& base) {
  EndpointConfig cfg;
  cfg.base_url = base;
  cfg.api_key_env = "";
  cfg.backoff_initial_ms = 1;
  return cfg;
}

std::vector<ChatMessage> Hello() { return {{"user", "hello"}}; }

// Minimal OpenAI-style server on an ephemeral port.
class LocalServer {
 public:
  explicit LocalServer(httplib::Server::Handler handler) {
    server_.Post("/v1/chat/completions", handler);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LocalServer() {
    server_.stop();
    thread_.join();
  }
  std::string base() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

TEST(LlmClientTest, FixtureSurfacesTextAndLogprobs) {
  EndpointConfig cfg = LocalConfig("http://fixture.invalid/v1");
  cfg.logprobs = true;
  Json lp = {{"content",
              Json::array({{{"token", "2"},
                            {"logprob", -0.223},
                            {"top_logprobs", Json::array({{{"token", "2"}, {"logprob", -0.223}},
                                                          {{"token", "1"}, {"logprob", -1.7}}})}}})}};
  Json record = {{"request", LlmClient::BuildChatRequest(cfg, Hello())},
                 {"response", {{"status", 200}, {"body", ChatBody("2", lp)}}}};
  auto fixture = std::make_shared<FixtureTransport>(std::vector<Json>{record});
  LlmClient client(cfg, fixture);
  ChatResult r = client.ChatComplete(Hello());
  EXPECT_EQ(r.text, "2");
  ASSERT_TRUE(r.logprobs.has_value());
  ASSERT_EQ(r.logprobs->size(), 1u);
  EXPECT_EQ((*r.logprobs)[0].token, "2");
  EXPECT_DOUBLE_EQ((*r.logprobs)[0].logprob, -0.223);
  ASSERT_EQ((*r.logprobs)[0].top.size(), 2u);
  EXPECT_EQ((*r.logprobs)[0].top[1].token, "1");
  EXPECT_EQ(fixture->requests_served(), 1u);
}

TEST(LlmClientTest, NoLogprobsWhenEndpointOmitsThem) {
  ChatResult r = LlmClient::ParseChatResponse(ChatBody("hi").dump());
  EXPECT_EQ(r.text, "hi");
  EXPECT_FALSE(r.logprobs.has_value());
}

TEST(LlmClientTest, FixtureMissIsAnError) {
  auto fixture = std::make_shared<FixtureTransport>(std::vector<Json>{});
  LlmClient client(LocalConfig("http://fixture.invalid/v1"), fixture);
  try {
    client.ChatComplete(Hello());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFixtureMiss);
  }
}

TEST(LlmClientTest, RetriesServerErrorsThenSucceeds) {
  std::atomic<int> hits{0};
  LocalServer server([&](const httplib::Request&, httplib::Response& res) {
    if (hits++ < 2) {
      res.status = 500;
      res.set_content("boom", "text/plain");
      return;
    }
    res.set_content(ChatBody("ok").dump(), "application/json");
  });
  std::vector<double> sleeps;
  LlmClient client(LocalConfig(server.base()), nullptr,
                   [&](double ms) { sleeps.push_back(ms); });
  EXPECT_EQ(client.ChatComplete(Hello()).text, "ok");
  EXPECT_EQ(hits.load(), 3);
  ASSERT_EQ(sleeps.size(), 2u);
  EXPECT_DOUBLE_EQ(sleeps[1], 2 * sleeps[0]);  // exponential backoff
}

TEST(LlmClientTest, SendsBearerKeyFromEnvironment) {
  std::string auth;
  LocalServer server([&](const httplib::Request& req, httplib::Response& res) {
    auth = req.get_header_value("Authorization");
    res.set_content(ChatBody("ok").dump(), "application/json");
  });
  setenv("FDKD_TEST_KEY", "sekret", 1);
  EndpointConfig cfg = LocalConfig(server.base());
  cfg.api_key_env = "FDKD_TEST_KEY";
  LlmClient(cfg, nullptr).ChatComplete(Hello());
  EXPECT_EQ(auth, "Bearer sekret");
}

TEST(LlmClientTest, MissingKeyFailsBeforeAnyRequest) {
  std::atomic<int> hits{0};
  LocalServer server([&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.set_content(ChatBody("ok").dump(), "application/json");
  });
  unsetenv("FDKD_TEST_MISSING_KEY");
  EndpointConfig cfg = LocalConfig(server.base());
  cfg.api_key_env = "FDKD_TEST_MISSING_KEY";
  try {
    LlmClient(cfg, nullptr).ChatComplete(Hello());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAuthError);
  }
  EXPECT_EQ(hits.load(), 0);
}

TEST(LlmClientTest, StatusMapping) {
  std::atomic<int> hits{0};
  int status = 401;
  std::string body;
  LocalServer server([&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = status;
    res.set_content(body, "application/json");
  });
  LlmClient client(LocalConfig(server.base()), nullptr, [](double) {});
  auto code_of = [&] {
    try {
      client.ChatComplete(Hello());
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kOk;
  };
  EXPECT_EQ(code_of(), ErrorCode::kAuthError);
  EXPECT_EQ(hits.load(), 1);  // not retried

  hits = 0;
  status = 429;
  EXPECT_EQ(code_of(), ErrorCode::kRateLimited);
  EXPECT_EQ(hits.load(), 4);  // 1 + max_retries

  status = 200;
  body = "{\"choices\": []}";
  EXPECT_EQ(code_of(), ErrorCode::kMalformedResponse);
  body = "not json";
  EXPECT_EQ(code_of(), ErrorCode::kMalformedResponse);
}

TEST(LlmClientTest, SlowServerTimesOut) {
  LocalServer server([&](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(600));
    res.set_content(ChatBody("late").dump(), "application/json");
  });
  EndpointConfig cfg = LocalConfig(server.base());
  cfg.timeout_seconds = 0.2;
  cfg.max_retries = 0;
  try {
    LlmClient(cfg, nullptr).ChatComplete(Hello());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTimeout);
  }
}

TEST(LlmClientTest, RecordedExchangesReplayIdentically) {
  LocalServer server([&](const httplib::Request& req, httplib::Response& res) {
    const Json in = Json::parse(req.body);
    res.set_content(ChatBody("echo " + in["messages"][0]["content"].get<std::string>()).dump(),
                    "application/json");
  });
  const std::string path =
      (std::filesystem::temp_directory_path() / "fdkd_llm_record.jsonl").string();
  std::filesystem::remove(path);
  EndpointConfig cfg = LocalConfig(server.base());
  auto recorder = std::make_shared<RecordingTransport>(std::make_shared<HttpTransport>(), path);
  const std::string live = LlmClient(cfg, recorder).ChatComplete(Hello()).text;

  cfg.base_url = "http://fixture.invalid/v1";
  LlmClient replay(cfg, std::make_shared<FixtureTransport>(path));
  EXPECT_EQ(replay.ChatComplete(Hello()).text, live);
  EXPECT_EQ(live, "echo hello");
}

TEST(LlmClientTest, PromptLogprobsSkipFirstToken) {
  EndpointConfig cfg = LocalConfig("http://fixture.invalid/v1");
  Json req = {{"model", cfg.model}, {"prompt", "a b c"}, {"echo", true}, {"max_tokens", 0},
              {"logprobs", 1}};
  Json ok = {{"choices", Json::array({{{"text", "a b c"},
                                       {"logprobs", {{"tokens", {"a", " b", " c"}},
                                                     {"token_logprobs", {nullptr, -1.5, -0.5}}}}}})}};
  LlmClient client(cfg, std::make_shared<FixtureTransport>(std::vector<Json>{
                            {{"request", req}, {"response", {{"body", ok}}}}}));
  EXPECT_EQ(client.PromptLogprobs("a b c"), (std::vector<double>{-1.5, -0.5}));

  Json none = {{"choices", Json::array({{{"text", "a b c"}}})}};
  LlmClient bare(cfg, std::make_shared<FixtureTransport>(std::vector<Json>{
                          {{"request", req}, {"response", {{"body", none}}}}}));
  try {
    bare.PromptLogprobs("a b c");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kLogprobsUnavailable);
  }
}

TEST(EndpointConfigTest, ValidationAndJson) {
  EndpointConfig cfg;
  cfg.timeout_seconds = 0;
  EXPECT_THROW(cfg.Validate(), Error);
  cfg = EndpointConfig();
  cfg.max_retries = -1;
  EXPECT_THROW(cfg.Validate(), Error);
  cfg = EndpointConfig();
  cfg.model = "m";
  cfg.logprobs = true;
  const EndpointConfig back = EndpointConfig::FromJson(Json::parse(cfg.ToJson().dump()));
  EXPECT_EQ(back.model, "m");
  EXPECT_TRUE(back.logprobs);
  EXPECT_THROW(EndpointConfig::FromJson({{"modle", "x"}}), Error);
}

TEST(PromptTest, RendersBoundPlaceholders) {
  PromptTemplate t{"t", {{"user", "{input}"}}};
  EXPECT_EQ(Render(t, {{"input", "hi"}})[0].content, "hi");
  EXPECT_EQ(RenderText("{a}-{b}", {{"a", "{b}"}, {"b", "x"}}), "{b}-x");  // single pass
  EXPECT_EQ(RenderText("json {\"k\": 1} {}", {}), "json {\"k\": 1} {}");
}

TEST(PromptTest, UnboundPlaceholderNamesIt) {
  try {
    Render(McpTemplate(), {{"input", "a"}, {"p1", "b"}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnboundPlaceholder);
    EXPECT_EQ(e.detail(), "p2");
  }
}

TEST(PromptTest, McpShowsBothCandidatesInOrder) {
  EXPECT_EQ(McpTemplate().Placeholders(), (std::vector<std::string>{"input", "p1", "p2"}));
  const auto msgs = Render(McpTemplate(), {{"input", "IN"}, {"p1", "FIRST"}, {"p2", "SECOND"}});
  const std::string& user = msgs.back().content;
  const size_t a = user.find("1: FIRST"), b = user.find("2: SECOND");
  ASSERT_NE(a, std::string::npos);
  ASSERT_NE(b, std::string::npos);
  EXPECT_LT(a, b);
  EXPECT_EQ(user.find('{'), std::string::npos);
  EXPECT_EQ(GenerationTemplate().Placeholders(), (std::vector<std::string>{"input"}));
  const PromptTemplate back = PromptTemplate::FromJson(Json::parse(McpTemplate().ToJson().dump()));
  EXPECT_EQ(back.messages, McpTemplate().messages);
}

TEST(ParallelForTest, ResultsAreIndexOrderedAndFirstErrorWins) {
  std::vector<int> out(50);
  ParallelFor(out.size(), 4, [&](size_t i) { out[i] = static_cast<int>(i * i); });
  for (size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i], static_cast<int>(i * i));
  try {
    ParallelFor(20, 4, [](size_t i) {
      if (i == 7 || i == 13) Fail(ErrorCode::kTransport, std::to_string(i));
    });
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.detail(), "7");
  }
}

}  // namespace
}  // namespace fdkd
