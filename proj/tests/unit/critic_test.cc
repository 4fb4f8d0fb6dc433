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

#include <cmath>
#include <map>

#include "common/error.h"
#include "common/rng.h"
#include "critic/critic.h"
#include "gtest/gtest.h"

namespace fdkd {
namespace {

OracleSpec Spec() {
  OracleSpec s;
  for (int i = 0; i < 10; ++i) s.content.insert("c" + std::to_string(i));
  for (int i = 0; i < 6; ++i) s.style.insert("s" + std::to_string(i));
  return s;
}

TEST(OracleTest, MoreStyleWinsAtEqualContent) {
  OracleJudge judge(Spec());
  const std::string in = "c1 c2 c3 f0";
  // F1 = 1 for both; 2*1 + 0.5*2 = 3.0 vs 2*1 + 0.5*1 = 2.5; ratios 5/4, 4/4.
  EXPECT_DOUBLE_EQ(judge.spec().Score(in, "c1 c2 c3 s0 s1"), 3.0);
  EXPECT_DOUBLE_EQ(judge.spec().Score(in, "c1 c2 c3 s0"), 2.5);
  Judgment j = judge.Judge(in, "c1 c2 c3 s0 s1", "c1 c2 c3 s0");
  EXPECT_EQ(j.verdict, Verdict::kFirst);
  EXPECT_EQ(j.judge, "oracle");
}

TEST(OracleTest, ContentOutweighsThreeStyleTokens) {
  OracleJudge judge(Spec());
  const std::string in = "c1 c2 f0";
  EXPECT_DOUBLE_EQ(judge.spec().Score(in, "s0 s1 s2"), 1.5);  // 0 + 0.5*3
  EXPECT_DOUBLE_EQ(judge.spec().Score(in, "c1 c2"), 2.0);     // 2*1 + 0
  EXPECT_EQ(judge.Judge(in, "s0 s1 s2", "c1 c2").verdict, Verdict::kSecond);
}

TEST(OracleTest, PartialOverlapCapAndLengthPenalty) {
  const OracleSpec s = Spec();
  // content(I) = {c1,c2,c3,c4}, content(P) = {c1,c1,c5}: overlap 1, F1 = 2/7.
  // styles distinct {s0..s4} capped at 3; |P|=10, |I|=4, ratio 2.5 -> 0.25*0.5.
  const double expected = 2.0 * (2.0 / 7.0) + 0.5 * 3 - 0.25 * 0.5;
  EXPECT_NEAR(s.Score("c1 c2 c3 c4", "c1 c1 c5 s0 s1 s2 s3 s4 s4 f1"), expected, 1e-15);
}

TEST(OracleTest, IdenticalIsTieAndJudgeIsSymmetric) {
  OracleJudge judge(Spec());
  EXPECT_EQ(judge.Judge("c1 c2", "c1 s1", "c1 s1").verdict, Verdict::kTie);
  EXPECT_FALSE(judge.Judge("c1 c2", "c1 s1", "c1 s1").preference_prob.has_value());
  Rng rng(3);
  auto random_text = [&] {
    std::string s;
    const size_t n = 1 + rng.Below(8);
    for (size_t i = 0; i < n; ++i) {
      s += (i ? " " : "") + std::string(rng.Bernoulli(0.3) ? "s" : "c") +
           std::to_string(rng.Below(6));
    }
    return s;
  };
  for (int t = 0; t < 200; ++t) {
    const std::string in = random_text(), a = random_text(), b = random_text();
    AveragedJudgment avg = JudgePositionAveraged(judge, "p", in, a, b);
    const Verdict f = avg.forward.verdict, s = avg.swapped.verdict;
    if (f == Verdict::kTie) {
      EXPECT_EQ(s, Verdict::kTie);
    } else {
      EXPECT_NE(f, s);  // mirrored, never a positional disagreement
      EXPECT_NE(avg.winner, Winner::kTie);
    }
  }
}

TEST(OracleTest, RejectsOverlappingVocabularies) {
  OracleSpec s = Spec();
  s.style.insert("c1");
  EXPECT_THROW(OracleJudge{s}, Error);
}

ChatResult Answer(const std::string& text, std::vector<TopLogprob> top = {}) {
  ChatResult r;
  r.text = text;
  if (!top.empty()) {
    TokenLogprobs pos;
    pos.token = text.substr(0, 1);
    pos.logprob = top[0].logprob;
    pos.top = std::move(top);
    r.logprobs = std::vector<TokenLogprobs>{pos};
  }
  return r;
}

TEST(McpTest, ProbabilityFromLabelLogprobs) {
  Judgment j = McpJudge::Interpret(Answer("1", {{"1", std::log(0.7)}, {"2", std::log(0.2)}}));
  EXPECT_EQ(j.verdict, Verdict::kFirst);
  ASSERT_TRUE(j.preference_prob.has_value());
  EXPECT_NEAR(*j.preference_prob, 0.7 / 0.9, 1e-12);
}

TEST(McpTest, NoLogprobsMeansCertainty) {
  Judgment j = McpJudge::Interpret(Answer("2"));
  EXPECT_EQ(j.verdict, Verdict::kSecond);
  EXPECT_EQ(j.preference_prob, 1.0);
}

TEST(McpTest, ParsesFirstStandaloneLabel) {
  EXPECT_EQ(McpJudge::Interpret(Answer("Paraphrase 2 is funnier than 1.")).verdict,
            Verdict::kSecond);
  EXPECT_EQ(McpJudge::Interpret(Answer("\"1\"")).verdict, Verdict::kFirst);
  for (const char* bad : {"neither", "12 of them", "v2 and x1", ""}) {
    try {
      McpJudge::Interpret(Answer(bad));
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kUnparseableVerdict);
    }
  }
}

TEST(McpTest, IdenticalCandidatesSkipTheNetwork) {
  EndpointConfig cfg;
  cfg.base_url = "http://fixture.invalid/v1";
  cfg.api_key_env = "";
  auto fixture = std::make_shared<FixtureTransport>(std::vector<Json>{});
  McpJudge judge(std::make_shared<LlmClient>(cfg, fixture));
  Judgment j = judge.Judge("in", "same", "same");
  EXPECT_EQ(j.verdict, Verdict::kTie);
  EXPECT_EQ(fixture->requests_served(), 0u);
}

TEST(McpTest, JudgesThroughRecordedFixture) {
  EndpointConfig cfg;
  cfg.base_url = "http://fixture.invalid/v1";
  cfg.api_key_env = "";
  cfg.logprobs = true;
  const auto msgs = Render(McpTemplate(), {{"input", "i"}, {"p1", "a"}, {"p2", "b"}});
  Json lp = {{"content", Json::array({{{"token", "1"},
                                       {"logprob", std::log(0.7)},
                                       {"top_logprobs", Json::array({{{"token", "1"}, {"logprob", std::log(0.7)}},
                                                                     {{"token", "2"}, {"logprob", std::log(0.2)}}})}}})}};
  Json body = {{"choices", Json::array({{{"message", {{"role", "assistant"}, {"content", "1"}}},
                                         {"logprobs", lp}}})}};
  Json record = {{"request", LlmClient::BuildChatRequest(cfg, msgs)},
                 {"response", {{"status", 200}, {"body", body}}}};
  McpJudge judge(std::make_shared<LlmClient>(
      cfg, std::make_shared<FixtureTransport>(std::vector<Json>{record})));
  Judgment j = judge.Judge("i", "a", "b");
  EXPECT_EQ(j.verdict, Verdict::kFirst);
  EXPECT_NEAR(*j.preference_prob, 0.7 / 0.9, 1e-12);
}

class TableScorer : public SequenceScorer {
 public:
  explicit TableScorer(std::map<std::string, double> table) : table_(std::move(table)) {}
  double Score(const std::string&, const std::string& c) const override {
    ++calls_[c];
    return table_.at(c);
  }
  mutable std::map<std::string, int> calls_;

 private:
  std::map<std::string, double> table_;
};

TEST(ClozeTest, LowerPerplexityWins) {
  auto scorer = std::make_shared<TableScorer>(
      std::map<std::string, double>{{"p1", -5}, {"p2", -9}, {"p3", -5}});
  ClozeJudge judge(scorer);
  EXPECT_EQ(judge.Judge("i", "p1", "p2").verdict, Verdict::kFirst);
  EXPECT_EQ(judge.Judge("i", "p2", "p1").verdict, Verdict::kSecond);
  EXPECT_EQ(judge.Judge("i", "p1", "p3").verdict, Verdict::kTie);
}

TEST(ClozeTest, ModelScorerMatchesNormalizedSequenceLogprob) {
  auto model = std::make_shared<StudentModel>(StudentModel{
      Vocabulary({"a", "b", "c"}), ModelParams::RandomInit({7, 8, 8}, 11)});
  ModelScorer scorer(model);
  const double got = scorer.Score("a b", "c a");
  const double want = SequenceLogprob(model->params, model->vocab.Encode("a b"),
                                      model->vocab.Encode("c a"), true);
  EXPECT_EQ(got, want);
  // Scoring one candidate does not depend on its opponent.
  ClozeJudge judge(std::make_shared<ModelScorer>(model));
  AveragedJudgment x = JudgePositionAveraged(judge, "x", "a b", "c a", "b");
  AveragedJudgment y = JudgePositionAveraged(judge, "y", "a b", "b", "c a");
  EXPECT_EQ(x.winner == Winner::kP1, y.winner == Winner::kP2);
  EXPECT_NE(x.winner, Winner::kTie);
}

TEST(ClozeTest, EndpointScorerAveragesPromptLogprobs) {
  EndpointConfig cfg;
  cfg.base_url = "http://fixture.invalid/v1";
  cfg.api_key_env = "";
  const std::string prompt = "The funny paraphrase of x is y";
  Json req = {{"model", cfg.model}, {"prompt", prompt}, {"echo", true}, {"max_tokens", 0},
              {"logprobs", 1}};
  Json body = {{"choices", Json::array({{{"logprobs",
                                          {{"token_logprobs", {nullptr, -1.0, -2.0, -3.0}}}}}})}};
  EndpointScorer scorer(std::make_shared<LlmClient>(
      cfg, std::make_shared<FixtureTransport>(
               std::vector<Json>{{{"request", req}, {"response", {{"body", body}}}}})));
  EXPECT_DOUBLE_EQ(scorer.Score("x", "y"), -2.0);
}

// Always prefers whichever candidate is shown first.
class FirstSlotJudge : public PairJudge {
 public:
  Judgment Judge(const std::string&, const std::string&, const std::string&) const override {
    Judgment j;
    j.verdict = Verdict::kFirst;
    j.preference_prob = 1.0;
    return j;
  }
  std::string name() const override { return "first"; }
};

// Prefers the lexicographically smaller candidate wherever it is shown.
class ContentJudge : public PairJudge {
 public:
  Judgment Judge(const std::string&, const std::string& a, const std::string& b) const override {
    Judgment j;
    j.verdict = a < b ? Verdict::kFirst : Verdict::kSecond;
    return j;
  }
  std::string name() const override { return "content"; }
};

TEST(PositionAveragedTest, ConsistentVerdictsPickAWinner) {
  AveragedJudgment r = JudgePositionAveraged(ContentJudge(), "id7", "i", "a", "b");
  EXPECT_EQ(r.winner, Winner::kP1);
  EXPECT_EQ(r.forward.verdict, Verdict::kFirst);
  EXPECT_EQ(r.swapped.verdict, Verdict::kSecond);
  EXPECT_EQ(r.forward.presented_order, PresentedOrder::kForward);
  EXPECT_EQ(r.swapped.presented_order, PresentedOrder::kSwapped);
  EXPECT_EQ(r.swapped.pair_id, "id7");
  EXPECT_EQ(JudgePositionAveraged(ContentJudge(), "id", "i", "b", "a").winner, Winner::kP2);
}

TEST(PositionAveragedTest, PositionalDisagreementIsATie) {
  EXPECT_EQ(JudgePositionAveraged(FirstSlotJudge(), "id", "i", "a", "b").winner, Winner::kTie);
}

TEST(JudgmentTest, JsonRoundTrip) {
  Judgment j;
  j.pair_id = "q1";
  j.aspect = Aspect::kHumor;
  j.verdict = Verdict::kSecond;
  j.preference_prob = 0.75;
  j.presented_order = PresentedOrder::kSwapped;
  j.judge = "human:ann1";
  const OrderedJson js = j.ToJson();
  EXPECT_EQ(js.dump(),
            "{\"pair_id\":\"q1\",\"aspect\":\"humor\",\"verdict\":\"second\","
            "\"preference_prob\":0.75,\"presented_order\":\"swapped\",\"judge\":\"human:ann1\"}");
  Judgment back = Judgment::FromJson(Json::parse(js.dump()));
  EXPECT_EQ(back.ToJson(), js);
  EXPECT_THROW(ParseVerdict("maybe"), Error);
}

}  // namespace
}  // namespace fdkd
