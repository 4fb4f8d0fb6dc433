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

#include "critic/critic.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

#include "common/error.h"
#include "textmodel/model.h"

namespace fdkd {

std::string AspectName(Aspect a) {
  switch (a) {
    case Aspect::kOverall: return "overall";
    case Aspect::kHumor: return "humor";
    case Aspect::kConsistency: return "consistency";
  }
  return "?";
}

Aspect ParseAspect(const std::string& s) {
  if (s == "overall") return Aspect::kOverall;
  if (s == "humor") return Aspect::kHumor;
  if (s == "consistency") return Aspect::kConsistency;
  Fail(ErrorCode::kInvalidArgument, "unknown aspect " + s);
}

std::string VerdictName(Verdict v) {
  switch (v) {
    case Verdict::kFirst: return "first";
    case Verdict::kSecond: return "second";
    case Verdict::kTie: return "tie";
  }
  return "?";
}

Verdict ParseVerdict(const std::string& s) {
  if (s == "first") return Verdict::kFirst;
  if (s == "second") return Verdict::kSecond;
  if (s == "tie") return Verdict::kTie;
  Fail(ErrorCode::kInvalidVerdict, s);
}

std::string OrderName(PresentedOrder o) {
  return o == PresentedOrder::kForward ? "forward" : "swapped";
}

PresentedOrder ParseOrder(const std::string& s) {
  if (s == "forward") return PresentedOrder::kForward;
  if (s == "swapped") return PresentedOrder::kSwapped;
  Fail(ErrorCode::kInvalidArgument, "unknown presented_order " + s);
}

OrderedJson Judgment::ToJson() const {
  OrderedJson j;
  j["pair_id"] = pair_id;
  j["aspect"] = AspectName(aspect);
  j["verdict"] = VerdictName(verdict);
  j["preference_prob"] = preference_prob ? OrderedJson(*preference_prob) : OrderedJson(nullptr);
  j["presented_order"] = OrderName(presented_order);
  j["judge"] = judge;
  return j;
}

Judgment Judgment::FromJson(const Json& j) {
  Judgment out;
  try {
    out.pair_id = j.at("pair_id").get<std::string>();
    out.aspect = ParseAspect(j.value("aspect", std::string("overall")));
    out.verdict = ParseVerdict(j.at("verdict").get<std::string>());
    if (j.contains("preference_prob") && !j["preference_prob"].is_null()) {
      out.preference_prob = j["preference_prob"].get<double>();
    }
    out.presented_order = ParseOrder(j.value("presented_order", std::string("forward")));
    out.judge = j.value("judge", std::string());
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kIo, std::string("judgment: ") + e.what());
  }
  if (out.verdict == Verdict::kTie) out.preference_prob.reset();
  return out;
}

std::vector<Judgment> ReadJudgments(const std::string& path) {
  std::vector<Judgment> out;
  for (const auto& row : ReadJsonl(path)) out.push_back(Judgment::FromJson(row));
  return out;
}

void WriteJudgments(const std::string& path, const std::vector<Judgment>& judgments) {
  std::vector<OrderedJson> rows;
  rows.reserve(judgments.size());
  for (const auto& j : judgments) rows.push_back(j.ToJson());
  WriteJsonl(path, rows);
}

void OracleSpec::Validate() const {
  for (const auto& s : style) {
    if (content.count(s)) Fail(ErrorCode::kConfig, "oracle style and content overlap on " + s);
  }
  if (w_f1 < 0 || w_style < 0 || w_len < 0 || style_cap < 0 || tie_epsilon < 0) {
    Fail(ErrorCode::kConfig, "oracle weights must be nonnegative");
  }
}

OrderedJson OracleSpec::ToJson() const {
  OrderedJson j;
  j["style"] = std::vector<std::string>(style.begin(), style.end());
  j["content"] = std::vector<std::string>(content.begin(), content.end());
  j["w_f1"] = w_f1;
  j["w_style"] = w_style;
  j["style_cap"] = style_cap;
  j["w_len"] = w_len;
  j["len_ratio_knee"] = len_ratio_knee;
  j["tie_epsilon"] = tie_epsilon;
  return j;
}

OracleSpec OracleSpec::FromJson(const Json& j) {
  RequireKnownKeys(j,
                   {"style", "content", "w_f1", "w_style", "style_cap", "w_len", "len_ratio_knee",
                    "tie_epsilon"},
                   "oracle");
  OracleSpec o;
  try {
    if (j.contains("style")) {
      for (const auto& s : j["style"]) o.style.insert(s.get<std::string>());
    }
    if (j.contains("content")) {
      for (const auto& s : j["content"]) o.content.insert(s.get<std::string>());
    }
    o.w_f1 = j.value("w_f1", o.w_f1);
    o.w_style = j.value("w_style", o.w_style);
    o.style_cap = j.value("style_cap", o.style_cap);
    o.w_len = j.value("w_len", o.w_len);
    o.len_ratio_knee = j.value("len_ratio_knee", o.len_ratio_knee);
    o.tie_epsilon = j.value("tie_epsilon", o.tie_epsilon);
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kConfig, std::string("oracle: ") + e.what());
  }
  o.Validate();
  return o;
}

double OracleSpec::Score(const std::string& input, const std::string& paraphrase) const {
  const auto in = SplitWhitespace(input);
  const auto out = SplitWhitespace(paraphrase);
  std::map<std::string, int> want, have;
  int n_want = 0, n_have = 0;
  for (const auto& t : in) {
    if (content.count(t)) ++want[t], ++n_want;
  }
  std::set<std::string> styles;
  for (const auto& t : out) {
    if (content.count(t)) ++have[t], ++n_have;
    if (style.count(t)) styles.insert(t);
  }
  double f1;
  if (n_want == 0 && n_have == 0) {
    f1 = 1.0;
  } else {
    int overlap = 0;
    for (const auto& [t, c] : have) {
      auto it = want.find(t);
      if (it != want.end()) overlap += std::min(c, it->second);
    }
    f1 = 2.0 * overlap / static_cast<double>(n_want + n_have);
  }
  const double n_style = std::min<double>(static_cast<double>(styles.size()), style_cap);
  const double ratio =
      in.empty() ? 0.0 : static_cast<double>(out.size()) / static_cast<double>(in.size());
  return w_f1 * f1 + w_style * n_style - w_len * std::max(0.0, ratio - len_ratio_knee);
}

OracleJudge::OracleJudge(OracleSpec spec) : spec_(std::move(spec)) { spec_.Validate(); }

Judgment OracleJudge::Judge(const std::string& input, const std::string& first,
                            const std::string& second) const {
  Judgment j;
  j.judge = name();
  const double a = spec_.Score(input, first);
  const double b = spec_.Score(input, second);
  if (std::fabs(a - b) < spec_.tie_epsilon) {
    j.verdict = Verdict::kTie;
  } else {
    j.verdict = a > b ? Verdict::kFirst : Verdict::kSecond;
    j.preference_prob = 1.0;
  }
  return j;
}

McpJudge::McpJudge(std::shared_ptr<const LlmClient> client, PromptTemplate tmpl)
    : client_(std::move(client)), tmpl_(std::move(tmpl)) {}

namespace {

bool IsWordChar(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

// First '1' or '2' with no letter or digit on either side.
char FirstStandaloneChoice(const std::string& text) {
  for (size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '1' && text[i] != '2') continue;
    const bool left_ok = i == 0 || !IsWordChar(text[i - 1]);
    const bool right_ok = i + 1 == text.size() || !IsWordChar(text[i + 1]);
    if (left_ok && right_ok) return text[i];
  }
  return 0;
}

std::string Trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

Judgment McpJudge::Interpret(const ChatResult& result) {
  const char choice = FirstStandaloneChoice(result.text);
  if (choice == 0) Fail(ErrorCode::kUnparseableVerdict, result.text.substr(0, 80));
  Judgment j;
  j.judge = "mcp";
  j.verdict = choice == '1' ? Verdict::kFirst : Verdict::kSecond;
  j.preference_prob = 1.0;
  if (result.logprobs) {
    // The first generated position whose token is the chosen label carries
    // the label distribution.
    for (const auto& pos : *result.logprobs) {
      if (Trim(pos.token) != std::string(1, choice)) continue;
      double p1 = 0.0, p2 = 0.0;
      bool saw_choice = false;
      for (const auto& alt : pos.top) {
        const std::string t = Trim(alt.token);
        if (t == "1") p1 += std::exp(alt.logprob);
        if (t == "2") p2 += std::exp(alt.logprob);
        if (t == std::string(1, choice)) saw_choice = true;
      }
      if (!saw_choice) {
        (choice == '1' ? p1 : p2) += std::exp(pos.logprob);
      }
      const double chosen = choice == '1' ? p1 : p2;
      if (p1 + p2 > 0) j.preference_prob = std::clamp(chosen / (p1 + p2), 0.5, 1.0);
      break;
    }
  }
  return j;
}

Judgment McpJudge::Judge(const std::string& input, const std::string& first,
                         const std::string& second) const {
  if (first == second) {
    Judgment j;
    j.judge = name();
    return j;
  }
  const auto messages = Render(tmpl_, {{"input", input}, {"p1", first}, {"p2", second}});
  return Interpret(client_->ChatComplete(messages));
}

double ModelScorer::Score(const std::string& input, const std::string& candidate) const {
  const TokenSequence in = model_->vocab.Encode(input);
  const TokenSequence out = model_->vocab.Encode(candidate);
  return SequenceLogprob(model_->params, in, out, /*normalized=*/true);
}

double EndpointScorer::Score(const std::string& input, const std::string& candidate) const {
  const std::vector<double> lps =
      client_->PromptLogprobs(RenderText(cloze_, {{"input", input}, {"p1", candidate}}));
  double sum = 0.0;
  for (double v : lps) sum += v;
  return sum / static_cast<double>(lps.size());
}

Judgment ClozeJudge::Judge(const std::string& input, const std::string& first,
                           const std::string& second) const {
  Judgment j;
  j.judge = name();
  if (first == second) return j;
  const double a = scorer_->Score(input, first);
  const double b = scorer_->Score(input, second);
  if (std::fabs(a - b) < tie_epsilon_) return j;
  j.verdict = a > b ? Verdict::kFirst : Verdict::kSecond;
  j.preference_prob = 1.0;
  return j;
}

AveragedJudgment JudgePositionAveraged(const PairJudge& judge, const std::string& pair_id,
                                       const std::string& input, const std::string& p1,
                                       const std::string& p2) {
  AveragedJudgment out;
  out.forward = judge.Judge(input, p1, p2);
  out.forward.pair_id = pair_id;
  out.forward.presented_order = PresentedOrder::kForward;
  out.swapped = judge.Judge(input, p2, p1);
  out.swapped.pair_id = pair_id;
  out.swapped.presented_order = PresentedOrder::kSwapped;

  const Verdict f = out.forward.verdict, s = out.swapped.verdict;
  if (f == Verdict::kFirst && s == Verdict::kSecond) {
    out.winner = Winner::kP1;
  } else if (f == Verdict::kSecond && s == Verdict::kFirst) {
    out.winner = Winner::kP2;
  } else {
    out.winner = Winner::kTie;
  }
  return out;
}

}  // namespace fdkd
