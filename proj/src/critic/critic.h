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

#ifndef FDKD_CRITIC_CRITIC_H_
#define FDKD_CRITIC_CRITIC_H_

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "common/jsonl.h"
#include "llmclient/llm_client.h"
#include "llmclient/prompt.h"
#include "textmodel/checkpoint.h"

namespace fdkd {

enum class Aspect { kOverall, kHumor, kConsistency };
enum class Verdict { kFirst, kSecond, kTie };
enum class PresentedOrder { kForward, kSwapped };

std::string AspectName(Aspect a);
Aspect ParseAspect(const std::string& s);
std::string VerdictName(Verdict v);
Verdict ParseVerdict(const std::string& s);  // throws kInvalidVerdict
std::string OrderName(PresentedOrder o);
PresentedOrder ParseOrder(const std::string& s);

// A verdict over the two candidates in the order they were shown to the judge.
struct Judgment {
  std::string pair_id;
  Aspect aspect = Aspect::kOverall;
  Verdict verdict = Verdict::kTie;
  std::optional<double> preference_prob;  // in [0.5, 1]; absent for ties
  PresentedOrder presented_order = PresentedOrder::kForward;
  std::string judge;  // "mcp", "cloze", "oracle" or "human:<id>"

  OrderedJson ToJson() const;
  static Judgment FromJson(const Json& j);
};

std::vector<Judgment> ReadJudgments(const std::string& path);
void WriteJudgments(const std::string& path, const std::vector<Judgment>& judgments);

class PairJudge {
 public:
  virtual ~PairJudge() = default;
  // Judges `first` against `second` as presented. pair_id and
  // presented_order are left for the caller to fill in.
  virtual Judgment Judge(const std::string& input, const std::string& first,
                         const std::string& second) const = 0;
  virtual std::string name() const = 0;
};

struct OracleSpec {
  std::set<std::string> style;
  std::set<std::string> content;
  double w_f1 = 2.0;
  double w_style = 0.5;
  int style_cap = 3;
  double w_len = 0.25;
  double len_ratio_knee = 2.0;
  double tie_epsilon = 1e-9;

  void Validate() const;
  OrderedJson ToJson() const;
  static OracleSpec FromJson(const Json& j);  // rejects unknown keys
  // w_f1*F1(content multisets) + w_style*min(#distinct style, cap)
  //   - w_len*max(0, |P|/|I| - knee), lengths in whitespace tokens.
  double Score(const std::string& input, const std::string& paraphrase) const;
};

class OracleJudge : public PairJudge {
 public:
  explicit OracleJudge(OracleSpec spec);
  Judgment Judge(const std::string& input, const std::string& first,
                 const std::string& second) const override;
  std::string name() const override { return "oracle"; }
  const OracleSpec& spec() const { return spec_; }

 private:
  OracleSpec spec_;
};

// Asks an LLM to pick "1" or "2" with both candidates in the prompt.
class McpJudge : public PairJudge {
 public:
  McpJudge(std::shared_ptr<const LlmClient> client, PromptTemplate tmpl = McpTemplate());
  Judgment Judge(const std::string& input, const std::string& first,
                 const std::string& second) const override;
  std::string name() const override { return "mcp"; }

  // Exposed for tests: verdict and probability from a raw completion.
  // Throws kUnparseableVerdict.
  static Judgment Interpret(const ChatResult& result);

 private:
  std::shared_ptr<const LlmClient> client_;
  PromptTemplate tmpl_;
};

// Length-normalized log probability of a candidate given the input. Higher
// means lower perplexity.
class SequenceScorer {
 public:
  virtual ~SequenceScorer() = default;
  virtual double Score(const std::string& input, const std::string& candidate) const = 0;
};

// Scores with a student checkpoint: mean log probability of the candidate
// tokens and <eos> conditioned on the input.
class ModelScorer : public SequenceScorer {
 public:
  explicit ModelScorer(std::shared_ptr<const StudentModel> model) : model_(std::move(model)) {}
  double Score(const std::string& input, const std::string& candidate) const override;

 private:
  std::shared_ptr<const StudentModel> model_;
};

// Scores the rendered cloze sentence with an endpoint that echoes prompt
// logprobs; mean over the returned token logprobs.
class EndpointScorer : public SequenceScorer {
 public:
  explicit EndpointScorer(std::shared_ptr<const LlmClient> client,
                          std::string cloze = ClozeTemplate())
      : client_(std::move(client)), cloze_(std::move(cloze)) {}
  double Score(const std::string& input, const std::string& candidate) const override;

 private:
  std::shared_ptr<const LlmClient> client_;
  std::string cloze_;
};

class ClozeJudge : public PairJudge {
 public:
  explicit ClozeJudge(std::shared_ptr<const SequenceScorer> scorer, double tie_epsilon = 1e-9)
      : scorer_(std::move(scorer)), tie_epsilon_(tie_epsilon) {}
  Judgment Judge(const std::string& input, const std::string& first,
                 const std::string& second) const override;
  std::string name() const override { return "cloze"; }

 private:
  std::shared_ptr<const SequenceScorer> scorer_;
  double tie_epsilon_;
};

enum class Winner { kP1, kP2, kTie };

struct AveragedJudgment {
  Winner winner = Winner::kTie;
  Judgment forward;  // p1 shown first
  Judgment swapped;  // p2 shown first
};

// Judges (p1, p2) then (p2, p1). A candidate wins only if both calls name it.
AveragedJudgment JudgePositionAveraged(const PairJudge& judge, const std::string& pair_id,
                                       const std::string& input, const std::string& p1,
                                       const std::string& p2);

}  // namespace fdkd

#endif  // FDKD_CRITIC_CRITIC_H_
