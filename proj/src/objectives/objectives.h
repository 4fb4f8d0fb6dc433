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

#ifndef FDKD_OBJECTIVES_OBJECTIVES_H_
#define FDKD_OBJECTIVES_OBJECTIVES_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "common/jsonl.h"
#include "textmodel/model.h"

namespace fdkd {

enum class PreferenceSource { kStudent, kTeacher, kOracle, kHuman };

std::string_view PreferenceSourceName(PreferenceSource s);
PreferenceSource ParsePreferenceSource(std::string_view s);

// The winner is always stored as `chosen`, so preference_prob >= 0.5.
struct PreferencePair {
  std::string id;
  TokenSequence input;
  TokenSequence chosen;
  TokenSequence rejected;
  double preference_prob = 1.0;
  PreferenceSource source = PreferenceSource::kOracle;
};

// Candidates ordered best-first; m >= 2.
struct RankedCandidates {
  std::string id;
  TokenSequence input;
  std::vector<TokenSequence> candidates;
};

struct SupervisedExample {
  TokenSequence input;
  TokenSequence target;
};

enum class LambdaMode { kPerInstance, kGlobal };

std::string_view LambdaModeName(LambdaMode m);
LambdaMode ParseLambdaMode(std::string_view s);  // throws kConfig

struct ObjectiveConfig {
  double beta = 0.1;
  LambdaMode lambda_mode = LambdaMode::kPerInstance;
  double multitask_weight = 1.0;  // gamma

  void Validate() const;
  OrderedJson ToJson() const;
  static ObjectiveConfig FromJson(const Json& j);
};

struct LossAndGrad {
  double loss = 0.0;
  Gradients grad;
};

// Token-mean cross entropy: -(sum of sequence logprobs) / (sum of |target|+1).
LossAndGrad MleLossAndGrad(const ModelParams& params, std::span<const SupervisedExample> batch);

// -ln sigma(beta * (chosen_log_ratio - rejected_log_ratio)), computed stably.
double DpoPairLoss(double chosen_log_ratio, double rejected_log_ratio, double beta);

// Reference-model log probabilities of (chosen, rejected) for each pair.
struct ReferenceLogprobs {
  double chosen = 0.0;
  double rejected = 0.0;
};

std::vector<ReferenceLogprobs> ComputeReferenceLogprobs(const ModelParams& reference,
                                                        std::span<const PreferencePair> pairs);

// Mean DPO loss over pairs. Only `params` receives gradient; the reference is
// frozen. Throws kEmptyBatch, or kNonFiniteLoss if any log probability is -inf.
LossAndGrad DpoLossAndGrad(const ModelParams& params, const ModelParams& reference,
                           std::span<const PreferencePair> pairs, double beta);
LossAndGrad DpoLossAndGrad(const ModelParams& params,
                           std::span<const ReferenceLogprobs> reference,
                           std::span<const PreferencePair> pairs, double beta);

// Mean output length (tokens, without <eos>) of the instance's candidates.
double InstanceLambda(const RankedCandidates& ranked);
double GlobalLambda(std::span<const RankedCandidates> ranked);

// Margin term (1/lambda) * ln 2 * (j - i) for 0-based ranks i < j.
double BrioMargin(size_t i, size_t j, double lambda);

// Sum over ranked pairs i<j of max(0, pbar(S_j) - pbar(S_i) + margin(i,j)),
// where pbar is the length-normalized sequence log probability.
LossAndGrad BrioLossAndGrad(const ModelParams& params, const RankedCandidates& ranked,
                            double lambda);

// mle(batch) + gamma * mean_k brio(ranked_k). lambdas[k] is used for ranked[k].
LossAndGrad MultitaskLossAndGrad(const ModelParams& params,
                                 std::span<const SupervisedExample> mle_batch,
                                 std::span<const RankedCandidates> ranked,
                                 std::span<const double> lambdas, double gamma);

// Plain SGD: params <- params - lr * grad.
void OptimizerStep(ModelParams* params, const Gradients& grad, double lr);

}  // namespace fdkd

#endif  // FDKD_OBJECTIVES_OBJECTIVES_H_
