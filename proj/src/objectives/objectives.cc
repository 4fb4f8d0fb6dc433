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

#include "objectives/objectives.h"

#include <cmath>

#include "common/error.h"

namespace fdkd {
namespace {

// sigma(-z), the derivative magnitude of -ln sigma(z).
double SigmoidOfNegative(double z) {
  if (z >= 0) {
    const double e = std::exp(-z);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(z));
}

void RequireFinite(double v, const char* what) {
  if (!std::isfinite(v)) Fail(ErrorCode::kNonFiniteLoss, what);
}

}  // namespace

std::string_view PreferenceSourceName(PreferenceSource s) {
  switch (s) {
    case PreferenceSource::kStudent: return "student";
    case PreferenceSource::kTeacher: return "teacher";
    case PreferenceSource::kOracle: return "oracle";
    case PreferenceSource::kHuman: return "human";
  }
  return "oracle";
}

PreferenceSource ParsePreferenceSource(std::string_view s) {
  if (s == "student") return PreferenceSource::kStudent;
  if (s == "teacher") return PreferenceSource::kTeacher;
  if (s == "oracle") return PreferenceSource::kOracle;
  if (s == "human") return PreferenceSource::kHuman;
  Fail(ErrorCode::kInvalidArgument, "unknown preference source '" + std::string(s) + "'");
}

std::string_view LambdaModeName(LambdaMode m) {
  return m == LambdaMode::kGlobal ? "global" : "per_instance";
}

LambdaMode ParseLambdaMode(std::string_view s) {
  if (s == "per_instance") return LambdaMode::kPerInstance;
  if (s == "global") return LambdaMode::kGlobal;
  Fail(ErrorCode::kConfig, "lambda_mode must be per_instance or global, got '" + std::string(s) + "'");
}

void ObjectiveConfig::Validate() const {
  if (!(beta > 0)) Fail(ErrorCode::kConfig, "objective.beta must be > 0");
  if (!(multitask_weight >= 0)) Fail(ErrorCode::kConfig, "objective.multitask_weight must be >= 0");
}

OrderedJson ObjectiveConfig::ToJson() const {
  OrderedJson j;
  j["beta"] = beta;
  j["lambda_mode"] = LambdaModeName(lambda_mode);
  j["multitask_weight"] = multitask_weight;
  return j;
}

ObjectiveConfig ObjectiveConfig::FromJson(const Json& j) {
  RequireKnownKeys(j, {"beta", "lambda_mode", "multitask_weight"}, "objective");
  ObjectiveConfig c;
  try {
    c.beta = j.value("beta", c.beta);
    if (j.contains("lambda_mode")) c.lambda_mode = ParseLambdaMode(j["lambda_mode"].get<std::string>());
    c.multitask_weight = j.value("multitask_weight", c.multitask_weight);
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kConfig, std::string("objective: ") + e.what());
  }
  c.Validate();
  return c;
}

LossAndGrad MleLossAndGrad(const ModelParams& params, std::span<const SupervisedExample> batch) {
  if (batch.empty()) Fail(ErrorCode::kEmptyBatch, "MLE batch");
  double tokens = 0.0;
  for (const auto& ex : batch) tokens += static_cast<double>(ex.target.size() + 1);
  LossAndGrad out{0.0, Gradients(params.dims())};
  double total = 0.0;
  for (const auto& ex : batch) {
    total += AccumulateSequenceLogprobGrad(params, ex.input, ex.target, -1.0 / tokens, &out.grad);
  }
  out.loss = -total / tokens;
  RequireFinite(out.loss, "MLE loss");
  return out;
}

double DpoPairLoss(double chosen_log_ratio, double rejected_log_ratio, double beta) {
  const double z = beta * (chosen_log_ratio - rejected_log_ratio);
  // -ln sigma(z) = ln(1 + e^{-z})
  if (z >= 0) return std::log1p(std::exp(-z));
  return -z + std::log1p(std::exp(z));
}

std::vector<ReferenceLogprobs> ComputeReferenceLogprobs(const ModelParams& reference,
                                                        std::span<const PreferencePair> pairs) {
  std::vector<ReferenceLogprobs> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    out.push_back({SequenceLogprob(reference, p.input, p.chosen),
                   SequenceLogprob(reference, p.input, p.rejected)});
  }
  return out;
}

LossAndGrad DpoLossAndGrad(const ModelParams& params, const ModelParams& reference,
                           std::span<const PreferencePair> pairs, double beta) {
  if (pairs.empty()) Fail(ErrorCode::kEmptyBatch, "DPO batch");
  const auto ref = ComputeReferenceLogprobs(reference, pairs);
  return DpoLossAndGrad(params, ref, pairs, beta);
}

LossAndGrad DpoLossAndGrad(const ModelParams& params,
                           std::span<const ReferenceLogprobs> reference,
                           std::span<const PreferencePair> pairs, double beta) {
  if (pairs.empty()) Fail(ErrorCode::kEmptyBatch, "DPO batch");
  if (reference.size() != pairs.size()) {
    Fail(ErrorCode::kInvalidArgument, "reference logprobs do not match pairs");
  }
  const double n = static_cast<double>(pairs.size());
  LossAndGrad out{0.0, Gradients(params.dims())};
  Gradients chosen_grad(params.dims());
  Gradients rejected_grad(params.dims());
  for (size_t k = 0; k < pairs.size(); ++k) {
    const PreferencePair& pair = pairs[k];
    RequireFinite(reference[k].chosen, "reference log p(chosen)");
    RequireFinite(reference[k].rejected, "reference log p(rejected)");
    chosen_grad.SetZero();
    rejected_grad.SetZero();
    const double lw = AccumulateSequenceLogprobGrad(params, pair.input, pair.chosen, 1.0,
                                                    &chosen_grad);
    const double ll = AccumulateSequenceLogprobGrad(params, pair.input, pair.rejected, 1.0,
                                                    &rejected_grad);
    RequireFinite(lw, "log p(chosen)");
    RequireFinite(ll, "log p(rejected)");
    const double chosen_ratio = lw - reference[k].chosen;
    const double rejected_ratio = ll - reference[k].rejected;
    out.loss += DpoPairLoss(chosen_ratio, rejected_ratio, beta);
    // d/dz [-ln sigma(z)] = -sigma(-z); z moves with +chosen and -rejected.
    const double coef = -SigmoidOfNegative(beta * (chosen_ratio - rejected_ratio)) * beta / n;
    out.grad.AddScaled(chosen_grad, coef);
    out.grad.AddScaled(rejected_grad, -coef);
  }
  out.loss /= n;
  RequireFinite(out.loss, "DPO loss");
  return out;
}

double InstanceLambda(const RankedCandidates& ranked) {
  if (ranked.candidates.empty()) Fail(ErrorCode::kEmptyRanking);
  double total = 0.0;
  for (const auto& c : ranked.candidates) total += static_cast<double>(c.size());
  return total / static_cast<double>(ranked.candidates.size());
}

double GlobalLambda(std::span<const RankedCandidates> ranked) {
  double total = 0.0;
  size_t count = 0;
  for (const auto& r : ranked) {
    for (const auto& c : r.candidates) {
      total += static_cast<double>(c.size());
      ++count;
    }
  }
  if (count == 0) Fail(ErrorCode::kEmptyRanking);
  return total / static_cast<double>(count);
}

double BrioMargin(size_t i, size_t j, double lambda) {
  return std::log(2.0) * static_cast<double>(j - i) / lambda;
}

LossAndGrad BrioLossAndGrad(const ModelParams& params, const RankedCandidates& ranked,
                            double lambda) {
  const size_t m = ranked.candidates.size();
  if (m < 2) Fail(ErrorCode::kEmptyRanking, "need at least 2 ranked candidates");
  if (!(lambda > 0)) Fail(ErrorCode::kInvalidArgument, "lambda must be > 0");
  std::vector<double> pbar(m);
  for (size_t k = 0; k < m; ++k) {
    pbar[k] = SequenceLogprob(params, ranked.input, ranked.candidates[k], true);
  }
  // Coefficient of each candidate's pbar in the active hinges.
  std::vector<double> coef(m, 0.0);
  LossAndGrad out{0.0, Gradients(params.dims())};
  for (size_t i = 0; i < m; ++i) {
    for (size_t j = i + 1; j < m; ++j) {
      const double term = pbar[j] - pbar[i] + BrioMargin(i, j, lambda);
      if (term > 0) {
        out.loss += term;
        coef[j] += 1.0;
        coef[i] -= 1.0;
      }
    }
  }
  for (size_t k = 0; k < m; ++k) {
    if (coef[k] == 0.0) continue;
    const auto& c = ranked.candidates[k];
    AccumulateSequenceLogprobGrad(params, ranked.input, c,
                                  coef[k] / static_cast<double>(c.size() + 1), &out.grad);
  }
  RequireFinite(out.loss, "BRIO loss");
  return out;
}

LossAndGrad MultitaskLossAndGrad(const ModelParams& params,
                                 std::span<const SupervisedExample> mle_batch,
                                 std::span<const RankedCandidates> ranked,
                                 std::span<const double> lambdas, double gamma) {
  if (ranked.empty()) Fail(ErrorCode::kEmptyRanking, "multitask batch has no rankings");
  if (lambdas.size() != ranked.size()) Fail(ErrorCode::kInvalidArgument, "one lambda per ranking");
  LossAndGrad out = MleLossAndGrad(params, mle_batch);
  if (gamma == 0.0) return out;
  const double w = gamma / static_cast<double>(ranked.size());
  for (size_t k = 0; k < ranked.size(); ++k) {
    LossAndGrad b = BrioLossAndGrad(params, ranked[k], lambdas[k]);
    out.loss += w * b.loss;
    out.grad.AddScaled(b.grad, w);
  }
  return out;
}

void OptimizerStep(ModelParams* params, const Gradients& grad, double lr) {
  if (!(params->dims() == grad.dims())) Fail(ErrorCode::kShapeMismatch, "gradient shape");
  params->AddScaled(grad, -lr);
}

}  // namespace fdkd
