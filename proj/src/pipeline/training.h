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

#ifndef FDKD_PIPELINE_TRAINING_H_
#define FDKD_PIPELINE_TRAINING_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "critic/critic.h"
#include "evalkit/metrics.h"
#include "objectives/objectives.h"
#include "pairing/pairing.h"
#include "pipeline/datasets.h"
#include "textmodel/checkpoint.h"
#include "textmodel/decode.h"

namespace fdkd {

struct SgdConfig {
  double learning_rate = 0.5;
  size_t batch_size = 16;
  uint64_t seed = 1;
  // When > 0, a minibatch gradient whose L2 norm exceeds this is rescaled to
  // it before the step.
  double clip_norm = 0.0;
};

// Each epoch visits the data in an order shuffled with DeriveSeed(seed,
// {tag, epoch}), takes one SGD step per minibatch, then rounds the parameters
// to float32 so that a checkpoint written at the epoch boundary resumes
// bitwise. Returns the mean minibatch loss. Throws kNonFiniteLoss (leaving
// params at their value before the offending step) and kEmptyBatch.
double MleEpoch(ModelParams* params, std::span<const SupervisedExample> data,
                const SgdConfig& cfg, int epoch);
double DpoEpoch(ModelParams* params, std::span<const PreferencePair> pairs,
                std::span<const ReferenceLogprobs> reference, double beta, const SgdConfig& cfg,
                int epoch);
// mle_groups[k] holds the supervised examples paired with ranked[k].
double MultitaskEpoch(ModelParams* params, std::span<const RankedCandidates> ranked,
                      std::span<const double> lambdas,
                      std::span<const std::vector<SupervisedExample>> mle_groups, double gamma,
                      const SgdConfig& cfg, int epoch);

// Drops pairs whose chosen and rejected sequences are identical.
std::vector<PreferencePair> FilterDegeneratePairs(std::vector<PreferencePair> pairs);

struct CollectionConfig {
  size_t pool_size = 6;
  DecodeConfig sampling{DecodeMode::kNucleus, 1.0, 1.0, 1, 16, 0};
  PairFilterConfig filter;
  uint64_t seed = 1;
  size_t workers = 1;
};

struct CollectionResult {
  std::vector<PreferencePair> pairs;
  std::vector<Judgment> judgments;  // raw forward/swapped judgments
  size_t skipped_ties = 0;
  size_t skipped_no_pair = 0;
  size_t skipped_low_diversity = 0;
};

// For each input: sample a pool, pick the most diverse length-eligible pair,
// judge it in both orders, and keep it only when the judge is consistent.
// Pool seeds are DeriveSeed(cfg.seed, {round, index}); pair ids are
// "r<round>-<index>". Throws kEmptyPreferenceSet if nothing is kept.
CollectionResult CollectPreferences(const StudentModel& model,
                                    const std::vector<std::string>& inputs,
                                    const PairJudge& judge, PreferenceSource source, int round,
                                    const CollectionConfig& cfg);

struct RankingResult {
  std::vector<RankingRecord> rankings;
  size_t skipped = 0;
};

// Ranks two teacher outputs per input with a position-averaged judge;
// inputs with identical outputs or an inconsistent verdict are skipped.
RankingResult CollectTeacherRankings(const std::vector<std::string>& inputs,
                                     const Teacher& teacher, const PairJudge& judge,
                                     size_t workers);

// Beam search (top hypothesis) for every input.
std::vector<std::string> GenerateOutputs(const StudentModel& model,
                                         const std::vector<std::string>& inputs,
                                         const DecodeConfig& cfg);

// Position-averaged comparison of outputs_a[i] against outputs_b[i].
struct ComparisonResult {
  WtrReport report;
  std::vector<Judgment> judgments;
};
ComparisonResult CompareSystems(const std::vector<std::string>& inputs,
                                const std::vector<std::string>& outputs_a,
                                const std::vector<std::string>& outputs_b, const PairJudge& judge,
                                size_t workers, const std::string& id_prefix = "cmp");

}  // namespace fdkd

#endif  // FDKD_PIPELINE_TRAINING_H_
