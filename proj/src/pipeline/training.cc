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

#include "pipeline/training.h"

#include <cmath>
#include <numeric>

#include "common/error.h"
#include "common/parallel.h"
#include "common/rng.h"

namespace fdkd {
namespace {

constexpr uint64_t kMleTag = 1, kDpoTag = 2, kBrioTag = 3;

std::vector<size_t> EpochOrder(size_t n, uint64_t seed, uint64_t tag, int epoch) {
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  Rng rng(DeriveSeed(seed, {tag, static_cast<uint64_t>(epoch)}));
  rng.Shuffle(order);
  return order;
}

void Step(ModelParams* params, const LossAndGrad& lg, const SgdConfig& cfg) {
  if (!std::isfinite(lg.loss) || !lg.grad.AllFinite()) {
    Fail(ErrorCode::kNonFiniteLoss, "loss " + std::to_string(lg.loss));
  }
  double lr = cfg.learning_rate;
  if (cfg.clip_norm > 0) {
    double sq = 0.0;
    for (double g : lg.grad.flat()) sq += g * g;
    const double norm = std::sqrt(sq);
    if (norm > cfg.clip_norm) lr *= cfg.clip_norm / norm;
  }
  ModelParams next = *params;
  OptimizerStep(&next, lg.grad, lr);
  if (!next.AllFinite()) Fail(ErrorCode::kNonFiniteLoss, "parameters diverged");
  *params = std::move(next);
}

// Runs fn(batch_indices) over shuffled minibatches; returns the mean loss.
template <typename Fn>
double RunEpoch(ModelParams* params, size_t n, const SgdConfig& cfg, uint64_t tag, int epoch,
                Fn loss_and_grad) {
  if (n == 0) Fail(ErrorCode::kEmptyBatch, "empty training set");
  const auto order = EpochOrder(n, cfg.seed, tag, epoch);
  double total = 0.0;
  size_t batches = 0;
  std::vector<size_t> idx;
  for (size_t start = 0; start < n; start += cfg.batch_size) {
    idx.assign(order.begin() + start, order.begin() + std::min(n, start + cfg.batch_size));
    LossAndGrad lg = loss_and_grad(idx);
    Step(params, lg, cfg);
    total += lg.loss;
    ++batches;
  }
  params->RoundToFloat();
  return total / static_cast<double>(batches);
}

}  // namespace

double MleEpoch(ModelParams* params, std::span<const SupervisedExample> data,
                const SgdConfig& cfg, int epoch) {
  std::vector<SupervisedExample> batch;
  return RunEpoch(params, data.size(), cfg, kMleTag, epoch, [&](const std::vector<size_t>& idx) {
    batch.clear();
    for (size_t i : idx) batch.push_back(data[i]);
    return MleLossAndGrad(*params, batch);
  });
}

double DpoEpoch(ModelParams* params, std::span<const PreferencePair> pairs,
                std::span<const ReferenceLogprobs> reference, double beta, const SgdConfig& cfg,
                int epoch) {
  if (reference.size() != pairs.size()) {
    Fail(ErrorCode::kInvalidArgument, "one reference entry per preference pair");
  }
  std::vector<PreferencePair> batch;
  std::vector<ReferenceLogprobs> ref;
  return RunEpoch(params, pairs.size(), cfg, kDpoTag, epoch, [&](const std::vector<size_t>& idx) {
    batch.clear();
    ref.clear();
    for (size_t i : idx) {
      batch.push_back(pairs[i]);
      ref.push_back(reference[i]);
    }
    return DpoLossAndGrad(*params, ref, batch, beta);
  });
}

double MultitaskEpoch(ModelParams* params, std::span<const RankedCandidates> ranked,
                      std::span<const double> lambdas,
                      std::span<const std::vector<SupervisedExample>> mle_groups, double gamma,
                      const SgdConfig& cfg, int epoch) {
  if (lambdas.size() != ranked.size() || mle_groups.size() != ranked.size()) {
    Fail(ErrorCode::kInvalidArgument, "rankings, lambdas and MLE groups must align");
  }
  std::vector<RankedCandidates> rb;
  std::vector<double> lb;
  std::vector<SupervisedExample> mb;
  return RunEpoch(params, ranked.size(), cfg, kBrioTag, epoch, [&](const std::vector<size_t>& idx) {
    rb.clear();
    lb.clear();
    mb.clear();
    for (size_t i : idx) {
      rb.push_back(ranked[i]);
      lb.push_back(lambdas[i]);
      mb.insert(mb.end(), mle_groups[i].begin(), mle_groups[i].end());
    }
    return MultitaskLossAndGrad(*params, mb, rb, lb, gamma);
  });
}

std::vector<PreferencePair> FilterDegeneratePairs(std::vector<PreferencePair> pairs) {
  std::erase_if(pairs, [](const PreferencePair& p) { return p.chosen == p.rejected; });
  return pairs;
}

CollectionResult CollectPreferences(const StudentModel& model,
                                    const std::vector<std::string>& inputs,
                                    const PairJudge& judge, PreferenceSource source, int round,
                                    const CollectionConfig& cfg) {
  cfg.filter.Validate();
  struct Slot {
    enum { kKept, kTie, kNoPair, kLowDiversity } outcome = kTie;
    PreferencePair pair;
    Judgment forward, swapped;
  };
  std::vector<Slot> slots(inputs.size());
  ParallelFor(inputs.size(), cfg.workers, [&](size_t i) {
    Slot& s = slots[i];
    DecodeConfig sampling = cfg.sampling;
    sampling.seed = DeriveSeed(cfg.seed, {static_cast<uint64_t>(round), i});
    const TokenSequence input = model.vocab.Encode(inputs[i]);
    CandidatePool pool;
    try {
      pool = GeneratePool(model.params, input, cfg.pool_size, sampling);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kInsufficientDiversity) throw;
      s.outcome = Slot::kLowDiversity;
      return;
    }
    std::pair<size_t, size_t> ij;
    try {
      ij = SelectDiversePair(pool, cfg.filter);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNoEligiblePair) throw;
      s.outcome = Slot::kNoPair;
      return;
    }
    const TokenSequence& p1 = pool.candidates[ij.first].tokens;
    const TokenSequence& p2 = pool.candidates[ij.second].tokens;
    const std::string id = "r" + std::to_string(round) + "-" + std::to_string(i);
    AveragedJudgment avg = JudgePositionAveraged(judge, id, inputs[i], model.vocab.Decode(p1),
                                                 model.vocab.Decode(p2));
    s.forward = std::move(avg.forward);
    s.swapped = std::move(avg.swapped);
    if (avg.winner == Winner::kTie) {
      s.outcome = Slot::kTie;
      return;
    }
    const bool first_wins = avg.winner == Winner::kP1;
    const double prob =
        0.5 * (s.forward.preference_prob.value_or(1.0) + s.swapped.preference_prob.value_or(1.0));
    s.pair = {id, input, first_wins ? p1 : p2, first_wins ? p2 : p1, prob, source};
    s.outcome = Slot::kKept;
  });

  CollectionResult out;
  for (auto& s : slots) {
    switch (s.outcome) {
      case Slot::kKept:
        out.pairs.push_back(std::move(s.pair));
        break;
      case Slot::kTie:
        ++out.skipped_ties;
        break;
      case Slot::kNoPair:
        ++out.skipped_no_pair;
        break;
      case Slot::kLowDiversity:
        ++out.skipped_low_diversity;
        break;
    }
    if (!s.forward.pair_id.empty()) {
      out.judgments.push_back(std::move(s.forward));
      out.judgments.push_back(std::move(s.swapped));
    }
  }
  if (out.pairs.empty()) {
    Fail(ErrorCode::kEmptyPreferenceSet,
         "round " + std::to_string(round) + ": " + std::to_string(inputs.size()) +
             " inputs, none produced a consistent preference");
  }
  return out;
}

RankingResult CollectTeacherRankings(const std::vector<std::string>& inputs,
                                     const Teacher& teacher, const PairJudge& judge,
                                     size_t workers) {
  std::vector<std::optional<RankingRecord>> slots(inputs.size());
  ParallelFor(inputs.size(), workers, [&](size_t i) {
    const auto outs = teacher.Generate(inputs[i], i, 2);
    if (outs.size() < 2 || outs[0] == outs[1]) return;
    const std::string id = "t-" + std::to_string(i);
    AveragedJudgment avg = JudgePositionAveraged(judge, id, inputs[i], outs[0], outs[1]);
    if (avg.winner == Winner::kTie) return;
    const bool first = avg.winner == Winner::kP1;
    slots[i] = RankingRecord{id, inputs[i], {first ? outs[0] : outs[1], first ? outs[1] : outs[0]}};
  });
  RankingResult out;
  for (auto& s : slots) {
    if (s) {
      out.rankings.push_back(std::move(*s));
    } else {
      ++out.skipped;
    }
  }
  return out;
}

std::vector<std::string> GenerateOutputs(const StudentModel& model,
                                         const std::vector<std::string>& inputs,
                                         const DecodeConfig& cfg) {
  std::vector<std::string> out;
  out.reserve(inputs.size());
  for (size_t i = 0; i < inputs.size(); ++i) {
    DecodeConfig c = cfg;
    c.seed = DeriveSeed(cfg.seed, {i});
    out.push_back(
        model.vocab.Decode(Generate(model.params, model.vocab.Encode(inputs[i]), c).front().tokens));
  }
  return out;
}

ComparisonResult CompareSystems(const std::vector<std::string>& inputs,
                                const std::vector<std::string>& outputs_a,
                                const std::vector<std::string>& outputs_b, const PairJudge& judge,
                                size_t workers, const std::string& id_prefix) {
  if (outputs_a.size() != inputs.size() || outputs_b.size() != inputs.size()) {
    Fail(ErrorCode::kPairMismatch, "comparison needs one output per input from each system");
  }
  std::vector<AveragedJudgment> results(inputs.size());
  ParallelFor(inputs.size(), workers, [&](size_t i) {
    results[i] = JudgePositionAveraged(judge, id_prefix + "-" + std::to_string(i), inputs[i],
                                       outputs_a[i], outputs_b[i]);
  });
  ComparisonResult out;
  std::vector<Side> sides;
  sides.reserve(results.size());
  for (auto& r : results) {
    sides.push_back(r.winner == Winner::kP1 ? Side::kA : r.winner == Winner::kP2 ? Side::kB
                                                                                  : Side::kTie);
    out.judgments.push_back(std::move(r.forward));
    out.judgments.push_back(std::move(r.swapped));
  }
  out.report = ComputeWtr(sides);
  out.report.pb = ComputePb(out.judgments);
  return out;
}

}  // namespace fdkd
