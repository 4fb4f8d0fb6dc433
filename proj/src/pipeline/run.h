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

#ifndef FDKD_PIPELINE_RUN_H_
#define FDKD_PIPELINE_RUN_H_

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "critic/critic.h"
#include "evalkit/metrics.h"
#include "llmclient/llm_client.h"
#include "objectives/objectives.h"
#include "pipeline/datasets.h"
#include "pipeline/synth.h"
#include "pipeline/training.h"
#include "textmodel/checkpoint.h"

namespace fdkd {

enum class Objective { kFt, kSd, kDpo, kBrio, kBrioDpo };

std::string_view ObjectiveName(Objective o);
Objective ParseObjective(std::string_view s);  // throws kConfig

enum class CriticKind { kOracle, kMcp, kCloze };

struct CriticConfig {
  CriticKind kind = CriticKind::kOracle;
  // Oracle vocabularies and weights; filled from the synth task when absent.
  std::optional<OracleSpec> oracle;
  EndpointConfig endpoint;
  // Replay file for hermetic runs; when set no network is used.
  std::string fixture;
  double cloze_tie_epsilon = 1e-9;
};

struct TeacherConfig {
  bool remote = false;  // "synth" or "remote"
  EndpointConfig endpoint;
  std::string fixture;
  std::string refusal_pattern = "as an ai|i cannot|i can't|i'm sorry";
  size_t outputs_per_input = 3;
};

struct DataPaths {
  std::string imitation;         // imitation JSONL
  std::string eval;              // imitation JSONL; outputs[0] is the reference
  std::string teacher_rankings;  // ranking JSONL
  std::string warm_start;        // checkpoint; skips the imitation phase
  std::string warm_start_hash;   // expected CheckpointHash of warm_start
};

struct RunConfig {
  Objective objective = Objective::kFt;
  uint64_t seed = 1;

  size_t embed = 32;
  size_t hidden = 64;
  double init_scale = 0.08;

  int imitation_epochs = 10;
  SgdConfig imitation_sgd;
  std::string resume_from;  // imitation checkpoint to continue from
  int resume_epoch = 0;     // number of imitation epochs it already holds

  int feedback_epochs = 10;
  int feedback_every = 10;  // K
  SgdConfig feedback_sgd;
  bool refresh_reference = true;
  ObjectiveConfig loss;

  CollectionConfig collection;
  DecodeConfig eval_decode;
  size_t eval_limit = 200;
  size_t workers = 1;

  CriticConfig critic;
  TeacherConfig teacher;
  std::optional<SynthTaskSpec> synth;
  DataPaths data;
  std::string output_dir;

  void Validate() const;  // throws kConfig
  OrderedJson ToJson() const;
  // Rejects unknown keys at every level.
  static RunConfig FromJson(const Json& j);
};

// Applies "a.b.c=value" assignments to a config document. The value is
// parsed as JSON when possible and taken as a string otherwise; null removes
// the key.
Json ApplyOverrides(Json doc, const std::vector<std::string>& assignments);

// Feedback-phase epochs at which preferences are collected: 0, K, 2K, ...
std::vector<int> CollectionEpochs(int feedback_epochs, int every);

struct RunLogEntry {
  int epoch = 0;
  std::string event;
  double value = 0.0;
};

// Everything a run consumes besides its configuration.
struct RunInputs {
  Vocabulary vocab;
  std::vector<ImitationExample> train;
  std::vector<ImitationExample> eval;  // outputs[0] is the reference
  std::vector<RankingRecord> teacher_rankings;
  std::optional<StudentModel> warm_start;
};

// Judge selected by cfg.critic. The oracle needs cfg.critic.oracle or a synth
// task; endpoint critics use cfg.critic.fixture when set.
std::unique_ptr<PairJudge> MakeJudge(const RunConfig& cfg);
std::unique_ptr<Teacher> MakeTeacher(const RunConfig& cfg);

// Reads data paths, or builds the synthetic task when cfg.synth is set and
// no imitation path is given. Teacher rankings are produced in-process for
// synthetic brio_dpo runs.
RunInputs PrepareInputs(const RunConfig& cfg, const PairJudge& judge);

struct RunResult {
  StudentModel warm_start;
  std::string warm_start_hash;
  StudentModel model;
  std::vector<RunLogEntry> log;
  int collections = 0;
  std::vector<std::string> eval_outputs;
  WtrReport report;  // final student ("A") against the eval references ("B")
};

// Called after every training epoch with the phase name, epoch index, mean
// loss and model.
using EpochHook =
    std::function<void(const std::string& phase, int epoch, double loss, const StudentModel&)>;

// Imitation (MLE) epochs [first_epoch, last_epoch). Throws kNonFiniteLoss with
// the model restored to its state at the end of the last completed epoch.
std::vector<double> TrainImitation(StudentModel* model, std::span<const SupervisedExample> data,
                                   const SgdConfig& sgd, int first_epoch, int last_epoch,
                                   const EpochHook& hook = nullptr);

// Imitation phase (or warm-start load), then the feedback phase for the
// configured objective. With cfg.output_dir set, writes per-epoch checkpoints,
// run_log.jsonl, resolved_config.json and report.json there.
RunResult RunSchedule(const RunConfig& cfg, const RunInputs& inputs, const PairJudge& judge);

OrderedJson RunLogEntryToJson(const RunLogEntry& e);

}  // namespace fdkd

#endif  // FDKD_PIPELINE_RUN_H_
