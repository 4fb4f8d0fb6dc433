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

#ifndef FDKD_PIPELINE_COMMANDS_H_
#define FDKD_PIPELINE_COMMANDS_H_

#include <string>
#include <vector>

#include "evalkit/metrics.h"
#include "pipeline/run.h"

namespace fdkd {

// File-level building blocks behind the command-line tool.

struct InputRow {
  std::string id;
  std::string input;
};

// A ".jsonl" path is read as rows with "input" (and optionally "id");
// anything else as plain text, one input per line, with ids "ex-<index>".
std::vector<InputRow> ReadInputs(const std::string& path);

// Writes train.txt, val.txt, test.txt and oracle.json into dir.
SynthCorpus WriteSynthCorpus(const SynthTaskSpec& spec, const std::string& dir);

// Queries the configured teacher for every input and writes imitation JSONL.
ImitationBuildResult DistillData(const RunConfig& cfg, const std::string& inputs_path,
                                 const std::string& out_path);

std::vector<GenerationRecord> GenerateFile(const StudentModel& model,
                                           const std::string& inputs_path,
                                           const DecodeConfig& decode,
                                           const std::string& out_path);

// One collection round (round 0) with the configured judge and sampling.
// Writes preference JSONL and, when judgments_path is set, the raw judgments.
CollectionResult CollectPreferencesFile(const RunConfig& cfg, const StudentModel& model,
                                        const std::string& inputs_path,
                                        const std::string& out_path,
                                        const std::string& judgments_path);

struct EvalWtrFiles {
  std::string report;     // report JSON; required
  std::string judgments;  // raw judgments JSONL; optional
  std::string pairs;      // annotation pairs JSONL {"id","input","a","b"}; optional
};

// Compares generations A against B, matched by id (both files must hold the
// same ids, else kPairMismatch). Pair ids are the generation ids.
WtrReport EvalWtr(const PairJudge& judge, const std::string& gen_a, const std::string& gen_b,
                  size_t workers, const EvalWtrFiles& out, const std::string& name_a = "A",
                  const std::string& name_b = "B");

// Agreement of position-averaged critic verdicts with the majority human
// verdict per pair, for humor (ag_h) and consistency (ag_c). Only pairs
// present in both files are compared; none in common is kPairMismatch.
OrderedJson JudgeAgreement(const std::string& human_export, const std::string& judgments);

// PB from critic judgments; LB as well when a human export is given, with
// candidate lengths taken from the annotation pairs file.
OrderedJson BiasAudit(const std::string& judgments, const std::string& pairs,
                      const std::string& human_export, Aspect aspect,
                      LbDenominator denominator);

// Offline export of an annotation log: same rows as GET /api/export.
std::vector<OrderedJson> ExportJudgmentsFile(const std::string& pairs, const std::string& log,
                                             uint64_t seed, const std::string& out_path);

}  // namespace fdkd

#endif  // FDKD_PIPELINE_COMMANDS_H_
