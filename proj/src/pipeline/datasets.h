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

#ifndef FDKD_PIPELINE_DATASETS_H_
#define FDKD_PIPELINE_DATASETS_H_

#include <memory>
#include <regex>
#include <string>
#include <vector>

#include "common/jsonl.h"
#include "llmclient/llm_client.h"
#include "llmclient/prompt.h"
#include "objectives/objectives.h"
#include "pipeline/synth.h"
#include "textmodel/vocabulary.h"

namespace fdkd {

// {"id", "input", "outputs": [...]}
struct ImitationExample {
  std::string id;
  std::string input;
  std::vector<std::string> outputs;
};

// {"id", "input", "chosen", "rejected", "prob", "source"}
struct PreferenceRecord {
  std::string id;
  std::string input;
  std::string chosen;
  std::string rejected;
  double prob = 1.0;
  std::string source = "oracle";
};

// {"id", "input", "ranked": [...]}, best first.
struct RankingRecord {
  std::string id;
  std::string input;
  std::vector<std::string> ranked;
};

// {"id", "input", "output"}
struct GenerationRecord {
  std::string id;
  std::string input;
  std::string output;
};

std::vector<ImitationExample> ReadImitation(const std::string& path);
void WriteImitation(const std::string& path, const std::vector<ImitationExample>& rows);
std::vector<PreferenceRecord> ReadPreferences(const std::string& path);
void WritePreferences(const std::string& path, const std::vector<PreferenceRecord>& rows);
std::vector<RankingRecord> ReadRankings(const std::string& path);
void WriteRankings(const std::string& path, const std::vector<RankingRecord>& rows);
std::vector<GenerationRecord> ReadGenerations(const std::string& path);
void WriteGenerations(const std::string& path, const std::vector<GenerationRecord>& rows);

// Plain text, one input per line; blank lines skipped, whitespace normalized.
std::vector<std::string> ReadCorpus(const std::string& path);
std::string NormalizeSpace(const std::string& text);

// Sorted distinct whitespace tokens of all inputs and outputs.
Vocabulary BuildVocabulary(const std::vector<ImitationExample>& data);

// One (input, output) pair per teacher output.
std::vector<SupervisedExample> ToSupervised(const std::vector<ImitationExample>& data,
                                            const Vocabulary& vocab);
std::vector<PreferencePair> ToPairs(const std::vector<PreferenceRecord>& rows,
                                    const Vocabulary& vocab);
PreferenceRecord ToRecord(const PreferencePair& pair, const Vocabulary& vocab);
std::vector<RankedCandidates> ToRankings(const std::vector<RankingRecord>& rows,
                                         const Vocabulary& vocab);

class Teacher {
 public:
  virtual ~Teacher() = default;
  // n outputs for the input at position `index` of the corpus.
  virtual std::vector<std::string> Generate(const std::string& input, size_t index,
                                            size_t n) const = 0;
  virtual size_t concurrency() const { return 1; }
};

class SynthTeacher : public Teacher {
 public:
  SynthTeacher(SynthTaskSpec spec, uint64_t seed) : spec_(std::move(spec)), seed_(seed) {}
  std::vector<std::string> Generate(const std::string& input, size_t index,
                                    size_t n) const override;

 private:
  SynthTaskSpec spec_;
  uint64_t seed_;
};

// One chat request per output.
class RemoteTeacher : public Teacher {
 public:
  RemoteTeacher(std::shared_ptr<const LlmClient> client, PromptTemplate tmpl = GenerationTemplate())
      : client_(std::move(client)), tmpl_(std::move(tmpl)) {}
  std::vector<std::string> Generate(const std::string& input, size_t index,
                                    size_t n) const override;
  size_t concurrency() const override;

 private:
  std::shared_ptr<const LlmClient> client_;
  PromptTemplate tmpl_;
};

struct ImitationBuildResult {
  std::vector<ImitationExample> examples;
  size_t refused_inputs = 0;
};

// Inputs with any output matching `refusal` (case-insensitive search; empty
// pattern disables the filter) are dropped whole. Example ids are "ex-<index>".
ImitationBuildResult BuildImitationDataset(const std::vector<std::string>& inputs,
                                           const Teacher& teacher, size_t n,
                                           const std::string& refusal_pattern);

}  // namespace fdkd

#endif  // FDKD_PIPELINE_DATASETS_H_
