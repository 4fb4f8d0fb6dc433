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

#ifndef FDKD_PIPELINE_SYNTH_H_
#define FDKD_PIPELINE_SYNTH_H_

#include <cstdint>
#include <string>
#include <vector>

#include "common/jsonl.h"
#include "critic/critic.h"
#include "textmodel/vocabulary.h"

namespace fdkd {

// A small paraphrase-with-style task: inputs mix content and filler words; a
// good output keeps the content words and adds a few distinct style words.
struct SynthTaskSpec {
  size_t content_vocab = 20;
  size_t style_vocab = 6;
  size_t filler_vocab = 8;
  size_t min_input_len = 4;
  size_t max_input_len = 8;
  size_t train = 2000;
  size_t val = 200;
  size_t test = 200;
  uint64_t seed = 1;
  // Chance that an input position holds a content word rather than a filler.
  double content_rate = 0.35;
  // When false the teacher keeps the input's content order.
  bool shuffle_content = false;
  OracleSpec oracle_weights;  // weights only; vocabularies are filled from the sizes

  void Validate() const;
  OrderedJson ToJson() const;
  static SynthTaskSpec FromJson(const Json& j);

  std::vector<std::string> ContentTokens() const;  // "c0", "c1", ...
  std::vector<std::string> StyleTokens() const;    // "s0", ...
  std::vector<std::string> FillerTokens() const;   // "f0", ...
  Vocabulary MakeVocabulary() const;
  OracleSpec MakeOracle() const;
};

struct SynthCorpus {
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;
};

// Distinct inputs across all three splits, in a seeded order. Each input has
// at least two content words, all distinct. The test and val splits do not
// depend on spec.train, and a larger train split extends a smaller one.
SynthCorpus GenerateSynthCorpus(const SynthTaskSpec& spec);

// n outputs for `input`: each is the input's content words (in input order,
// or shuffled when spec.shuffle_content) with 1-3 distinct style words
// inserted at random positions. Output k depends only on (seed, input, k).
std::vector<std::string> SynthTeacherOutputs(const SynthTaskSpec& spec, const std::string& input,
                                             size_t n, uint64_t seed);

}  // namespace fdkd

#endif  // FDKD_PIPELINE_SYNTH_H_
