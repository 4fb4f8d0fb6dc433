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

#ifndef FDKD_TEXTMODEL_DECODE_H_
#define FDKD_TEXTMODEL_DECODE_H_

#include <cstdint>
#include <vector>

#include "common/jsonl.h"
#include "textmodel/model.h"

namespace fdkd {

enum class DecodeMode { kNucleus, kBeam };

struct DecodeConfig {
  DecodeMode mode = DecodeMode::kBeam;
  double top_p = 1.0;
  double temperature = 1.0;
  int beams = 5;
  size_t max_len = 16;  // output tokens, excluding <eos>
  uint64_t seed = 0;

  void Validate() const;  // throws kInvalidArgument
  OrderedJson ToJson() const;
  static DecodeConfig FromJson(const Json& j);
};

struct Hypothesis {
  TokenSequence tokens;  // output tokens without <eos>
  double score = 0.0;    // length-normalized log probability (incl. <eos> when emitted)
  bool finished = false; // ended with <eos> rather than max_len
};

// Nucleus mode returns one sample; beam mode returns up to `beams` hypotheses
// sorted by descending score. Special tokens other than <eos> are never
// emitted; if they hold all of the next-token mass the model is degenerate.
std::vector<Hypothesis> Generate(const ModelParams& params, const TokenSequence& input,
                                 const DecodeConfig& cfg);

TokenSequence GreedyDecode(const ModelParams& params, const TokenSequence& input,
                           size_t max_len);

}  // namespace fdkd

#endif  // FDKD_TEXTMODEL_DECODE_H_
