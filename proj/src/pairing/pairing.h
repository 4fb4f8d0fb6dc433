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

#ifndef FDKD_PAIRING_PAIRING_H_
#define FDKD_PAIRING_PAIRING_H_

#include <cstdint>
#include <utility>
#include <vector>

#include "textmodel/decode.h"
#include "textmodel/model.h"

namespace fdkd {

struct Candidate {
  TokenSequence tokens;
  uint64_t seed = 0;
  double score = 0.0;  // length-normalized log probability under the generator
};

// Distinct candidates sampled for one input.
struct CandidatePool {
  TokenSequence input;
  std::vector<Candidate> candidates;
};

struct PairFilterConfig {
  double length_ratio_lo = 0.8;
  double length_ratio_hi = 1.2;
  size_t ngram = 1;

  void Validate() const;
};

// Samples until k distinct candidates are found or 3k draws are spent. Draw d
// uses seed DeriveSeed(cfg.seed, {d}). Throws kInsufficientDiversity when
// fewer than two distinct candidates come out.
CandidatePool GeneratePool(const ModelParams& params, const TokenSequence& input, size_t k,
                           const DecodeConfig& cfg);

// Levenshtein distance between the n-gram sequences of a and b.
size_t NgramEditDistance(const TokenSequence& a, const TokenSequence& b, size_t n = 1);

// longer/shorter <= hi; bounds inclusive.
bool LengthRatioEligible(size_t len_a, size_t len_b, const PairFilterConfig& filter);

// Among length-eligible unordered pairs, the one with the largest n-gram edit
// distance; ties go to the lexicographically smallest (i, j). Returns indices
// into pool.candidates with i < j. Throws kNoEligiblePair.
std::pair<size_t, size_t> SelectDiversePair(const CandidatePool& pool,
                                            const PairFilterConfig& filter);

}  // namespace fdkd

#endif  // FDKD_PAIRING_PAIRING_H_
