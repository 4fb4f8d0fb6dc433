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

#include "pairing/pairing.h"

#include <algorithm>
#include <set>
#include <string>

#include "common/error.h"
#include "common/rng.h"

namespace fdkd {

void PairFilterConfig::Validate() const {
  if (!(length_ratio_lo > 0 && length_ratio_lo <= 1.0 && length_ratio_hi >= 1.0)) {
    Fail(ErrorCode::kConfig, "pairing bounds must satisfy 0 < lo <= 1 <= hi");
  }
  if (ngram < 1) Fail(ErrorCode::kConfig, "pairing.ngram must be >= 1");
}

CandidatePool GeneratePool(const ModelParams& params, const TokenSequence& input, size_t k,
                           const DecodeConfig& cfg) {
  if (k < 2) Fail(ErrorCode::kInvalidArgument, "pool size k must be >= 2");
  CandidatePool pool;
  pool.input = input;
  std::set<TokenSequence> seen;
  DecodeConfig draw = cfg;
  draw.mode = DecodeMode::kNucleus;
  for (size_t d = 0; d < 3 * k && pool.candidates.size() < k; ++d) {
    draw.seed = DeriveSeed(cfg.seed, {d});
    Hypothesis h = Generate(params, input, draw).front();
    if (!seen.insert(h.tokens).second) continue;
    pool.candidates.push_back({std::move(h.tokens), draw.seed, h.score});
  }
  if (pool.candidates.size() < 2) {
    Fail(ErrorCode::kInsufficientDiversity,
         std::to_string(pool.candidates.size()) + " distinct candidate(s) after " +
             std::to_string(3 * k) + " draws");
  }
  return pool;
}

size_t NgramEditDistance(const TokenSequence& a, const TokenSequence& b, size_t n) {
  auto grams = [n](const TokenSequence& s) {
    std::vector<std::vector<TokenId>> out;
    if (n == 0 || s.size() < n) return out;
    for (size_t i = 0; i + n <= s.size(); ++i) {
      out.emplace_back(s.ids.begin() + i, s.ids.begin() + i + n);
    }
    return out;
  };
  const auto ga = grams(a);
  const auto gb = grams(b);
  std::vector<size_t> prev(gb.size() + 1), cur(gb.size() + 1);
  for (size_t j = 0; j <= gb.size(); ++j) prev[j] = j;
  for (size_t i = 1; i <= ga.size(); ++i) {
    cur[0] = i;
    for (size_t j = 1; j <= gb.size(); ++j) {
      const size_t sub = prev[j - 1] + (ga[i - 1] == gb[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[gb.size()];
}

bool LengthRatioEligible(size_t len_a, size_t len_b, const PairFilterConfig& filter) {
  const size_t shorter = std::min(len_a, len_b);
  const size_t longer = std::max(len_a, len_b);
  if (shorter == 0) return false;
  // Inclusive bound; the slack absorbs the rounding of e.g. 12/10 vs 1.2.
  // Both orderings must land in [lo, hi], so the binding cap on
  // longer/shorter is the smaller of hi and 1/lo.
  const double cap = std::min(filter.length_ratio_hi, 1.0 / filter.length_ratio_lo);
  return static_cast<double>(longer) / static_cast<double>(shorter) <= cap + 1e-12;
}

std::pair<size_t, size_t> SelectDiversePair(const CandidatePool& pool,
                                            const PairFilterConfig& filter) {
  const auto& c = pool.candidates;
  bool found = false;
  size_t best_d = 0;
  std::pair<size_t, size_t> best{0, 0};
  for (size_t i = 0; i < c.size(); ++i) {
    for (size_t j = i + 1; j < c.size(); ++j) {
      if (!LengthRatioEligible(c[i].tokens.size(), c[j].tokens.size(), filter)) continue;
      const size_t d = NgramEditDistance(c[i].tokens, c[j].tokens, filter.ngram);
      if (!found || d > best_d) {
        found = true;
        best_d = d;
        best = {i, j};
      }
    }
  }
  if (!found) {
    Fail(ErrorCode::kNoEligiblePair,
         "no candidate pair within length ratio " + std::to_string(filter.length_ratio_hi));
  }
  return best;
}

}  // namespace fdkd
