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

#ifndef FDKD_EVALKIT_METRICS_H_
#define FDKD_EVALKIT_METRICS_H_

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "common/jsonl.h"
#include "critic/critic.h"

namespace fdkd {

// Outcome of one A-vs-B comparison after position averaging.
enum class Side { kA, kB, kTie };

std::string SideName(Side s);  // "A", "B", "tie"
Side ParseSide(const std::string& s);

struct WtrReport {
  std::string system_a = "A";
  std::string system_b = "B";
  size_t n = 0;
  size_t wins_a = 0;
  size_t wins_b = 0;
  size_t ties = 0;
  double wtr_a = 0.0;  // (wins_a + ties) / n
  double wtr_b = 0.0;
  std::optional<double> pb;
  std::optional<double> lb;
  std::optional<double> ag_h;
  std::optional<double> ag_c;

  bool operator==(const WtrReport&) const = default;
};

// Throws kEmptyJudgments.
WtrReport ComputeWtr(const std::vector<Side>& outcomes);

// Side named by a single raw judgment, given that forward order shows A first.
Side RawSide(const Judgment& j);

// Groups judgments by pair_id. A pair judged in both orders resolves by the
// position-averaged rule (any disagreement or tie -> tie); a pair judged in
// one order takes that verdict.
std::map<std::string, Side> ResolveSides(const std::vector<Judgment>& judgments);

// Fraction of pairs whose underlying-candidate verdict changes with order.
// Every pair_id needs exactly one forward and one swapped judgment, else
// kOrderMismatch.
double ComputePb(const std::vector<Judgment>& judgments);

struct PairLengths {
  size_t a = 0;
  size_t b = 0;
};

enum class LbDenominator {
  kAllPairs,                 // every evaluated pair
  kHumanPrefersShorter,      // pairs where the human strictly chose the shorter one
};

// Pairs where the human strictly prefers the strictly shorter candidate and
// the critic strictly prefers the longer one. All three maps must cover the
// same pair ids, else kPairMismatch. An empty denominator yields 0.
double ComputeLb(const std::map<std::string, Side>& human,
                 const std::map<std::string, Side>& critic,
                 const std::map<std::string, PairLengths>& lengths,
                 LbDenominator denominator = LbDenominator::kAllPairs);

// Fraction of shared pairs with equal outcomes; a tie matches only a tie.
// Key sets must match, else kPairMismatch.
double ComputeAgreement(const std::map<std::string, Side>& human,
                        const std::map<std::string, Side>& critic);

// Exported human records ({"task_id", "annotator", "<aspect>": "A|B|tie"})
// reduced to one outcome per task by majority; a split vote is a tie.
std::map<std::string, Side> HumanSides(const std::vector<Json>& records, Aspect aspect);

OrderedJson ReportToJson(const WtrReport& r);
WtrReport ReportFromJson(const Json& j);
// Rates are shown multiplied by 100 and rounded; absent metrics are omitted.
std::string ReportToTable(const WtrReport& r);

}  // namespace fdkd

#endif  // FDKD_EVALKIT_METRICS_H_
