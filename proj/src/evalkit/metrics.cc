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

#include "evalkit/metrics.h"

#include <cmath>
#include <set>
#include <sstream>

#include "common/error.h"

namespace fdkd {

std::string SideName(Side s) {
  switch (s) {
    case Side::kA: return "A";
    case Side::kB: return "B";
    case Side::kTie: return "tie";
  }
  return "?";
}

Side ParseSide(const std::string& s) {
  if (s == "A") return Side::kA;
  if (s == "B") return Side::kB;
  if (s == "tie") return Side::kTie;
  Fail(ErrorCode::kInvalidVerdict, s);
}

WtrReport ComputeWtr(const std::vector<Side>& outcomes) {
  if (outcomes.empty()) Fail(ErrorCode::kEmptyJudgments, "no comparisons");
  WtrReport r;
  r.n = outcomes.size();
  for (Side s : outcomes) {
    if (s == Side::kA) ++r.wins_a;
    if (s == Side::kB) ++r.wins_b;
    if (s == Side::kTie) ++r.ties;
  }
  const double n = static_cast<double>(r.n);
  r.wtr_a = static_cast<double>(r.wins_a + r.ties) / n;
  r.wtr_b = static_cast<double>(r.wins_b + r.ties) / n;
  return r;
}

Side RawSide(const Judgment& j) {
  if (j.verdict == Verdict::kTie) return Side::kTie;
  const bool first = j.verdict == Verdict::kFirst;
  const bool forward = j.presented_order == PresentedOrder::kForward;
  return first == forward ? Side::kA : Side::kB;
}

namespace {

struct OrderPair {
  const Judgment* forward = nullptr;
  const Judgment* swapped = nullptr;
  size_t count = 0;
};

std::map<std::string, OrderPair> GroupByPair(const std::vector<Judgment>& judgments) {
  std::map<std::string, OrderPair> groups;
  for (const auto& j : judgments) {
    OrderPair& g = groups[j.pair_id];
    ++g.count;
    (j.presented_order == PresentedOrder::kForward ? g.forward : g.swapped) = &j;
  }
  return groups;
}

template <typename V>
void RequireSameKeys(const std::map<std::string, Side>& a, const std::map<std::string, V>& b,
                     const char* what) {
  if (a.size() != b.size()) {
    Fail(ErrorCode::kPairMismatch, std::string(what) + ": " + std::to_string(a.size()) +
                                       " vs " + std::to_string(b.size()) + " pairs");
  }
  for (const auto& [id, unused] : a) {
    if (!b.count(id)) Fail(ErrorCode::kPairMismatch, std::string(what) + ": missing " + id);
  }
}

}  // namespace

std::map<std::string, Side> ResolveSides(const std::vector<Judgment>& judgments) {
  std::map<std::string, Side> out;
  for (const auto& [id, g] : GroupByPair(judgments)) {
    if (g.forward && g.swapped) {
      const Side f = RawSide(*g.forward), s = RawSide(*g.swapped);
      out[id] = (f == s) ? f : Side::kTie;
    } else {
      out[id] = RawSide(g.forward ? *g.forward : *g.swapped);
    }
  }
  return out;
}

double ComputePb(const std::vector<Judgment>& judgments) {
  if (judgments.empty()) Fail(ErrorCode::kEmptyJudgments, "no judgments for PB");
  size_t changed = 0;
  const auto groups = GroupByPair(judgments);
  for (const auto& [id, g] : groups) {
    if (g.count != 2 || !g.forward || !g.swapped) {
      Fail(ErrorCode::kOrderMismatch, "pair " + id + " lacks exactly one judgment per order");
    }
    if (RawSide(*g.forward) != RawSide(*g.swapped)) ++changed;
  }
  return static_cast<double>(changed) / static_cast<double>(groups.size());
}

double ComputeLb(const std::map<std::string, Side>& human,
                 const std::map<std::string, Side>& critic,
                 const std::map<std::string, PairLengths>& lengths, LbDenominator denominator) {
  RequireSameKeys(human, critic, "LB critic");
  RequireSameKeys(human, lengths, "LB lengths");
  if (human.empty()) Fail(ErrorCode::kEmptyJudgments, "no pairs for LB");
  size_t conflicts = 0, shorter_preferred = 0;
  for (const auto& [id, h] : human) {
    const PairLengths& len = lengths.at(id);
    if (len.a == len.b || h == Side::kTie) continue;
    const Side shorter = len.a < len.b ? Side::kA : Side::kB;
    const Side longer = shorter == Side::kA ? Side::kB : Side::kA;
    if (h != shorter) continue;
    ++shorter_preferred;
    if (critic.at(id) == longer) ++conflicts;
  }
  const size_t denom =
      denominator == LbDenominator::kAllPairs ? human.size() : shorter_preferred;
  return denom == 0 ? 0.0 : static_cast<double>(conflicts) / static_cast<double>(denom);
}

double ComputeAgreement(const std::map<std::string, Side>& human,
                        const std::map<std::string, Side>& critic) {
  RequireSameKeys(human, critic, "agreement");
  if (human.empty()) Fail(ErrorCode::kEmptyJudgments, "no pairs for agreement");
  size_t matches = 0;
  for (const auto& [id, h] : human) {
    if (critic.at(id) == h) ++matches;
  }
  return static_cast<double>(matches) / static_cast<double>(human.size());
}

std::map<std::string, Side> HumanSides(const std::vector<Json>& records, Aspect aspect) {
  const std::string key = AspectName(aspect);
  std::map<std::string, std::pair<int, int>> votes;  // (A - B balance, count)
  for (const auto& r : records) {
    std::string id;
    Side s;
    try {
      id = r.at("task_id").get<std::string>();
      s = ParseSide(r.at(key).get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      Fail(ErrorCode::kIo, std::string("human record: ") + e.what());
    }
    auto& v = votes[id];
    v.first += s == Side::kA ? 1 : s == Side::kB ? -1 : 0;
    ++v.second;
  }
  std::map<std::string, Side> out;
  for (const auto& [id, v] : votes) {
    out[id] = v.first > 0 ? Side::kA : v.first < 0 ? Side::kB : Side::kTie;
  }
  return out;
}

OrderedJson ReportToJson(const WtrReport& r) {
  OrderedJson j;
  j["system_a"] = r.system_a;
  j["system_b"] = r.system_b;
  j["n"] = r.n;
  j["wins_a"] = r.wins_a;
  j["wins_b"] = r.wins_b;
  j["ties"] = r.ties;
  j["wtr_a"] = r.wtr_a;
  j["wtr_b"] = r.wtr_b;
  if (r.pb) j["pb"] = *r.pb;
  if (r.lb) j["lb"] = *r.lb;
  if (r.ag_h) j["ag_h"] = *r.ag_h;
  if (r.ag_c) j["ag_c"] = *r.ag_c;
  return j;
}

WtrReport ReportFromJson(const Json& j) {
  WtrReport r;
  try {
    r.system_a = j.value("system_a", r.system_a);
    r.system_b = j.value("system_b", r.system_b);
    r.n = j.at("n").get<size_t>();
    r.wins_a = j.at("wins_a").get<size_t>();
    r.wins_b = j.at("wins_b").get<size_t>();
    r.ties = j.at("ties").get<size_t>();
    r.wtr_a = j.at("wtr_a").get<double>();
    r.wtr_b = j.at("wtr_b").get<double>();
    if (j.contains("pb")) r.pb = j["pb"].get<double>();
    if (j.contains("lb")) r.lb = j["lb"].get<double>();
    if (j.contains("ag_h")) r.ag_h = j["ag_h"].get<double>();
    if (j.contains("ag_c")) r.ag_c = j["ag_c"].get<double>();
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kIo, std::string("report: ") + e.what());
  }
  return r;
}

std::string ReportToTable(const WtrReport& r) {
  auto pct = [](double v) { return std::to_string(std::lround(v * 100.0)); };
  std::vector<std::pair<std::string, std::string>> cols = {
      {"A", r.system_a},          {"B", r.system_b},          {"n", std::to_string(r.n)},
      {"WTR_A", pct(r.wtr_a)},    {"WTR_B", pct(r.wtr_b)},    {"ties", std::to_string(r.ties)}};
  if (r.pb) cols.emplace_back("PB", pct(*r.pb));
  if (r.lb) cols.emplace_back("LB", pct(*r.lb));
  if (r.ag_h) cols.emplace_back("Ag-H", pct(*r.ag_h));
  if (r.ag_c) cols.emplace_back("Ag-C", pct(*r.ag_c));
  std::ostringstream head, rule, row;
  for (const auto& [name, value] : cols) {
    const size_t w = std::max(name.size(), value.size());
    head << "| " << name << std::string(w - name.size(), ' ') << " ";
    rule << "|" << std::string(w + 2, '-');
    row << "| " << std::string(w - value.size(), ' ') << value << " ";
  }
  return head.str() + "|\n" + rule.str() + "|\n" + row.str() + "|\n";
}

}  // namespace fdkd
