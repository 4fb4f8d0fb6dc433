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

#include "textmodel/decode.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "common/error.h"
#include "common/rng.h"

namespace fdkd {
namespace {

bool Emittable(TokenId id, size_t emitted) {
  if (id == Vocabulary::kEos) return emitted > 0;  // outputs are never empty
  return id >= Vocabulary::kNumSpecials;
}

void CheckMass(const std::vector<double>& lp, size_t emitted) {
  double mass = 0.0;
  for (size_t v = 0; v < lp.size(); ++v) {
    if (Emittable(static_cast<TokenId>(v), emitted)) mass += std::exp(lp[v]);
  }
  if (!(mass > 1e-300)) {
    Fail(ErrorCode::kDegenerateModel, "all next-token mass is on non-emittable specials");
  }
}

RecurrentState Prime(const ModelParams& params, const TokenSequence& input,
                     std::vector<double>* lp) {
  RecurrentState state(params);
  state.Step(Vocabulary::kBos, nullptr);
  for (TokenId id : input.ids) state.Step(id, nullptr);
  state.Step(Vocabulary::kSep, lp);
  return state;
}

TokenId Argmax(const std::vector<double>& lp, size_t emitted) {
  TokenId best = 0;
  double best_lp = -INFINITY;
  bool found = false;
  for (size_t v = 0; v < lp.size(); ++v) {
    if (!Emittable(static_cast<TokenId>(v), emitted)) continue;
    if (!found || lp[v] > best_lp) {
      best = static_cast<TokenId>(v);
      best_lp = lp[v];
      found = true;
    }
  }
  return best;
}

Hypothesis SampleNucleus(const ModelParams& params, const TokenSequence& input,
                         const DecodeConfig& cfg) {
  Rng rng(cfg.seed);
  std::vector<double> lp;
  RecurrentState state = Prime(params, input, &lp);
  Hypothesis hyp;
  double cum = 0.0;
  std::vector<std::pair<double, TokenId>> ranked;
  while (true) {
    const size_t emitted = hyp.tokens.size();
    CheckMass(lp, emitted);
    ranked.clear();
    double mx = -INFINITY;
    for (size_t v = 0; v < lp.size(); ++v) {
      if (!Emittable(static_cast<TokenId>(v), emitted)) continue;
      const double scaled = lp[v] / cfg.temperature;
      ranked.emplace_back(scaled, static_cast<TokenId>(v));
      mx = std::max(mx, scaled);
    }
    double z = 0.0;
    for (auto& [w, id] : ranked) {
      w = std::exp(w - mx);
      z += w;
    }
    for (auto& [w, id] : ranked) w /= z;
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    // Smallest prefix whose mass reaches top_p; never empty.
    size_t keep = 0;
    double mass = 0.0;
    while (keep < ranked.size()) {
      mass += ranked[keep].first;
      ++keep;
      if (mass >= cfg.top_p) break;
    }
    double u = rng.Uniform() * mass;
    TokenId pick = ranked[keep - 1].second;
    for (size_t i = 0; i < keep; ++i) {
      if (u < ranked[i].first) {
        pick = ranked[i].second;
        break;
      }
      u -= ranked[i].first;
    }
    cum += lp[pick];
    if (pick == Vocabulary::kEos) {
      hyp.finished = true;
      break;
    }
    hyp.tokens.ids.push_back(pick);
    if (hyp.tokens.size() >= cfg.max_len) break;
    state.Step(pick, &lp);
  }
  hyp.score = cum / static_cast<double>(hyp.tokens.size() + (hyp.finished ? 1 : 0));
  return hyp;
}

struct Beam {
  TokenSequence tokens;
  double cum = 0.0;
  RecurrentState state;
  std::vector<double> lp;
};

std::vector<Hypothesis> BeamSearch(const ModelParams& params, const TokenSequence& input,
                                   const DecodeConfig& cfg) {
  const size_t width = static_cast<size_t>(cfg.beams);
  std::vector<Beam> live;
  {
    std::vector<double> lp;
    RecurrentState state = Prime(params, input, &lp);
    live.push_back(Beam{{}, 0.0, std::move(state), std::move(lp)});
  }
  std::vector<Hypothesis> done;
  struct Expansion {
    double cum;
    size_t beam;
    TokenId token;
  };
  std::vector<Expansion> expansions;
  while (!live.empty()) {
    expansions.clear();
    for (size_t b = 0; b < live.size(); ++b) {
      const size_t emitted = live[b].tokens.size();
      CheckMass(live[b].lp, emitted);
      for (size_t v = 0; v < live[b].lp.size(); ++v) {
        if (!Emittable(static_cast<TokenId>(v), emitted)) continue;
        expansions.push_back({live[b].cum + live[b].lp[v], b, static_cast<TokenId>(v)});
      }
    }
    const size_t take = std::min(width, expansions.size());
    std::partial_sort(expansions.begin(), expansions.begin() + take, expansions.end(),
                      [](const Expansion& a, const Expansion& b) {
                        if (a.cum != b.cum) return a.cum > b.cum;
                        if (a.beam != b.beam) return a.beam < b.beam;
                        return a.token < b.token;
                      });
    std::vector<Beam> next;
    for (size_t i = 0; i < take; ++i) {
      const Expansion& ex = expansions[i];
      const Beam& parent = live[ex.beam];
      if (ex.token == Vocabulary::kEos) {
        done.push_back({parent.tokens, ex.cum / static_cast<double>(parent.tokens.size() + 1),
                        true});
        continue;
      }
      TokenSequence tokens = parent.tokens;
      tokens.ids.push_back(ex.token);
      if (tokens.size() >= cfg.max_len) {
        done.push_back({tokens, ex.cum / static_cast<double>(tokens.size()), false});
        continue;
      }
      Beam child{std::move(tokens), ex.cum, parent.state, {}};
      child.state.Step(ex.token, &child.lp);
      next.push_back(std::move(child));
    }
    live = std::move(next);
  }
  std::stable_sort(done.begin(), done.end(), [](const Hypothesis& a, const Hypothesis& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.tokens < b.tokens;
  });
  if (done.size() > width) done.resize(width);
  return done;
}

}  // namespace

void DecodeConfig::Validate() const {
  if (!(top_p >= 0.0 && top_p <= 1.0)) Fail(ErrorCode::kInvalidArgument, "top_p must be in [0,1]");
  if (!(temperature > 0.0)) Fail(ErrorCode::kInvalidArgument, "temperature must be > 0");
  if (beams < 1) Fail(ErrorCode::kInvalidArgument, "beams must be >= 1");
  if (max_len < 1) Fail(ErrorCode::kInvalidArgument, "max_len must be >= 1");
}

OrderedJson DecodeConfig::ToJson() const {
  OrderedJson j;
  j["mode"] = mode == DecodeMode::kBeam ? "beam" : "nucleus";
  j["top_p"] = top_p;
  j["temperature"] = temperature;
  j["beams"] = beams;
  j["max_len"] = max_len;
  j["seed"] = seed;
  return j;
}

DecodeConfig DecodeConfig::FromJson(const Json& j) {
  RequireKnownKeys(j, {"mode", "top_p", "temperature", "beams", "max_len", "seed"}, "decode");
  DecodeConfig c;
  const std::string mode = j.value("mode", std::string("beam"));
  if (mode == "beam") {
    c.mode = DecodeMode::kBeam;
  } else if (mode == "nucleus") {
    c.mode = DecodeMode::kNucleus;
  } else {
    Fail(ErrorCode::kInvalidArgument, "decode mode must be 'beam' or 'nucleus', got " + mode);
  }
  c.top_p = j.value("top_p", c.top_p);
  c.temperature = j.value("temperature", c.temperature);
  c.beams = j.value("beams", c.beams);
  c.max_len = j.value("max_len", c.max_len);
  c.seed = j.value("seed", c.seed);
  c.Validate();
  return c;
}

std::vector<Hypothesis> Generate(const ModelParams& params, const TokenSequence& input,
                                 const DecodeConfig& cfg) {
  cfg.Validate();
  if (cfg.mode == DecodeMode::kNucleus) return {SampleNucleus(params, input, cfg)};
  return BeamSearch(params, input, cfg);
}

TokenSequence GreedyDecode(const ModelParams& params, const TokenSequence& input,
                           size_t max_len) {
  std::vector<double> lp;
  RecurrentState state = Prime(params, input, &lp);
  TokenSequence out;
  while (true) {
    CheckMass(lp, out.size());
    const TokenId pick = Argmax(lp, out.size());
    if (pick == Vocabulary::kEos) break;
    out.ids.push_back(pick);
    if (out.size() >= max_len) break;
    state.Step(pick, &lp);
  }
  return out;
}

}  // namespace fdkd
