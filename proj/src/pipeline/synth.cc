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

#include "pipeline/synth.h"

#include <algorithm>
#include <set>

#include "common/error.h"
#include "common/rng.h"

namespace fdkd {
namespace {

std::vector<std::string> Numbered(const char* prefix, size_t n) {
  std::vector<std::string> out;
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

std::string Join(const std::vector<std::string>& words) {
  std::string s;
  for (size_t i = 0; i < words.size(); ++i) {
    if (i) s += ' ';
    s += words[i];
  }
  return s;
}

}  // namespace

void SynthTaskSpec::Validate() const {
  if (content_vocab < 2 || style_vocab < 3 || filler_vocab < 1) {
    Fail(ErrorCode::kConfig, "synth vocab sizes must be >= 2 content, >= 3 style, >= 1 filler");
  }
  if (min_input_len < 2 || max_input_len < min_input_len) {
    Fail(ErrorCode::kConfig, "synth input lengths need 2 <= min <= max");
  }
  if (max_input_len + 3 > kDefaultMaxSequenceLength) {
    Fail(ErrorCode::kConfig, "synth max_input_len too long for the student");
  }
  if (train < 1) Fail(ErrorCode::kConfig, "synth.train must be >= 1");
  if (!(content_rate > 0 && content_rate <= 1)) {
    Fail(ErrorCode::kConfig, "synth.content_rate must be in (0, 1]");
  }
  oracle_weights.Validate();
}

OrderedJson SynthTaskSpec::ToJson() const {
  OrderedJson j;
  j["content_vocab"] = content_vocab;
  j["style_vocab"] = style_vocab;
  j["filler_vocab"] = filler_vocab;
  j["min_input_len"] = min_input_len;
  j["max_input_len"] = max_input_len;
  j["train"] = train;
  j["val"] = val;
  j["test"] = test;
  j["seed"] = seed;
  j["content_rate"] = content_rate;
  j["shuffle_content"] = shuffle_content;
  OrderedJson o;
  o["w_f1"] = oracle_weights.w_f1;
  o["w_style"] = oracle_weights.w_style;
  o["style_cap"] = oracle_weights.style_cap;
  o["w_len"] = oracle_weights.w_len;
  o["len_ratio_knee"] = oracle_weights.len_ratio_knee;
  o["tie_epsilon"] = oracle_weights.tie_epsilon;
  j["oracle"] = o;
  return j;
}

SynthTaskSpec SynthTaskSpec::FromJson(const Json& j) {
  RequireKnownKeys(j,
                   {"content_vocab", "style_vocab", "filler_vocab", "min_input_len",
                    "max_input_len", "train", "val", "test", "seed", "content_rate",
                    "shuffle_content", "oracle"},
                   "synth");
  SynthTaskSpec s;
  try {
    s.content_vocab = j.value("content_vocab", s.content_vocab);
    s.style_vocab = j.value("style_vocab", s.style_vocab);
    s.filler_vocab = j.value("filler_vocab", s.filler_vocab);
    s.min_input_len = j.value("min_input_len", s.min_input_len);
    s.max_input_len = j.value("max_input_len", s.max_input_len);
    s.train = j.value("train", s.train);
    s.val = j.value("val", s.val);
    s.test = j.value("test", s.test);
    s.seed = j.value("seed", s.seed);
    s.content_rate = j.value("content_rate", s.content_rate);
    s.shuffle_content = j.value("shuffle_content", s.shuffle_content);
    if (j.contains("oracle")) {
      const Json& o = j["oracle"];
      RequireKnownKeys(o, {"w_f1", "w_style", "style_cap", "w_len", "len_ratio_knee", "tie_epsilon"},
                       "synth.oracle");
      OracleSpec& w = s.oracle_weights;
      w.w_f1 = o.value("w_f1", w.w_f1);
      w.w_style = o.value("w_style", w.w_style);
      w.style_cap = o.value("style_cap", w.style_cap);
      w.w_len = o.value("w_len", w.w_len);
      w.len_ratio_knee = o.value("len_ratio_knee", w.len_ratio_knee);
      w.tie_epsilon = o.value("tie_epsilon", w.tie_epsilon);
    }
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kConfig, std::string("synth: ") + e.what());
  }
  s.Validate();
  return s;
}

std::vector<std::string> SynthTaskSpec::ContentTokens() const { return Numbered("c", content_vocab); }
std::vector<std::string> SynthTaskSpec::StyleTokens() const { return Numbered("s", style_vocab); }
std::vector<std::string> SynthTaskSpec::FillerTokens() const { return Numbered("f", filler_vocab); }

Vocabulary SynthTaskSpec::MakeVocabulary() const {
  std::vector<std::string> all = ContentTokens();
  for (auto& t : StyleTokens()) all.push_back(t);
  for (auto& t : FillerTokens()) all.push_back(t);
  return Vocabulary(all);
}

OracleSpec SynthTaskSpec::MakeOracle() const {
  OracleSpec o = oracle_weights;
  const auto c = ContentTokens(), s = StyleTokens();
  o.content = std::set<std::string>(c.begin(), c.end());
  o.style = std::set<std::string>(s.begin(), s.end());
  return o;
}

SynthCorpus GenerateSynthCorpus(const SynthTaskSpec& spec) {
  spec.Validate();
  const auto content = spec.ContentTokens();
  const auto filler = spec.FillerTokens();
  Rng rng(DeriveSeed(spec.seed, {0x636f72707573ULL}));
  const size_t total = spec.train + spec.val + spec.test;
  std::set<std::string> seen;
  std::vector<std::string> inputs;
  size_t attempts = 0;
  while (inputs.size() < total) {
    if (++attempts > 100 * total + 1000) {
      Fail(ErrorCode::kConfig, "synth corpus too large for its vocabulary");
    }
    const size_t len = static_cast<size_t>(rng.IntIn(static_cast<int>(spec.min_input_len),
                                                     static_cast<int>(spec.max_input_len)));
    std::vector<bool> is_content(len);
    size_t n_content = 0;
    for (size_t i = 0; i < len; ++i) {
      is_content[i] = rng.Bernoulli(spec.content_rate);
      n_content += is_content[i];
    }
    if (n_content < 2 || n_content > content.size()) continue;
    std::vector<std::string> pool = content;
    rng.Shuffle(pool);
    std::vector<std::string> words;
    size_t next = 0;
    for (size_t i = 0; i < len; ++i) {
      words.push_back(is_content[i] ? pool[next++] : filler[rng.Below(filler.size())]);
    }
    std::string text = Join(words);
    if (seen.insert(text).second) inputs.push_back(std::move(text));
  }
  SynthCorpus c;
  // Evaluation splits come first so that growing `train` only appends.
  const auto val_end = inputs.begin() + static_cast<std::ptrdiff_t>(spec.test + spec.val);
  c.test.assign(inputs.begin(), inputs.begin() + static_cast<std::ptrdiff_t>(spec.test));
  c.val.assign(inputs.begin() + static_cast<std::ptrdiff_t>(spec.test), val_end);
  c.train.assign(val_end, inputs.end());
  return c;
}

std::vector<std::string> SynthTeacherOutputs(const SynthTaskSpec& spec, const std::string& input,
                                             size_t n, uint64_t seed) {
  const auto c = spec.ContentTokens();
  const std::set<std::string> content(c.begin(), c.end());
  const auto style = spec.StyleTokens();
  std::vector<std::string> kept;
  for (auto& w : SplitWhitespace(input)) {
    if (content.count(w)) kept.push_back(w);
  }
  const uint64_t input_hash = Fnv1a64(input);
  std::vector<std::string> outputs;
  outputs.reserve(n);
  for (size_t k = 0; k < n; ++k) {
    Rng rng(DeriveSeed(seed, {input_hash, k}));
    std::vector<std::string> words = kept;
    if (spec.shuffle_content) rng.Shuffle(words);
    std::vector<std::string> styles = style;
    rng.Shuffle(styles);
    const size_t j = 1 + rng.Below(3);
    for (size_t s = 0; s < j; ++s) {
      const size_t pos = rng.Below(words.size() + 1);
      words.insert(words.begin() + static_cast<std::ptrdiff_t>(pos), styles[s]);
    }
    outputs.push_back(Join(words));
  }
  return outputs;
}

}  // namespace fdkd
