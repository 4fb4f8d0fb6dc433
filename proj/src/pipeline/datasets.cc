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

#include "pipeline/datasets.h"

#include <set>

#include "common/error.h"
#include "common/parallel.h"

namespace fdkd {
namespace {

template <typename T, typename Fn>
std::vector<T> ReadRows(const std::string& path, const char* what, Fn parse) {
  std::vector<T> out;
  size_t line = 0;
  for (const auto& j : ReadJsonl(path)) {
    ++line;
    try {
      out.push_back(parse(j));
    } catch (const nlohmann::json::exception& e) {
      Fail(ErrorCode::kIo, path + ": " + what + " record " + std::to_string(line) + ": " + e.what());
    }
  }
  return out;
}

std::string RowId(const Json& j, size_t fallback) {
  return j.contains("id") ? j["id"].get<std::string>() : std::to_string(fallback);
}

}  // namespace

std::vector<ImitationExample> ReadImitation(const std::string& path) {
  size_t n = 0;
  return ReadRows<ImitationExample>(path, "imitation", [&](const Json& j) {
    ImitationExample e{RowId(j, n++), j.at("input").get<std::string>(),
                       j.at("outputs").get<std::vector<std::string>>()};
    if (e.outputs.empty()) Fail(ErrorCode::kIo, "example " + e.id + " has no outputs");
    return e;
  });
}

void WriteImitation(const std::string& path, const std::vector<ImitationExample>& rows) {
  std::vector<OrderedJson> out;
  for (const auto& r : rows) {
    OrderedJson j;
    j["id"] = r.id;
    j["input"] = r.input;
    j["outputs"] = r.outputs;
    out.push_back(std::move(j));
  }
  WriteJsonl(path, out);
}

std::vector<PreferenceRecord> ReadPreferences(const std::string& path) {
  size_t n = 0;
  return ReadRows<PreferenceRecord>(path, "preference", [&](const Json& j) {
    PreferenceRecord r;
    r.id = RowId(j, n++);
    r.input = j.at("input").get<std::string>();
    r.chosen = j.at("chosen").get<std::string>();
    r.rejected = j.at("rejected").get<std::string>();
    r.prob = j.value("prob", 1.0);
    r.source = j.value("source", std::string("oracle"));
    return r;
  });
}

void WritePreferences(const std::string& path, const std::vector<PreferenceRecord>& rows) {
  std::vector<OrderedJson> out;
  for (const auto& r : rows) {
    OrderedJson j;
    j["id"] = r.id;
    j["input"] = r.input;
    j["chosen"] = r.chosen;
    j["rejected"] = r.rejected;
    j["prob"] = r.prob;
    j["source"] = r.source;
    out.push_back(std::move(j));
  }
  WriteJsonl(path, out);
}

std::vector<RankingRecord> ReadRankings(const std::string& path) {
  size_t n = 0;
  return ReadRows<RankingRecord>(path, "ranking", [&](const Json& j) {
    return RankingRecord{RowId(j, n++), j.at("input").get<std::string>(),
                         j.at("ranked").get<std::vector<std::string>>()};
  });
}

void WriteRankings(const std::string& path, const std::vector<RankingRecord>& rows) {
  std::vector<OrderedJson> out;
  for (const auto& r : rows) {
    OrderedJson j;
    j["id"] = r.id;
    j["input"] = r.input;
    j["ranked"] = r.ranked;
    out.push_back(std::move(j));
  }
  WriteJsonl(path, out);
}

std::vector<GenerationRecord> ReadGenerations(const std::string& path) {
  size_t n = 0;
  return ReadRows<GenerationRecord>(path, "generation", [&](const Json& j) {
    return GenerationRecord{RowId(j, n++), j.at("input").get<std::string>(),
                            j.at("output").get<std::string>()};
  });
}

void WriteGenerations(const std::string& path, const std::vector<GenerationRecord>& rows) {
  std::vector<OrderedJson> out;
  for (const auto& r : rows) {
    OrderedJson j;
    j["id"] = r.id;
    j["input"] = r.input;
    j["output"] = r.output;
    out.push_back(std::move(j));
  }
  WriteJsonl(path, out);
}

std::string NormalizeSpace(const std::string& text) {
  std::string out;
  for (const auto& w : SplitWhitespace(text)) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

std::vector<std::string> ReadCorpus(const std::string& path) {
  std::vector<std::string> out;
  for (const auto& line : ReadLines(path)) {
    std::string s = NormalizeSpace(line);
    if (!s.empty()) out.push_back(std::move(s));
  }
  return out;
}

Vocabulary BuildVocabulary(const std::vector<ImitationExample>& data) {
  std::set<std::string> tokens;
  for (const auto& ex : data) {
    for (auto& w : SplitWhitespace(ex.input)) tokens.insert(w);
    for (const auto& o : ex.outputs) {
      for (auto& w : SplitWhitespace(o)) tokens.insert(w);
    }
  }
  return Vocabulary(std::vector<std::string>(tokens.begin(), tokens.end()));
}

std::vector<SupervisedExample> ToSupervised(const std::vector<ImitationExample>& data,
                                            const Vocabulary& vocab) {
  std::vector<SupervisedExample> out;
  for (const auto& ex : data) {
    const TokenSequence in = vocab.Encode(ex.input);
    for (const auto& o : ex.outputs) out.push_back({in, vocab.Encode(o)});
  }
  return out;
}

std::vector<PreferencePair> ToPairs(const std::vector<PreferenceRecord>& rows,
                                    const Vocabulary& vocab) {
  std::vector<PreferencePair> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    out.push_back({r.id, vocab.Encode(r.input), vocab.Encode(r.chosen), vocab.Encode(r.rejected),
                   r.prob, ParsePreferenceSource(r.source)});
  }
  return out;
}

PreferenceRecord ToRecord(const PreferencePair& p, const Vocabulary& vocab) {
  return {p.id,
          vocab.Decode(p.input),
          vocab.Decode(p.chosen),
          vocab.Decode(p.rejected),
          p.preference_prob,
          std::string(PreferenceSourceName(p.source))};
}

std::vector<RankedCandidates> ToRankings(const std::vector<RankingRecord>& rows,
                                         const Vocabulary& vocab) {
  std::vector<RankedCandidates> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    RankedCandidates rc{r.id, vocab.Encode(r.input), {}};
    for (const auto& c : r.ranked) rc.candidates.push_back(vocab.Encode(c));
    out.push_back(std::move(rc));
  }
  return out;
}

std::vector<std::string> SynthTeacher::Generate(const std::string& input, size_t,
                                                size_t n) const {
  return SynthTeacherOutputs(spec_, input, n, seed_);
}

std::vector<std::string> RemoteTeacher::Generate(const std::string& input, size_t,
                                                 size_t n) const {
  const auto messages = Render(tmpl_, {{"input", input}});
  std::vector<std::string> out;
  out.reserve(n);
  for (size_t k = 0; k < n; ++k) out.push_back(NormalizeSpace(client_->ChatComplete(messages).text));
  return out;
}

size_t RemoteTeacher::concurrency() const {
  return static_cast<size_t>(client_->config().max_concurrency);
}

ImitationBuildResult BuildImitationDataset(const std::vector<std::string>& inputs,
                                           const Teacher& teacher, size_t n,
                                           const std::string& refusal_pattern) {
  if (n < 1) Fail(ErrorCode::kConfig, "teacher outputs per input must be >= 1");
  std::optional<std::regex> refusal;
  if (!refusal_pattern.empty()) {
    try {
      refusal.emplace(refusal_pattern, std::regex::icase | std::regex::ECMAScript);
    } catch (const std::regex_error& e) {
      Fail(ErrorCode::kConfig, "refusal_pattern: " + std::string(e.what()));
    }
  }
  std::vector<std::vector<std::string>> outputs(inputs.size());
  ParallelFor(inputs.size(), teacher.concurrency(),
              [&](size_t i) { outputs[i] = teacher.Generate(inputs[i], i, n); });
  ImitationBuildResult result;
  for (size_t i = 0; i < inputs.size(); ++i) {
    bool refused = false;
    for (const auto& o : outputs[i]) {
      if (o.empty() || (refusal && std::regex_search(o, *refusal))) refused = true;
    }
    if (refused) {
      ++result.refused_inputs;
      continue;
    }
    result.examples.push_back({"ex-" + std::to_string(i), inputs[i], std::move(outputs[i])});
  }
  return result;
}

}  // namespace fdkd
