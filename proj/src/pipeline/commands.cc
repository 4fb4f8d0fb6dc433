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

#include "pipeline/commands.h"

#include <map>
#include <set>

#include "annotserve/store.h"
#include "common/error.h"
#include "textmodel/vocabulary.h"

namespace fdkd {

namespace {

bool EndsWith(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

void WriteLinesFile(const std::string& path, const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  WriteFile(path, out);
}

std::vector<std::string> InputsOf(const std::vector<InputRow>& rows) {
  std::vector<std::string> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.input);
  return out;
}

size_t TokenCount(const std::string& s) { return SplitWhitespace(s).size(); }

}  // namespace

std::vector<InputRow> ReadInputs(const std::string& path) {
  std::vector<InputRow> out;
  if (EndsWith(path, ".jsonl")) {
    for (const Json& j : ReadJsonl(path)) {
      try {
        InputRow r;
        r.id = j.contains("id") ? j.at("id").get<std::string>() : "ex-" + std::to_string(out.size());
        r.input = NormalizeSpace(j.at("input").get<std::string>());
        out.push_back(std::move(r));
      } catch (const nlohmann::json::exception& e) {
        Fail(ErrorCode::kIo, path + ": " + e.what());
      }
    }
    return out;
  }
  for (auto& s : ReadCorpus(path)) out.push_back({"ex-" + std::to_string(out.size()), s});
  return out;
}

SynthCorpus WriteSynthCorpus(const SynthTaskSpec& spec, const std::string& dir) {
  spec.Validate();
  SynthCorpus c = GenerateSynthCorpus(spec);
  MakeDirs(dir);
  WriteLinesFile(JoinPath(dir, "train.txt"), c.train);
  WriteLinesFile(JoinPath(dir, "val.txt"), c.val);
  WriteLinesFile(JoinPath(dir, "test.txt"), c.test);
  WriteFile(JoinPath(dir, "oracle.json"), spec.MakeOracle().ToJson().dump(2) + "\n");
  return c;
}

ImitationBuildResult DistillData(const RunConfig& cfg, const std::string& inputs_path,
                                 const std::string& out_path) {
  const std::vector<InputRow> rows = ReadInputs(inputs_path);
  auto teacher = MakeTeacher(cfg);
  ImitationBuildResult r =
      BuildImitationDataset(InputsOf(rows), *teacher, cfg.teacher.outputs_per_input,
                            cfg.teacher.remote ? cfg.teacher.refusal_pattern : std::string());
  WriteImitation(out_path, r.examples);
  return r;
}

std::vector<GenerationRecord> GenerateFile(const StudentModel& model,
                                           const std::string& inputs_path,
                                           const DecodeConfig& decode,
                                           const std::string& out_path) {
  decode.Validate();
  const std::vector<InputRow> rows = ReadInputs(inputs_path);
  const std::vector<std::string> outputs = GenerateOutputs(model, InputsOf(rows), decode);
  std::vector<GenerationRecord> out;
  out.reserve(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) out.push_back({rows[i].id, rows[i].input, outputs[i]});
  WriteGenerations(out_path, out);
  return out;
}

CollectionResult CollectPreferencesFile(const RunConfig& cfg, const StudentModel& model,
                                        const std::string& inputs_path,
                                        const std::string& out_path,
                                        const std::string& judgments_path) {
  cfg.Validate();
  const std::vector<InputRow> rows = ReadInputs(inputs_path);
  auto judge = MakeJudge(cfg);
  CollectionConfig cc = cfg.collection;
  cc.seed = cfg.seed;
  cc.workers = cfg.workers;
  const PreferenceSource source =
      judge->name() == "oracle" ? PreferenceSource::kOracle : PreferenceSource::kTeacher;
  CollectionResult r = CollectPreferences(model, InputsOf(rows), *judge, source, 0, cc);
  std::vector<PreferenceRecord> recs;
  recs.reserve(r.pairs.size());
  for (const auto& p : r.pairs) recs.push_back(ToRecord(p, model.vocab));
  WritePreferences(out_path, recs);
  if (!judgments_path.empty()) WriteJudgments(judgments_path, r.judgments);
  return r;
}

WtrReport EvalWtr(const PairJudge& judge, const std::string& gen_a, const std::string& gen_b,
                  size_t workers, const EvalWtrFiles& out, const std::string& name_a,
                  const std::string& name_b) {
  const std::vector<GenerationRecord> a = ReadGenerations(gen_a);
  std::map<std::string, const GenerationRecord*> b_by_id;
  const std::vector<GenerationRecord> b = ReadGenerations(gen_b);
  for (const auto& r : b) b_by_id[r.id] = &r;
  if (a.size() != b.size()) {
    Fail(ErrorCode::kPairMismatch, gen_a + " and " + gen_b + " hold different numbers of rows");
  }
  std::vector<std::string> inputs, outs_a, outs_b;
  for (const auto& r : a) {
    auto it = b_by_id.find(r.id);
    if (it == b_by_id.end()) Fail(ErrorCode::kPairMismatch, "id " + r.id + " missing from " + gen_b);
    if (it->second->input != r.input) {
      Fail(ErrorCode::kPairMismatch, "id " + r.id + " has different inputs");
    }
    inputs.push_back(r.input);
    outs_a.push_back(r.output);
    outs_b.push_back(it->second->output);
  }
  ComparisonResult cmp = CompareSystems(inputs, outs_a, outs_b, judge, workers, "cmp");
  // Re-key judgments by generation id.
  for (auto& j : cmp.judgments) {
    const size_t i = std::stoull(j.pair_id.substr(j.pair_id.rfind('-') + 1));
    j.pair_id = a[i].id;
  }
  cmp.report.system_a = name_a;
  cmp.report.system_b = name_b;
  cmp.report.pb = ComputePb(cmp.judgments);
  WriteFile(out.report, ReportToJson(cmp.report).dump(2) + "\n");
  if (!out.judgments.empty()) WriteJudgments(out.judgments, cmp.judgments);
  if (!out.pairs.empty()) {
    std::vector<OrderedJson> rows;
    for (size_t i = 0; i < a.size(); ++i) {
      OrderedJson j;
      j["id"] = a[i].id;
      j["input"] = inputs[i];
      j["a"] = outs_a[i];
      j["b"] = outs_b[i];
      rows.push_back(std::move(j));
    }
    WriteJsonl(out.pairs, rows);
  }
  return cmp.report;
}

OrderedJson JudgeAgreement(const std::string& human_export, const std::string& judgments) {
  const std::vector<Json> human = ReadJsonl(human_export);
  if (human.empty()) Fail(ErrorCode::kEmptyJudgments, human_export);
  const std::map<std::string, Side> critic = ResolveSides(ReadJudgments(judgments));
  OrderedJson out;
  for (Aspect aspect : {Aspect::kHumor, Aspect::kConsistency}) {
    const std::map<std::string, Side> all = HumanSides(human, aspect);
    std::map<std::string, Side> h, c;
    for (const auto& [id, side] : all) {
      auto it = critic.find(id);
      if (it == critic.end()) continue;
      h[id] = side;
      c[id] = it->second;
    }
    if (h.empty()) Fail(ErrorCode::kPairMismatch, "no pair is judged by both critic and humans");
    out[aspect == Aspect::kHumor ? "ag_h" : "ag_c"] = ComputeAgreement(h, c);
    out["n"] = h.size();
  }
  return out;
}

OrderedJson BiasAudit(const std::string& judgments, const std::string& pairs,
                      const std::string& human_export, Aspect aspect,
                      LbDenominator denominator) {
  const std::vector<Judgment> js = ReadJudgments(judgments);
  OrderedJson out;
  out["pb"] = ComputePb(js);
  if (!human_export.empty()) {
    if (pairs.empty()) Fail(ErrorCode::kInvalidArgument, "LB needs the annotation pairs file");
    const std::map<std::string, Side> critic = ResolveSides(js);
    const std::map<std::string, Side> human = HumanSides(ReadJsonl(human_export), aspect);
    std::map<std::string, PairLengths> lengths;
    for (const auto& p : ReadAnnotationPairs(pairs)) {
      if (human.count(p.id)) lengths[p.id] = {TokenCount(p.a), TokenCount(p.b)};
    }
    std::map<std::string, Side> c;
    for (const auto& [id, side] : human) {
      auto it = critic.find(id);
      if (it == critic.end()) Fail(ErrorCode::kPairMismatch, "critic has no verdict for " + id);
      c[id] = it->second;
    }
    out["lb"] = ComputeLb(human, c, lengths, denominator);
    out["lb_aspect"] = AspectName(aspect);
  }
  return out;
}

std::vector<OrderedJson> ExportJudgmentsFile(const std::string& pairs, const std::string& log,
                                             uint64_t seed, const std::string& out_path) {
  AnnotationStoreOptions opts;
  opts.seed = seed;
  opts.log_path = log;
  AnnotationStore store(ReadAnnotationPairs(pairs), opts);
  std::vector<OrderedJson> rows = store.Export();
  WriteJsonl(out_path, rows);
  return rows;
}

}  // namespace fdkd
