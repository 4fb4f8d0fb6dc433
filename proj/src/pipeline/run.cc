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

#include "pipeline/run.h"

#include <algorithm>
#include <cstdio>
#include <map>

#include "common/error.h"

namespace fdkd {
namespace {

constexpr std::pair<Objective, const char*> kObjectives[] = {
    {Objective::kFt, "ft"},     {Objective::kSd, "sd"},
    {Objective::kDpo, "dpo"},   {Objective::kBrio, "brio"},
    {Objective::kBrioDpo, "brio_dpo"},
};

std::string_view CriticKindName(CriticKind k) {
  switch (k) {
    case CriticKind::kOracle:
      return "oracle";
    case CriticKind::kMcp:
      return "mcp";
    case CriticKind::kCloze:
      return "cloze";
  }
  return "oracle";
}

CriticKind ParseCriticKind(const std::string& s) {
  if (s == "oracle") return CriticKind::kOracle;
  if (s == "mcp") return CriticKind::kMcp;
  if (s == "cloze") return CriticKind::kCloze;
  Fail(ErrorCode::kConfig, "critic.kind must be oracle, mcp or cloze, got '" + s + "'");
}

OrderedJson SgdJson(int epochs, const SgdConfig& s) {
  OrderedJson j;
  j["epochs"] = epochs;
  j["learning_rate"] = s.learning_rate;
  j["batch_size"] = s.batch_size;
  j["clip_norm"] = s.clip_norm;
  return j;
}

void ReadSgd(const Json& j, int* epochs, SgdConfig* s) {
  *epochs = j.value("epochs", *epochs);
  s->learning_rate = j.value("learning_rate", s->learning_rate);
  s->batch_size = j.value("batch_size", s->batch_size);
  s->clip_norm = j.value("clip_norm", s->clip_norm);
}

void ValidateSgd(const char* section, int epochs, const SgdConfig& s) {
  const std::string p(section);
  if (epochs < 0) Fail(ErrorCode::kConfig, p + ".epochs must be >= 0");
  if (!(s.learning_rate > 0)) Fail(ErrorCode::kConfig, p + ".learning_rate must be > 0");
  if (s.batch_size < 1) Fail(ErrorCode::kConfig, p + ".batch_size must be >= 1");
  if (!(s.clip_norm >= 0)) Fail(ErrorCode::kConfig, p + ".clip_norm must be >= 0");
}

std::shared_ptr<const LlmClient> MakeClient(EndpointConfig ep, const std::string& fixture) {
  std::shared_ptr<Transport> transport;
  if (fixture.empty()) {
    transport = std::make_shared<HttpTransport>();
  } else {
    // Replayed traffic is matched on the request body alone.
    transport = std::make_shared<FixtureTransport>(fixture);
    ep.api_key_env.clear();
    if (ep.base_url.empty()) ep.base_url = "http://fixture.invalid";
  }
  return std::make_shared<LlmClient>(std::move(ep), std::move(transport));
}

std::vector<double> Lambdas(const std::vector<RankedCandidates>& ranked, LambdaMode mode) {
  std::vector<double> out;
  out.reserve(ranked.size());
  const double global = mode == LambdaMode::kGlobal ? GlobalLambda(ranked) : 0.0;
  for (const auto& r : ranked) out.push_back(mode == LambdaMode::kGlobal ? global : InstanceLambda(r));
  return out;
}

std::string EpochName(const std::string& phase, int epoch) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s-e%02d.ckpt", phase.c_str(), epoch + 1);
  return buf;
}

}  // namespace

std::string_view ObjectiveName(Objective o) {
  for (const auto& [obj, name] : kObjectives) {
    if (obj == o) return name;
  }
  return "ft";
}

Objective ParseObjective(std::string_view s) {
  for (const auto& [obj, name] : kObjectives) {
    if (s == name) return obj;
  }
  Fail(ErrorCode::kConfig,
       "objective must be one of ft, sd, dpo, brio, brio_dpo; got '" + std::string(s) + "'");
}

void RunConfig::Validate() const {
  if (embed < 1 || hidden < 1) Fail(ErrorCode::kConfig, "model dimensions must be >= 1");
  if (!(init_scale > 0)) Fail(ErrorCode::kConfig, "model.init_scale must be > 0");
  ValidateSgd("imitation", imitation_epochs, imitation_sgd);
  ValidateSgd("feedback", feedback_epochs, feedback_sgd);
  if (data.warm_start.empty() && imitation_epochs < 1) {
    Fail(ErrorCode::kConfig, "imitation.epochs must be >= 1 without a warm start");
  }
  if (resume_epoch < 0 || resume_epoch > imitation_epochs) {
    Fail(ErrorCode::kConfig, "imitation.resume_epoch must lie in [0, imitation.epochs]");
  }
  if (objective != Objective::kFt) {
    if (feedback_epochs < 1) Fail(ErrorCode::kConfig, "feedback.epochs must be >= 1");
    if (feedback_every < 1 || feedback_every > feedback_epochs) {
      Fail(ErrorCode::kConfig, "feedback.every_epochs must lie in [1, feedback.epochs]");
    }
  }
  loss.Validate();
  if (collection.pool_size < 2) Fail(ErrorCode::kConfig, "collection.pool_size must be >= 2");
  collection.filter.Validate();
  collection.sampling.Validate();
  eval_decode.Validate();
  if (eval_limit < 1) Fail(ErrorCode::kConfig, "eval.limit must be >= 1");
  if (workers < 1) Fail(ErrorCode::kConfig, "workers must be >= 1");
  if (teacher.outputs_per_input < 1) {
    Fail(ErrorCode::kConfig, "teacher.outputs_per_input must be >= 1");
  }
  if (critic.oracle) critic.oracle->Validate();
  if (synth) synth->Validate();
}

OrderedJson RunConfig::ToJson() const {
  OrderedJson j;
  j["objective"] = ObjectiveName(objective);
  j["seed"] = seed;
  j["output_dir"] = output_dir;
  j["workers"] = workers;
  j["model"] = {{"embed", embed}, {"hidden", hidden}, {"init_scale", init_scale}};
  OrderedJson im = SgdJson(imitation_epochs, imitation_sgd);
  im["resume_from"] = resume_from;
  im["resume_epoch"] = resume_epoch;
  j["imitation"] = im;
  OrderedJson fb = SgdJson(feedback_epochs, feedback_sgd);
  fb["every_epochs"] = feedback_every;
  fb["refresh_reference"] = refresh_reference;
  const OrderedJson lj = loss.ToJson();
  for (const auto& [k, v] : lj.items()) fb[k] = v;
  j["feedback"] = fb;
  OrderedJson col;
  col["pool_size"] = collection.pool_size;
  col["top_p"] = collection.sampling.top_p;
  col["temperature"] = collection.sampling.temperature;
  col["max_len"] = collection.sampling.max_len;
  col["length_ratio_lo"] = collection.filter.length_ratio_lo;
  col["length_ratio_hi"] = collection.filter.length_ratio_hi;
  col["ngram"] = collection.filter.ngram;
  j["collection"] = col;
  j["eval"] = {{"beams", eval_decode.beams}, {"max_len", eval_decode.max_len}, {"limit", eval_limit}};
  OrderedJson cr;
  cr["kind"] = CriticKindName(critic.kind);
  cr["endpoint"] = critic.endpoint.ToJson();
  cr["fixture"] = critic.fixture;
  cr["tie_epsilon"] = critic.cloze_tie_epsilon;
  if (critic.oracle) cr["oracle"] = critic.oracle->ToJson();
  j["critic"] = cr;
  OrderedJson te;
  te["kind"] = teacher.remote ? "remote" : "synth";
  te["endpoint"] = teacher.endpoint.ToJson();
  te["fixture"] = teacher.fixture;
  te["refusal_pattern"] = teacher.refusal_pattern;
  te["outputs_per_input"] = teacher.outputs_per_input;
  j["teacher"] = te;
  if (synth) j["synth"] = synth->ToJson();
  j["data"] = {{"imitation", data.imitation},
               {"eval", data.eval},
               {"teacher_rankings", data.teacher_rankings},
               {"warm_start", data.warm_start},
               {"warm_start_hash", data.warm_start_hash}};
  return j;
}

RunConfig RunConfig::FromJson(const Json& j) {
  RequireKnownKeys(j,
                   {"objective", "seed", "output_dir", "workers", "model", "imitation", "feedback",
                    "collection", "eval", "critic", "teacher", "synth", "data"},
                   "config");
  RunConfig c;
  try {
    if (j.contains("objective")) c.objective = ParseObjective(j["objective"].get<std::string>());
    c.seed = j.value("seed", c.seed);
    c.output_dir = j.value("output_dir", c.output_dir);
    c.workers = j.value("workers", c.workers);
    if (j.contains("model")) {
      const Json& m = j["model"];
      RequireKnownKeys(m, {"embed", "hidden", "init_scale"}, "model");
      c.embed = m.value("embed", c.embed);
      c.hidden = m.value("hidden", c.hidden);
      c.init_scale = m.value("init_scale", c.init_scale);
    }
    if (j.contains("imitation")) {
      const Json& m = j["imitation"];
      RequireKnownKeys(m,
                       {"epochs", "learning_rate", "batch_size", "clip_norm", "resume_from",
                        "resume_epoch"},
                       "imitation");
      ReadSgd(m, &c.imitation_epochs, &c.imitation_sgd);
      c.resume_from = m.value("resume_from", c.resume_from);
      c.resume_epoch = m.value("resume_epoch", c.resume_epoch);
    }
    if (j.contains("feedback")) {
      const Json& m = j["feedback"];
      RequireKnownKeys(m,
                       {"epochs", "every_epochs", "learning_rate", "batch_size", "clip_norm",
                        "refresh_reference", "beta", "lambda_mode", "multitask_weight"},
                       "feedback");
      ReadSgd(m, &c.feedback_epochs, &c.feedback_sgd);
      c.feedback_every = m.value("every_epochs", c.feedback_every);
      c.refresh_reference = m.value("refresh_reference", c.refresh_reference);
      Json lj = Json::object();
      for (const char* k : {"beta", "lambda_mode", "multitask_weight"}) {
        if (m.contains(k)) lj[k] = m[k];
      }
      c.loss = ObjectiveConfig::FromJson(lj);
    }
    if (j.contains("collection")) {
      const Json& m = j["collection"];
      RequireKnownKeys(m,
                       {"pool_size", "top_p", "temperature", "max_len", "length_ratio_lo",
                        "length_ratio_hi", "ngram"},
                       "collection");
      c.collection.pool_size = m.value("pool_size", c.collection.pool_size);
      c.collection.sampling.top_p = m.value("top_p", c.collection.sampling.top_p);
      c.collection.sampling.temperature = m.value("temperature", c.collection.sampling.temperature);
      c.collection.sampling.max_len = m.value("max_len", c.collection.sampling.max_len);
      c.collection.filter.length_ratio_lo =
          m.value("length_ratio_lo", c.collection.filter.length_ratio_lo);
      c.collection.filter.length_ratio_hi =
          m.value("length_ratio_hi", c.collection.filter.length_ratio_hi);
      c.collection.filter.ngram = m.value("ngram", c.collection.filter.ngram);
    }
    if (j.contains("eval")) {
      const Json& m = j["eval"];
      RequireKnownKeys(m, {"beams", "max_len", "limit"}, "eval");
      c.eval_decode.beams = m.value("beams", c.eval_decode.beams);
      c.eval_decode.max_len = m.value("max_len", c.eval_decode.max_len);
      c.eval_limit = m.value("limit", c.eval_limit);
    }
    if (j.contains("critic")) {
      const Json& m = j["critic"];
      RequireKnownKeys(m, {"kind", "endpoint", "fixture", "oracle", "tie_epsilon"}, "critic");
      if (m.contains("kind")) c.critic.kind = ParseCriticKind(m["kind"].get<std::string>());
      if (m.contains("endpoint")) c.critic.endpoint = EndpointConfig::FromJson(m["endpoint"]);
      c.critic.fixture = m.value("fixture", c.critic.fixture);
      c.critic.cloze_tie_epsilon = m.value("tie_epsilon", c.critic.cloze_tie_epsilon);
      if (m.contains("oracle")) c.critic.oracle = OracleSpec::FromJson(m["oracle"]);
    }
    if (j.contains("teacher")) {
      const Json& m = j["teacher"];
      RequireKnownKeys(m, {"kind", "endpoint", "fixture", "refusal_pattern", "outputs_per_input"},
                       "teacher");
      const std::string kind = m.value("kind", std::string("synth"));
      if (kind != "synth" && kind != "remote") {
        Fail(ErrorCode::kConfig, "teacher.kind must be synth or remote, got '" + kind + "'");
      }
      c.teacher.remote = kind == "remote";
      if (m.contains("endpoint")) c.teacher.endpoint = EndpointConfig::FromJson(m["endpoint"]);
      c.teacher.fixture = m.value("fixture", c.teacher.fixture);
      c.teacher.refusal_pattern = m.value("refusal_pattern", c.teacher.refusal_pattern);
      c.teacher.outputs_per_input = m.value("outputs_per_input", c.teacher.outputs_per_input);
    }
    if (j.contains("synth")) c.synth = SynthTaskSpec::FromJson(j["synth"]);
    if (j.contains("data")) {
      const Json& m = j["data"];
      RequireKnownKeys(m, {"imitation", "eval", "teacher_rankings", "warm_start", "warm_start_hash"},
                       "data");
      c.data.imitation = m.value("imitation", c.data.imitation);
      c.data.eval = m.value("eval", c.data.eval);
      c.data.teacher_rankings = m.value("teacher_rankings", c.data.teacher_rankings);
      c.data.warm_start = m.value("warm_start", c.data.warm_start);
      c.data.warm_start_hash = m.value("warm_start_hash", c.data.warm_start_hash);
    }
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kConfig, e.what());
  }
  c.Validate();
  return c;
}

Json ApplyOverrides(Json doc, const std::vector<std::string>& assignments) {
  for (const auto& a : assignments) {
    const size_t eq = a.find('=');
    if (eq == std::string::npos || eq == 0) {
      Fail(ErrorCode::kConfig, "override '" + a + "' is not of the form key.path=value");
    }
    const std::string path = a.substr(0, eq);
    const std::string text = a.substr(eq + 1);
    Json value = Json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    Json* node = &doc;
    size_t start = 0;
    while (true) {
      const size_t dot = path.find('.', start);
      const std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
      if (key.empty()) Fail(ErrorCode::kConfig, "override '" + a + "' has an empty key");
      if (!node->is_object()) {
        Fail(ErrorCode::kConfig, "override '" + a + "' descends into a non-object");
      }
      if (dot == std::string::npos) {
        if (value.is_null()) {
          node->erase(key);
        } else {
          (*node)[key] = value;
        }
        break;
      }
      if (!node->contains(key)) (*node)[key] = Json::object();
      node = &(*node)[key];
      start = dot + 1;
    }
  }
  return doc;
}

std::vector<int> CollectionEpochs(int feedback_epochs, int every) {
  if (every < 1) Fail(ErrorCode::kConfig, "feedback.every_epochs must be >= 1");
  std::vector<int> out;
  for (int e = 0; e < feedback_epochs; e += every) out.push_back(e);
  return out;
}

OrderedJson RunLogEntryToJson(const RunLogEntry& e) {
  OrderedJson j;
  j["epoch"] = e.epoch;
  j["event"] = e.event;
  j["value"] = e.value;
  return j;
}

std::unique_ptr<PairJudge> MakeJudge(const RunConfig& cfg) {
  switch (cfg.critic.kind) {
    case CriticKind::kOracle: {
      if (cfg.critic.oracle) return std::make_unique<OracleJudge>(*cfg.critic.oracle);
      if (cfg.synth) return std::make_unique<OracleJudge>(cfg.synth->MakeOracle());
      Fail(ErrorCode::kConfig, "the oracle critic needs critic.oracle or a synth task");
    }
    case CriticKind::kMcp:
      return std::make_unique<McpJudge>(MakeClient(cfg.critic.endpoint, cfg.critic.fixture));
    case CriticKind::kCloze:
      return std::make_unique<ClozeJudge>(
          std::make_shared<EndpointScorer>(MakeClient(cfg.critic.endpoint, cfg.critic.fixture)),
          cfg.critic.cloze_tie_epsilon);
  }
  Fail(ErrorCode::kConfig, "unknown critic");
}

std::unique_ptr<Teacher> MakeTeacher(const RunConfig& cfg) {
  if (cfg.teacher.remote) {
    return std::make_unique<RemoteTeacher>(MakeClient(cfg.teacher.endpoint, cfg.teacher.fixture));
  }
  if (!cfg.synth) Fail(ErrorCode::kConfig, "the synthetic teacher needs a synth section");
  return std::make_unique<SynthTeacher>(*cfg.synth, cfg.synth->seed);
}

RunInputs PrepareInputs(const RunConfig& cfg, const PairJudge& judge) {
  RunInputs in;
  if (!cfg.data.warm_start.empty()) {
    in.warm_start = LoadCheckpoint(cfg.data.warm_start);
    if (!cfg.data.warm_start_hash.empty()) {
      const std::string got = CheckpointHash(*in.warm_start);
      if (got != cfg.data.warm_start_hash) {
        Fail(ErrorCode::kWarmStartMismatch,
             cfg.data.warm_start + " has hash " + got + ", expected " + cfg.data.warm_start_hash);
      }
    }
  }
  bool synthetic = false;
  if (!cfg.data.imitation.empty()) {
    in.train = ReadImitation(cfg.data.imitation);
    if (!cfg.data.eval.empty()) in.eval = ReadImitation(cfg.data.eval);
    if (!cfg.data.teacher_rankings.empty()) in.teacher_rankings = ReadRankings(cfg.data.teacher_rankings);
  } else if (cfg.synth) {
    synthetic = true;
    const SynthCorpus corpus = GenerateSynthCorpus(*cfg.synth);
    const SynthTeacher teacher(*cfg.synth, cfg.synth->seed);
    in.train = BuildImitationDataset(corpus.train, teacher, cfg.teacher.outputs_per_input, "").examples;
    in.eval = BuildImitationDataset(corpus.test, teacher, 1, "").examples;
    if (cfg.objective == Objective::kBrioDpo) {
      in.teacher_rankings = CollectTeacherRankings(corpus.train, teacher, judge, cfg.workers).rankings;
    }
  } else {
    Fail(ErrorCode::kConfig, "data.imitation or a synth section is required");
  }
  if (in.train.empty()) Fail(ErrorCode::kEmptyBatch, "no imitation examples");
  if (in.eval.empty()) {
    in.eval.assign(in.train.begin(),
                   in.train.begin() + static_cast<std::ptrdiff_t>(std::min(cfg.eval_limit, in.train.size())));
  }
  if (in.eval.size() > cfg.eval_limit) in.eval.resize(cfg.eval_limit);

  if (in.warm_start) {
    in.vocab = in.warm_start->vocab;
  } else if (synthetic) {
    in.vocab = cfg.synth->MakeVocabulary();
  } else {
    std::vector<ImitationExample> all = in.train;
    all.insert(all.end(), in.eval.begin(), in.eval.end());
    for (const auto& r : in.teacher_rankings) all.push_back({r.id, r.input, r.ranked});
    in.vocab = BuildVocabulary(all);
  }
  return in;
}

std::vector<double> TrainImitation(StudentModel* model, std::span<const SupervisedExample> data,
                                   const SgdConfig& sgd, int first_epoch, int last_epoch,
                                   const EpochHook& hook) {
  std::vector<double> losses;
  for (int e = first_epoch; e < last_epoch; ++e) {
    ModelParams good = model->params;
    try {
      losses.push_back(MleEpoch(&model->params, data, sgd, e));
    } catch (const Error& err) {
      if (err.code() == ErrorCode::kNonFiniteLoss) model->params = std::move(good);
      throw;
    }
    if (hook) hook("imitate", e, losses.back(), *model);
  }
  return losses;
}

namespace {

class Runner {
 public:
  Runner(const RunConfig& cfg, const RunInputs& in, const PairJudge& judge)
      : cfg_(cfg), in_(in), judge_(judge) {
    imitation_sgd_ = cfg.imitation_sgd;
    imitation_sgd_.seed = cfg.seed;
    feedback_sgd_ = cfg.feedback_sgd;
    feedback_sgd_.seed = cfg.seed;
    collection_ = cfg.collection;
    collection_.seed = cfg.seed;
    collection_.workers = cfg.workers;
    for (const auto& ex : in.eval) {
      eval_inputs_.push_back(ex.input);
      eval_refs_.push_back(ex.outputs.front());
    }
    for (const auto& ex : in.train) train_inputs_.push_back(ex.input);
    if (!cfg.output_dir.empty()) {
      ckpt_dir_ = JoinPath(cfg.output_dir, "checkpoints");
      MakeDirs(ckpt_dir_);
      log_path_ = JoinPath(cfg.output_dir, "run_log.jsonl");
      WriteFile(log_path_, "");
      WriteFile(JoinPath(cfg.output_dir, "resolved_config.json"), cfg.ToJson().dump(2) + "\n");
    }
  }

  RunResult Run() {
    Imitate();
    result_.warm_start = model_;
    result_.warm_start_hash = CheckpointHash(model_);
    Save("warm_start.ckpt", model_);
    for (const auto& ex : in_.train) {
      const TokenSequence input = model_.vocab.Encode(ex.input);
      auto& group = teacher_data_[ex.input];
      for (const auto& o : ex.outputs) group.push_back({input, model_.vocab.Encode(o)});
    }

    switch (cfg_.objective) {
      case Objective::kFt:
        break;
      case Objective::kSd:
      case Objective::kDpo:
      case Objective::kBrio:
        FeedbackLoop(cfg_.objective);
        break;
      case Objective::kBrioDpo:
        if (in_.teacher_rankings.empty()) {
          Fail(ErrorCode::kMissingTeacherRankings, "brio_dpo needs teacher ranking data");
        }
        TeacherBrio();
        FeedbackLoop(Objective::kDpo);
        break;
    }

    ComparisonResult final_cmp = Evaluate();
    Log(cfg_.objective == Objective::kFt ? cfg_.imitation_epochs : cfg_.feedback_epochs,
        "final_wtr", final_cmp.report.wtr_a);
    result_.model = model_;
    result_.report = final_cmp.report;
    Save("final.ckpt", model_);
    if (!cfg_.output_dir.empty()) {
      OrderedJson rep;
      rep["objective"] = ObjectiveName(cfg_.objective);
      rep["warm_start_hash"] = result_.warm_start_hash;
      rep["final_hash"] = CheckpointHash(model_);
      rep["collections"] = result_.collections;
      rep["report"] = ReportToJson(final_cmp.report);
      WriteFile(JoinPath(cfg_.output_dir, "report.json"), rep.dump(2) + "\n");
      std::vector<GenerationRecord> gens;
      for (size_t i = 0; i < eval_inputs_.size(); ++i) {
        gens.push_back({in_.eval[i].id, eval_inputs_[i], result_.eval_outputs[i]});
      }
      WriteGenerations(JoinPath(cfg_.output_dir, "eval_outputs.jsonl"), gens);
    }
    return std::move(result_);
  }

 private:
  void Log(int epoch, const std::string& event, double value) {
    RunLogEntry e{epoch, event, value};
    if (!log_path_.empty()) AppendJsonlLine(log_path_, RunLogEntryToJson(e));
    result_.log.push_back(std::move(e));
  }

  void Save(const std::string& name, const StudentModel& m) {
    if (!ckpt_dir_.empty()) SaveCheckpoint(JoinPath(ckpt_dir_, name), m);
  }

  void EpochDone(const std::string& phase, int epoch, double loss, const StudentModel& m) {
    Log(epoch, phase + "_loss", loss);
    Save(EpochName(phase, epoch), m);
  }

  // Runs one training epoch; on kNonFiniteLoss restores and saves the last
  // good parameters before rethrowing.
  template <typename Fn>
  void GuardedEpoch(const std::string& phase, int epoch, Fn fn) {
    ModelParams good = model_.params;
    double loss = 0.0;
    try {
      loss = fn();
    } catch (const Error& err) {
      if (err.code() == ErrorCode::kNonFiniteLoss) {
        model_.params = std::move(good);
        Save("last_good.ckpt", model_);
      }
      throw;
    }
    EpochDone(phase, epoch, loss, model_);
  }

  void Imitate() {
    if (in_.warm_start) {
      model_ = *in_.warm_start;
      CheckCompatible(model_.vocab, model_.params);
      return;
    }
    int first = 0;
    if (!cfg_.resume_from.empty()) {
      model_ = LoadCheckpoint(cfg_.resume_from);
      first = cfg_.resume_epoch;
    } else {
      model_ = {in_.vocab, ModelParams::RandomInit({in_.vocab.size(), cfg_.embed, cfg_.hidden},
                                                   cfg_.seed, cfg_.init_scale)};
    }
    const auto data = ToSupervised(in_.train, model_.vocab);
    try {
      TrainImitation(&model_, data, imitation_sgd_, first, cfg_.imitation_epochs,
                     [this](const std::string& phase, int e, double loss, const StudentModel& m) {
                       EpochDone(phase, e, loss, m);
                     });
    } catch (const Error& err) {
      if (err.code() == ErrorCode::kNonFiniteLoss) Save("last_good.ckpt", model_);
      throw;
    }
  }

  ComparisonResult Evaluate() {
    result_.eval_outputs = GenerateOutputs(model_, eval_inputs_, cfg_.eval_decode);
    return CompareSystems(eval_inputs_, result_.eval_outputs, eval_refs_, judge_, cfg_.workers,
                          "eval");
  }

  void BuildRanked(const std::vector<RankedCandidates>& ranked) {
    ranked_.clear();
    groups_.clear();
    for (const auto& r : ranked) {
      auto it = teacher_data_.find(model_.vocab.Decode(r.input));
      if (it == teacher_data_.end()) continue;
      ranked_.push_back(r);
      groups_.push_back(it->second);
    }
    if (ranked_.empty()) Fail(ErrorCode::kEmptyBatch, "no ranked candidates with teacher data");
    lambdas_ = Lambdas(ranked_, cfg_.loss.lambda_mode);
  }

  double BrioEpoch(int epoch) {
    return MultitaskEpoch(&model_.params, ranked_, lambdas_, groups_, cfg_.loss.multitask_weight,
                          feedback_sgd_, epoch);
  }

  void TeacherBrio() {
    BuildRanked(ToRankings(in_.teacher_rankings, model_.vocab));
    for (int e = 0; e < cfg_.feedback_epochs; ++e) {
      GuardedEpoch("teacher_brio", e, [&] { return BrioEpoch(e); });
    }
  }

  void FeedbackLoop(Objective objective) {
    const std::string phase(ObjectiveName(objective));
    const PreferenceSource source =
        judge_.name() == "oracle" ? PreferenceSource::kOracle : PreferenceSource::kTeacher;
    const ModelParams warm = model_.params;
    const auto schedule = CollectionEpochs(cfg_.feedback_epochs, cfg_.feedback_every);
    std::vector<PreferencePair> pairs;
    std::vector<ReferenceLogprobs> reference;
    std::vector<SupervisedExample> sd_data;
    for (int e = 0; e < cfg_.feedback_epochs; ++e) {
      if (std::find(schedule.begin(), schedule.end(), e) != schedule.end()) {
        Log(e, "wtr", Evaluate().report.wtr_a);
        const int round = result_.collections++;
        CollectionResult col =
            CollectPreferences(model_, train_inputs_, judge_, source, round, collection_);
        pairs = FilterDegeneratePairs(std::move(col.pairs));
        Log(e, "pairs", static_cast<double>(pairs.size()));
        Log(e, "skipped_ties", static_cast<double>(col.skipped_ties));
        Log(e, "skipped_no_pair",
            static_cast<double>(col.skipped_no_pair + col.skipped_low_diversity));
        if (!cfg_.output_dir.empty()) {
          std::vector<PreferenceRecord> rows;
          for (const auto& p : pairs) rows.push_back(ToRecord(p, model_.vocab));
          WritePreferences(
              JoinPath(cfg_.output_dir, "preferences-r" + std::to_string(round) + ".jsonl"), rows);
        }
        if (pairs.empty()) Fail(ErrorCode::kEmptyPreferenceSet, "all collected pairs degenerate");
        switch (objective) {
          case Objective::kDpo:
            reference =
                ComputeReferenceLogprobs(cfg_.refresh_reference ? model_.params : warm, pairs);
            break;
          case Objective::kSd:
            sd_data.clear();
            for (const auto& p : pairs) sd_data.push_back({p.input, p.chosen});
            break;
          default: {
            std::vector<RankedCandidates> ranked;
            for (const auto& p : pairs) ranked.push_back({p.id, p.input, {p.chosen, p.rejected}});
            BuildRanked(ranked);
          }
        }
      }
      GuardedEpoch(phase, e, [&] {
        switch (objective) {
          case Objective::kDpo:
            return DpoEpoch(&model_.params, pairs, reference, cfg_.loss.beta, feedback_sgd_, e);
          case Objective::kSd:
            return MleEpoch(&model_.params, sd_data, feedback_sgd_, e);
          default:
            return BrioEpoch(e);
        }
      });
    }
  }

  const RunConfig& cfg_;
  SgdConfig imitation_sgd_, feedback_sgd_;
  CollectionConfig collection_;
  const RunInputs& in_;
  const PairJudge& judge_;
  std::vector<std::string> eval_inputs_, eval_refs_, train_inputs_;
  std::map<std::string, std::vector<SupervisedExample>> teacher_data_;
  std::vector<RankedCandidates> ranked_;
  std::vector<double> lambdas_;
  std::vector<std::vector<SupervisedExample>> groups_;
  std::string ckpt_dir_, log_path_;
  StudentModel model_;
  RunResult result_;
};

}  // namespace

RunResult RunSchedule(const RunConfig& cfg, const RunInputs& inputs, const PairJudge& judge) {
  cfg.Validate();
  return Runner(cfg, inputs, judge).Run();
}

}  // namespace fdkd
