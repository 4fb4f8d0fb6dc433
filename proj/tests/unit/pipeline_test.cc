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

#include <algorithm>
#include <filesystem>
#include <set>

#include "common/error.h"
#include "gtest/gtest.h"
#include "pipeline/run.h"

namespace fdkd {
namespace {

std::string TempPath(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

SynthTaskSpec SmallSpec(size_t train) {
  SynthTaskSpec s;
  s.train = train;
  s.val = 20;
  s.test = 50;
  return s;
}

class FixedTeacher : public Teacher {
 public:
  explicit FixedTeacher(std::map<std::string, std::vector<std::string>> outputs)
      : outputs_(std::move(outputs)) {}
  std::vector<std::string> Generate(const std::string& input, size_t, size_t n) const override {
    std::vector<std::string> out = outputs_.at(input);
    out.resize(std::min(n, out.size()));
    return out;
  }

 private:
  std::map<std::string, std::vector<std::string>> outputs_;
};

// Always prefers whichever candidate is shown first.
class FirstSlotJudge : public PairJudge {
 public:
  Judgment Judge(const std::string&, const std::string&, const std::string&) const override {
    Judgment j;
    j.verdict = Verdict::kFirst;
    j.judge = name();
    return j;
  }
  std::string name() const override { return "first-slot"; }
};

TEST(ImitationDataTest, TwoInputsThreeOutputsGiveSixPairs) {
  const SynthTaskSpec spec = SmallSpec(10);
  SynthTeacher teacher(spec, 1);
  const auto built = BuildImitationDataset({"c1 c2 f0 f1", "c3 f2 c4 c5"}, teacher, 3, "");
  ASSERT_EQ(built.examples.size(), 2u);
  EXPECT_EQ(built.refused_inputs, 0u);
  EXPECT_EQ(ToSupervised(built.examples, spec.MakeVocabulary()).size(), 6u);
  EXPECT_EQ(built.examples[1].id, "ex-1");
}

TEST(ImitationDataTest, RefusedInputIsDroppedWhole) {
  FixedTeacher teacher({{"a b", {"b a", "I'm sorry, I cannot", "a b"}}, {"c d", {"d c", "c d", "d"}}});
  const auto built = BuildImitationDataset({"a b", "c d"}, teacher, 3, "i'm sorry|i cannot");
  EXPECT_EQ(built.refused_inputs, 1u);
  ASSERT_EQ(built.examples.size(), 1u);
  EXPECT_EQ(built.examples[0].input, "c d");
  EXPECT_EQ(built.examples[0].id, "ex-1");
}

TEST(ImitationDataTest, EmptyTeacherOutputCountsAsRefusal) {
  FixedTeacher teacher({{"a b", {"b a", ""}}});
  EXPECT_EQ(BuildImitationDataset({"a b"}, teacher, 2, "").refused_inputs, 1u);
}

TEST(SynthTeacherTest, KeepsContentAndAddsDistinctStyle) {
  const SynthTaskSpec spec = SmallSpec(10);
  const std::string input = "c3 c7 c1 c9";
  const auto outs = SynthTeacherOutputs(spec, input, 20, 5);
  ASSERT_EQ(outs.size(), 20u);
  std::set<size_t> style_counts;
  for (const auto& o : outs) {
    std::vector<std::string> content, style;
    for (const auto& w : SplitWhitespace(o)) (w[0] == 'c' ? content : style).push_back(w);
    EXPECT_EQ(content, (std::vector<std::string>{"c3", "c7", "c1", "c9"})) << o;
    EXPECT_EQ(std::set<std::string>(style.begin(), style.end()).size(), style.size()) << o;
    for (const auto& s : style) EXPECT_EQ(s[0], 's');
    EXPECT_GE(style.size(), 1u);
    EXPECT_LE(style.size(), 3u);
    style_counts.insert(style.size());
  }
  EXPECT_EQ(style_counts.size(), 3u);
  EXPECT_EQ(SynthTeacherOutputs(spec, input, 20, 5), outs);
  EXPECT_NE(SynthTeacherOutputs(spec, input, 20, 6), outs);
}

TEST(SynthTeacherTest, ShuffledVariantIsAPermutation) {
  SynthTaskSpec spec = SmallSpec(10);
  spec.shuffle_content = true;
  bool reordered = false;
  for (const auto& o : SynthTeacherOutputs(spec, "c3 c7 c1 c9 c4", 20, 1)) {
    std::vector<std::string> content;
    for (const auto& w : SplitWhitespace(o)) {
      if (w[0] == 'c') content.push_back(w);
    }
    reordered |= content != std::vector<std::string>{"c3", "c7", "c1", "c9", "c4"};
    std::sort(content.begin(), content.end());
    EXPECT_EQ(content, (std::vector<std::string>{"c1", "c3", "c4", "c7", "c9"}));
  }
  EXPECT_TRUE(reordered);
}

TEST(SynthTeacherTest, TeacherOutputScoresAtLeastTheBareInput) {
  const SynthTaskSpec spec = SmallSpec(300);
  const OracleSpec oracle = spec.MakeOracle();
  const auto corpus = GenerateSynthCorpus(spec);
  for (const auto& in : corpus.train) {
    const double bare = oracle.Score(in, in);
    for (const auto& o : SynthTeacherOutputs(spec, in, 3, 1)) {
      // F1 = 1 and at least one style word; outputs are never longer than
      // the knee allows (content <= input length, style <= 3, input >= 4).
      EXPECT_GE(oracle.Score(in, o), bare) << in << " -> " << o;
      EXPECT_GE(oracle.Score(in, o), 2.5);
    }
  }
}

TEST(SynthCorpusTest, SplitsAreDistinctAndTrainGrowsByAppending) {
  const auto small = GenerateSynthCorpus(SmallSpec(100));
  const auto big = GenerateSynthCorpus(SmallSpec(300));
  EXPECT_EQ(small.test, big.test);
  EXPECT_EQ(small.val, big.val);
  ASSERT_EQ(big.train.size(), 300u);
  EXPECT_TRUE(std::equal(small.train.begin(), small.train.end(), big.train.begin()));
  std::set<std::string> all(big.train.begin(), big.train.end());
  all.insert(big.val.begin(), big.val.end());
  all.insert(big.test.begin(), big.test.end());
  EXPECT_EQ(all.size(), 370u);
  for (const auto& in : big.train) {
    const auto words = SplitWhitespace(in);
    EXPECT_GE(words.size(), 4u);
    EXPECT_LE(words.size(), 8u);
  }
}

TEST(ImitationTrainingTest, LossStrictlyDecreasesOverFirstFiveEpochs) {
  const SynthTaskSpec spec;  // the default seeded corpus
  const auto corpus = GenerateSynthCorpus(spec);
  const auto data = BuildImitationDataset(corpus.train, SynthTeacher(spec, spec.seed), 3, "");
  StudentModel model{spec.MakeVocabulary(), {}};
  model.params = ModelParams::RandomInit({model.vocab.size(), 32, 64}, 1);
  const auto sup = ToSupervised(data.examples, model.vocab);
  const auto losses = TrainImitation(&model, sup, SgdConfig{}, 0, 5);
  ASSERT_EQ(losses.size(), 5u);
  for (size_t e = 1; e < losses.size(); ++e) EXPECT_LT(losses[e], losses[e - 1]) << "epoch " << e;
}

TEST(ImitationTrainingTest, ResumeFromCheckpointReproducesNextEpochBitwise) {
  const SynthTaskSpec spec = SmallSpec(150);
  const auto data = BuildImitationDataset(GenerateSynthCorpus(spec).train,
                                          SynthTeacher(spec, spec.seed), 3, "");
  StudentModel model{spec.MakeVocabulary(), {}};
  model.params = ModelParams::RandomInit({model.vocab.size(), 16, 24}, 3);
  const auto sup = ToSupervised(data.examples, model.vocab);
  const SgdConfig sgd{0.5, 8, 7, 0.0};

  std::string epoch5;
  StudentModel straight = model;
  const auto losses = TrainImitation(&straight, sup, sgd, 0, 6,
                                     [&](const std::string&, int e, double, const StudentModel& m) {
                                       if (e == 4) epoch5 = SerializeCheckpoint(m);
                                     });
  ASSERT_FALSE(epoch5.empty());
  StudentModel resumed = DeserializeCheckpoint(epoch5);
  const auto again = TrainImitation(&resumed, sup, sgd, 5, 6);
  ASSERT_EQ(again.size(), 1u);
  EXPECT_EQ(again[0], losses[5]);
  EXPECT_EQ(resumed.params.flat().size(), straight.params.flat().size());
  EXPECT_TRUE(std::equal(resumed.params.flat().begin(), resumed.params.flat().end(),
                         straight.params.flat().begin()));
}

TEST(ImitationTrainingTest, EmptyDatasetIsEmptyBatch) {
  StudentModel model{Vocabulary({"a"}), {}};
  model.params = ModelParams::RandomInit({model.vocab.size(), 4, 4}, 1);
  try {
    TrainImitation(&model, {}, SgdConfig{}, 0, 1);
    FAIL() << "expected EmptyBatch";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyBatch);
  }
}

TEST(ScheduleTest, CollectionEpochArithmetic) {
  EXPECT_EQ(CollectionEpochs(10, 10), (std::vector<int>{0}));
  EXPECT_EQ(CollectionEpochs(10, 1).size(), 10u);
  EXPECT_EQ(CollectionEpochs(10, 2), (std::vector<int>{0, 2, 4, 6, 8}));
  EXPECT_EQ(CollectionEpochs(10, 5), (std::vector<int>{0, 5}));
}

TEST(PreferenceHygieneTest, DegeneratePairsAreFiltered) {
  const TokenSequence a{{4, 5}}, b{{5, 4}};
  std::vector<PreferencePair> pairs = {{"p0", a, a, b}, {"p1", a, b, b}, {"p2", a, b, a}};
  const auto kept = FilterDegeneratePairs(pairs);
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[0].id, "p0");
  EXPECT_EQ(kept[1].id, "p2");
}

TEST(TeacherRankingTest, OracleRanksMoreStyleFirst) {
  const SynthTaskSpec spec = SmallSpec(10);
  OracleJudge judge(spec.MakeOracle());
  FixedTeacher teacher({{"c1 c2 f0 c3", {"c1 s0 c2 c3", "s1 c1 s2 c2 s3 c3"}},
                        {"c4 c5 f1 f2", {"c4 c5 s0", "c4 c5 s0"}}});
  const auto r = CollectTeacherRankings({"c1 c2 f0 c3", "c4 c5 f1 f2"}, teacher, judge, 1);
  ASSERT_EQ(r.rankings.size(), 1u);
  EXPECT_EQ(r.skipped, 1u);
  EXPECT_EQ(r.rankings[0].ranked, (std::vector<std::string>{"s1 c1 s2 c2 s3 c3", "c1 s0 c2 c3"}));
  EXPECT_EQ(r.rankings[0].id, "t-0");
}

TEST(TeacherRankingTest, PositionalDisagreementIsSkipped) {
  FixedTeacher teacher({{"x", {"a", "b"}}});
  FirstSlotJudge judge;
  const auto r = CollectTeacherRankings({"x"}, teacher, judge, 1);
  EXPECT_TRUE(r.rankings.empty());
  EXPECT_EQ(r.skipped, 1u);
}

RunConfig TinyConfig(Objective objective) {
  RunConfig cfg;
  cfg.objective = objective;
  cfg.synth = SmallSpec(120);
  cfg.embed = 8;
  cfg.hidden = 16;
  cfg.imitation_epochs = 2;
  cfg.feedback_epochs = 3;
  cfg.feedback_every = 1;
  cfg.feedback_sgd.learning_rate = 0.05;
  cfg.eval_limit = 20;
  cfg.eval_decode.beams = 2;
  return cfg;
}

TEST(CollectionTest, PairsAreConsistentAndLengthBounded) {
  RunConfig cfg = TinyConfig(Objective::kDpo);
  auto judge = MakeJudge(cfg);
  const RunInputs in = PrepareInputs(cfg, *judge);
  StudentModel model{in.vocab, ModelParams::RandomInit({in.vocab.size(), 8, 16}, 2, 0.5)};
  std::vector<std::string> inputs;
  for (const auto& ex : in.train) inputs.push_back(ex.input);
  CollectionConfig cc;
  cc.seed = 4;
  const auto col = CollectPreferences(model, inputs, *judge, PreferenceSource::kOracle, 0, cc);
  ASSERT_FALSE(col.pairs.empty());
  EXPECT_EQ(col.pairs.size() + col.skipped_ties + col.skipped_no_pair + col.skipped_low_diversity,
            inputs.size());
  const OracleSpec& oracle = static_cast<const OracleJudge&>(*judge).spec();
  for (const auto& p : col.pairs) {
    const std::string input = in.vocab.Decode(p.input);
    EXPECT_GT(oracle.Score(input, in.vocab.Decode(p.chosen)),
              oracle.Score(input, in.vocab.Decode(p.rejected)));
    const double a = static_cast<double>(p.chosen.size()), b = static_cast<double>(p.rejected.size());
    EXPECT_LE(std::max(a, b) / std::min(a, b), cc.filter.length_ratio_hi);
    EXPECT_EQ(p.preference_prob, 1.0);
  }
}

TEST(CollectionTest, AlwaysFirstJudgeYieldsNoPreferences) {
  RunConfig cfg = TinyConfig(Objective::kDpo);
  auto oracle = MakeJudge(cfg);
  const RunInputs in = PrepareInputs(cfg, *oracle);
  StudentModel model{in.vocab, ModelParams::RandomInit({in.vocab.size(), 8, 16}, 2, 0.5)};
  std::vector<std::string> inputs = {in.train[0].input, in.train[1].input};
  FirstSlotJudge judge;
  try {
    CollectPreferences(model, inputs, judge, PreferenceSource::kTeacher, 0, CollectionConfig{});
    FAIL() << "expected EmptyPreferenceSet";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyPreferenceSet);
  }
}

size_t CountEvents(const RunResult& r, const std::string& event) {
  return static_cast<size_t>(std::count_if(r.log.begin(), r.log.end(),
                                           [&](const RunLogEntry& e) { return e.event == event; }));
}

TEST(RunScheduleTest, OneWtrEntryPerCollection) {
  RunConfig cfg = TinyConfig(Objective::kDpo);
  auto judge = MakeJudge(cfg);
  const RunInputs in = PrepareInputs(cfg, *judge);
  const RunResult every = RunSchedule(cfg, in, *judge);
  EXPECT_EQ(every.collections, 3);
  EXPECT_EQ(CountEvents(every, "wtr"), 3u);
  EXPECT_EQ(CountEvents(every, "imitate_loss"), 2u);
  EXPECT_EQ(CountEvents(every, "dpo_loss"), 3u);

  cfg.feedback_every = 3;
  const RunResult once = RunSchedule(cfg, in, *judge);
  EXPECT_EQ(once.collections, 1);
  EXPECT_EQ(CountEvents(once, "wtr"), 1u);
  EXPECT_EQ(once.warm_start_hash, every.warm_start_hash);
}

TEST(RunScheduleTest, FtRunsNoFeedback) {
  RunConfig cfg = TinyConfig(Objective::kFt);
  auto judge = MakeJudge(cfg);
  const RunResult r = RunSchedule(cfg, PrepareInputs(cfg, *judge), *judge);
  EXPECT_EQ(r.collections, 0);
  EXPECT_EQ(CountEvents(r, "wtr"), 0u);
  EXPECT_EQ(CountEvents(r, "final_wtr"), 1u);
  EXPECT_EQ(CheckpointHash(r.model), r.warm_start_hash);
  EXPECT_EQ(r.report.n, 20u);
}

TEST(RunScheduleTest, SdAndBrioBranchFromTheSameWarmStart) {
  RunConfig cfg = TinyConfig(Objective::kSd);
  cfg.feedback_epochs = 1;
  auto judge = MakeJudge(cfg);
  const RunInputs in = PrepareInputs(cfg, *judge);
  const RunResult sd = RunSchedule(cfg, in, *judge);
  cfg.objective = Objective::kBrio;
  const RunResult brio = RunSchedule(cfg, in, *judge);
  EXPECT_EQ(sd.warm_start_hash, brio.warm_start_hash);
  EXPECT_EQ(CountEvents(sd, "sd_loss"), 1u);
  EXPECT_EQ(CountEvents(brio, "brio_loss"), 1u);
  EXPECT_NE(CheckpointHash(sd.model), CheckpointHash(brio.model));
}

TEST(RunScheduleTest, BrioDpoNeedsTeacherRankings) {
  RunConfig cfg = TinyConfig(Objective::kBrioDpo);
  auto judge = MakeJudge(cfg);
  RunInputs in = PrepareInputs(cfg, *judge);
  ASSERT_FALSE(in.teacher_rankings.empty());
  const RunResult r = RunSchedule(cfg, in, *judge);
  EXPECT_EQ(CountEvents(r, "teacher_brio_loss"), 3u);
  EXPECT_EQ(CountEvents(r, "dpo_loss"), 3u);

  in.teacher_rankings.clear();
  try {
    RunSchedule(cfg, in, *judge);
    FAIL() << "expected MissingTeacherRankings";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingTeacherRankings);
  }
}

TEST(RunScheduleTest, IdenticalConfigsGiveIdenticalRuns) {
  RunConfig cfg = TinyConfig(Objective::kDpo);
  cfg.workers = 3;
  auto judge = MakeJudge(cfg);
  const RunInputs in = PrepareInputs(cfg, *judge);
  const RunResult a = RunSchedule(cfg, in, *judge);
  cfg.workers = 1;
  const RunResult b = RunSchedule(cfg, in, *judge);
  EXPECT_EQ(SerializeCheckpoint(a.model), SerializeCheckpoint(b.model));
  ASSERT_EQ(a.log.size(), b.log.size());
  for (size_t i = 0; i < a.log.size(); ++i) {
    EXPECT_EQ(a.log[i].event, b.log[i].event);
    EXPECT_EQ(a.log[i].value, b.log[i].value) << a.log[i].event;
  }
  EXPECT_EQ(a.report, b.report);
}

TEST(RunScheduleTest, WritesArtifactsAndVerifiesWarmStartHash) {
  const std::string dir = TempPath("fdkd_run_test");
  std::filesystem::remove_all(dir);
  RunConfig cfg = TinyConfig(Objective::kDpo);
  cfg.feedback_epochs = 2;
  cfg.output_dir = dir;
  auto judge = MakeJudge(cfg);
  const RunResult r = RunSchedule(cfg, PrepareInputs(cfg, *judge), *judge);
  for (const char* f : {"run_log.jsonl", "resolved_config.json", "report.json", "eval_outputs.jsonl",
                        "preferences-r0.jsonl", "checkpoints/imitate-e02.ckpt",
                        "checkpoints/dpo-e02.ckpt", "checkpoints/warm_start.ckpt"}) {
    EXPECT_TRUE(std::filesystem::exists(JoinPath(dir, f))) << f;
  }
  const auto log = ReadJsonl(JoinPath(dir, "run_log.jsonl"));
  ASSERT_EQ(log.size(), r.log.size());
  EXPECT_EQ(log[0]["event"], "imitate_loss");
  EXPECT_EQ(RunConfig::FromJson(Json::parse(ReadFile(JoinPath(dir, "resolved_config.json")))).ToJson(),
            cfg.ToJson());

  RunConfig from_warm = cfg;
  from_warm.output_dir.clear();
  from_warm.data.warm_start = JoinPath(dir, "checkpoints/warm_start.ckpt");
  from_warm.data.warm_start_hash = r.warm_start_hash;
  const RunResult again = RunSchedule(from_warm, PrepareInputs(from_warm, *judge), *judge);
  EXPECT_EQ(SerializeCheckpoint(again.model), SerializeCheckpoint(r.model));

  from_warm.data.warm_start_hash = "0000000000000000";
  try {
    PrepareInputs(from_warm, *judge);
    FAIL() << "expected WarmStartMismatch";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kWarmStartMismatch);
  }
  std::filesystem::remove_all(dir);
}

TEST(RunScheduleTest, FeedbackRaisesMeanOracleScoreOverWarmStart) {
  RunConfig cfg;
  cfg.objective = Objective::kDpo;
  cfg.synth = SynthTaskSpec{};
  cfg.synth->train = 600;
  cfg.hidden = 64;
  cfg.init_scale = 0.3;
  cfg.imitation_epochs = 6;
  cfg.imitation_sgd = {0.2, 16, 1, 1.0};
  cfg.feedback_epochs = 4;
  cfg.feedback_every = 4;
  cfg.feedback_sgd = {0.02, 16, 1, 1.0};
  cfg.eval_decode.max_len = 12;
  auto judge = MakeJudge(cfg);
  const RunInputs in = PrepareInputs(cfg, *judge);
  ASSERT_EQ(in.eval.size(), 200u);
  const RunResult r = RunSchedule(cfg, in, *judge);
  std::vector<std::string> inputs;
  for (const auto& ex : in.eval) inputs.push_back(ex.input);
  DecodeConfig greedy = cfg.eval_decode;
  greedy.beams = 1;
  const auto before = GenerateOutputs(r.warm_start, inputs, greedy);
  const auto after = GenerateOutputs(r.model, inputs, greedy);
  const OracleSpec& oracle = static_cast<const OracleJudge&>(*judge).spec();
  double sum_before = 0.0, sum_after = 0.0;
  for (size_t i = 0; i < inputs.size(); ++i) {
    sum_before += oracle.Score(inputs[i], before[i]);
    sum_after += oracle.Score(inputs[i], after[i]);
  }
  EXPECT_GT(sum_after / 200.0, sum_before / 200.0);
}

TEST(RunConfigTest, RejectsUnknownKeysAtAnyDepth) {
  for (const char* text : {R"({"objectve": "dpo"})", R"({"feedback": {"epoch": 3}})",
                           R"({"synth": {"oracle": {"w_f2": 1}}})", R"({"critic": {"kind": "gpt"}})",
                           R"({"objective": "rlhf"})", R"({"feedback": {"every_epochs": 11}, "objective": "dpo"})"}) {
    try {
      RunConfig::FromJson(Json::parse(text));
      ADD_FAILURE() << "accepted " << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kConfig) << text;
    }
  }
}

TEST(RunConfigTest, DottedOverridesAndRoundTrip) {
  Json doc = Json::parse(R"({"objective": "dpo", "feedback": {"epochs": 10}})");
  doc = ApplyOverrides(doc, {"feedback.every_epochs=5", "feedback.lambda_mode=global",
                             "model.hidden=96", "output_dir=runs/a"});
  const RunConfig cfg = RunConfig::FromJson(doc);
  EXPECT_EQ(cfg.objective, Objective::kDpo);
  EXPECT_EQ(cfg.feedback_every, 5);
  EXPECT_EQ(cfg.loss.lambda_mode, LambdaMode::kGlobal);
  EXPECT_EQ(cfg.hidden, 96u);
  EXPECT_EQ(cfg.output_dir, "runs/a");
  EXPECT_EQ(RunConfig::FromJson(Json::parse(cfg.ToJson().dump())).ToJson(), cfg.ToJson());
  EXPECT_THROW(ApplyOverrides(doc, {"feedback.epochs"}), Error);
  EXPECT_THROW(ApplyOverrides(doc, {"objective.x=1"}), Error);
}

}  // namespace
}  // namespace fdkd
