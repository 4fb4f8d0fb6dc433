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

#include <cmath>
#include <filesystem>
#include <thread>

#include "annotserve/server.h"
#include "annotserve/store.h"
#include "common/error.h"
#include "evalkit/metrics.h"
#include "gtest/gtest.h"
#include "httplib.h"

namespace fdkd {
namespace {

std::string TempPath(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove(p);
  return p.string();
}

std::vector<AnnotationPair> MakePairs(size_t n) {
  std::vector<AnnotationPair> out;
  for (size_t i = 0; i < n; ++i) {
    out.push_back({"dpo-vs-ft-" + std::to_string(i), "input " + std::to_string(i),
                   "first candidate " + std::to_string(i),
                   "second candidate " + std::to_string(i)});
  }
  return out;
}

AnnotationStoreOptions Opts(const std::string& log = {}) {
  AnnotationStoreOptions o;
  o.log_path = log;
  auto t = std::make_shared<int64_t>(1000);
  o.clock = [t] { return (*t)++; };
  return o;
}

HumanJudgmentRecord Rec(const std::string& task, const std::string& who, SlotVerdict humor,
                        SlotVerdict consistency = SlotVerdict::kTie) {
  HumanJudgmentRecord r;
  r.task_id = task;
  r.annotator = who;
  r.humor = humor;
  r.consistency = consistency;
  return r;
}

// Smallest k with P(X <= k) >= q for X ~ Binomial(n, 1/2).
int BinomialQuantile(int n, double q) {
  double cdf = 0.0;
  for (int k = 0; k <= n; ++k) {
    cdf += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) -
                    n * std::log(2.0));
    if (cdf >= q) return k;
  }
  return n;
}

TEST(AnnotationStoreTest, FreshQueueHidesProvenance) {
  AnnotationStore store(MakePairs(100), Opts());
  auto task = store.NextTask("ann1");
  ASSERT_TRUE(task.has_value());
  const std::string payload = task->ToJson().dump();
  EXPECT_EQ(payload.find("dpo"), std::string::npos);
  EXPECT_EQ(payload.find("\"a\""), std::string::npos);
  EXPECT_EQ(payload.find("a_in_slot1"), std::string::npos);
  EXPECT_EQ(task->ToJson().size(), 4u);
}

TEST(AnnotationStoreTest, RepeatedNextReturnsSameTaskUntilSubmitted) {
  AnnotationStore store(MakePairs(3), Opts());
  auto t1 = store.NextTask("ann1");
  auto t2 = store.NextTask("ann1");
  ASSERT_TRUE(t1 && t2);
  EXPECT_EQ(t1->task_id, t2->task_id);
  store.Submit(Rec(t1->task_id, "ann1", SlotVerdict::kSlot1));
  auto t3 = store.NextTask("ann1");
  ASSERT_TRUE(t3);
  EXPECT_NE(t3->task_id, t1->task_id);
  // Another annotator still starts at the head of the queue.
  EXPECT_EQ(store.NextTask("ann2")->task_id, t1->task_id);
}

TEST(AnnotationStoreTest, ExhaustedQueueReturnsNone) {
  AnnotationStore store(MakePairs(4), Opts());
  while (auto t = store.NextTask("ann1")) store.Submit(Rec(t->task_id, "ann1", SlotVerdict::kTie));
  EXPECT_FALSE(store.NextTask("ann1").has_value());
  EXPECT_TRUE(store.NextTask("ann2").has_value());
}

TEST(AnnotationStoreTest, SlotAssignmentWithinBinomialBounds) {
  const int lo = BinomialQuantile(100, 0.005);
  const int hi = BinomialQuantile(100, 0.995);
  for (uint64_t seed : {1, 2, 3, 4, 5}) {
    AnnotationStoreOptions o = Opts();
    o.seed = seed;
    AnnotationStore store(MakePairs(100), o);
    int a_first = 0;
    for (size_t i = 0; i < 100; ++i) a_first += store.a_in_slot1(i);
    EXPECT_GE(a_first, lo) << "seed " << seed;
    EXPECT_LE(a_first, hi) << "seed " << seed;
  }
}

TEST(AnnotationStoreTest, SlotAssignmentIsSeeded) {
  AnnotationStoreOptions o = Opts();
  o.seed = 9;
  AnnotationStore s1(MakePairs(50), o);
  AnnotationStore s2(MakePairs(50), o);
  o.seed = 10;
  AnnotationStore s3(MakePairs(50), o);
  bool differs = false;
  for (size_t i = 0; i < 50; ++i) {
    EXPECT_EQ(s1.a_in_slot1(i), s2.a_in_slot1(i));
    differs |= s1.a_in_slot1(i) != s3.a_in_slot1(i);
  }
  EXPECT_TRUE(differs);
}

TEST(AnnotationStoreTest, SubmitRoundTripsThroughExport) {
  AnnotationStore store(MakePairs(2), Opts());
  auto t = store.NextTask("ann1");
  store.Submit(Rec(t->task_id, "ann1", SlotVerdict::kSlot1, SlotVerdict::kTie));
  auto rows = store.Export();
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0]["task_id"], "dpo-vs-ft-0");
  EXPECT_EQ(rows[0]["annotator"], "ann1");
  EXPECT_EQ(rows[0]["consistency"], "tie");
  EXPECT_EQ(rows[0]["humor"], store.a_in_slot1(0) ? "A" : "B");
}

TEST(AnnotationStoreTest, ExportResolvesSlotToCandidate) {
  // Find a task that shows candidate b first.
  AnnotationStore store(MakePairs(20), Opts());
  size_t i = 0;
  while (store.a_in_slot1(i)) ++i;
  ASSERT_LT(i, 20u);
  const std::string id = TaskIdForIndex(i);
  store.Submit(Rec(id, "ann1", SlotVerdict::kSlot1, SlotVerdict::kSlot2));
  auto rows = store.Export();
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0]["humor"], "B");
  EXPECT_EQ(rows[0]["consistency"], "A");
  EXPECT_EQ(rows[0]["presented_order"], "swapped");
}

TEST(AnnotationStoreTest, DuplicateSubmissionRejected) {
  AnnotationStore store(MakePairs(2), Opts());
  store.Submit(Rec("t00000", "ann1", SlotVerdict::kSlot1));
  try {
    store.Submit(Rec("t00000", "ann1", SlotVerdict::kSlot2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDuplicateSubmission);
  }
  EXPECT_NO_THROW(store.Submit(Rec("t00000", "ann2", SlotVerdict::kSlot2)));
  EXPECT_EQ(store.judgment_count(), 2u);
}

TEST(AnnotationStoreTest, UnknownTaskRejected) {
  AnnotationStore store(MakePairs(2), Opts());
  for (const char* id : {"t00002", "dpo-vs-ft-0", "t0", "", "t-0001"}) {
    try {
      store.Submit(Rec(id, "ann1", SlotVerdict::kSlot1));
      FAIL() << id;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kUnknownTask) << id;
    }
  }
}

TEST(AnnotationStoreTest, InvalidVerdictRejected) {
  Json body = {{"task_id", "t00000"}, {"annotator", "a"}, {"humor", "slot3"},
               {"consistency", "tie"}};
  try {
    HumanJudgmentRecord::FromClientJson(body);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidVerdict);
  }
  body["humor"] = 1;
  EXPECT_THROW(HumanJudgmentRecord::FromClientJson(body), Error);
}

TEST(AnnotationStoreTest, EmptyStoreExportsNothing) {
  AnnotationStore store(MakePairs(3), Opts());
  EXPECT_TRUE(store.Export().empty());
}

TEST(AnnotationStoreTest, ExportIsIdempotentAndOrderedByTimestamp) {
  AnnotationStoreOptions o = Opts();
  // Clock runs backwards so submission order and timestamp order differ.
  auto t = std::make_shared<int64_t>(100);
  o.clock = [t] { return (*t)--; };
  AnnotationStore store(MakePairs(3), o);
  store.Submit(Rec("t00000", "a", SlotVerdict::kSlot1));
  store.Submit(Rec("t00001", "a", SlotVerdict::kSlot1));
  store.Submit(Rec("t00002", "a", SlotVerdict::kSlot1));
  auto e1 = store.Export();
  auto e2 = store.Export();
  EXPECT_EQ(e1, e2);
  ASSERT_EQ(e1.size(), 3u);
  EXPECT_EQ(e1[0]["task_id"], "dpo-vs-ft-2");
  EXPECT_EQ(e1[2]["task_id"], "dpo-vs-ft-0");
}

TEST(AnnotationStoreTest, AckedJudgmentsSurviveRestart) {
  const std::string log = TempPath("fdkd_annot_replay.jsonl");
  std::vector<OrderedJson> before;
  {
    AnnotationStore store(MakePairs(5), Opts(log));
    store.Submit(Rec("t00001", "ann1", SlotVerdict::kSlot2, SlotVerdict::kSlot1));
    store.Submit(Rec("t00003", "ann2", SlotVerdict::kTie));
    before = store.Export();
  }
  AnnotationStore reopened(MakePairs(5), Opts(log));
  EXPECT_EQ(reopened.Export(), before);
  EXPECT_EQ(reopened.NextTask("ann1")->task_id, "t00000");
  try {
    reopened.Submit(Rec("t00001", "ann1", SlotVerdict::kSlot1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDuplicateSubmission);
  }
}

TEST(AnnotationStoreTest, TornTailIsDroppedOnReplay) {
  const std::string log = TempPath("fdkd_annot_torn.jsonl");
  {
    AnnotationStore store(MakePairs(3), Opts(log));
    store.Submit(Rec("t00000", "ann1", SlotVerdict::kSlot1));
  }
  {
    std::FILE* f = std::fopen(log.c_str(), "ab");
    std::fputs("{\"task_id\":\"t00001\",\"pair", f);
    std::fclose(f);
  }
  AnnotationStore store(MakePairs(3), Opts(log));
  EXPECT_EQ(store.judgment_count(), 1u);
  store.Submit(Rec("t00001", "ann1", SlotVerdict::kSlot1));
  AnnotationStore again(MakePairs(3), Opts(log));
  EXPECT_EQ(again.judgment_count(), 2u);
}

TEST(AnnotationStoreTest, ExportFeedsHumanSides) {
  AnnotationStore store(MakePairs(1), Opts());
  const bool a1 = store.a_in_slot1(0);
  // Two annotators prefer candidate a for humor, one prefers b.
  const SlotVerdict pick_a = a1 ? SlotVerdict::kSlot1 : SlotVerdict::kSlot2;
  const SlotVerdict pick_b = a1 ? SlotVerdict::kSlot2 : SlotVerdict::kSlot1;
  store.Submit(Rec("t00000", "x", pick_a));
  store.Submit(Rec("t00000", "y", pick_a));
  store.Submit(Rec("t00000", "z", pick_b));
  std::vector<Json> rows;
  for (const auto& r : store.Export()) rows.push_back(Json::parse(r.dump()));
  auto sides = HumanSides(rows, Aspect::kHumor);
  EXPECT_EQ(sides.at("dpo-vs-ft-0"), Side::kA);
}

TEST(AnnotationStoreTest, ConcurrentSubmissionsAllLand) {
  const std::string log = TempPath("fdkd_annot_concurrent.jsonl");
  AnnotationStore store(MakePairs(50), Opts(log));
  std::vector<std::thread> threads;
  for (int w = 0; w < 4; ++w) {
    threads.emplace_back([&store, w] {
      const std::string who = "ann" + std::to_string(w);
      while (auto t = store.NextTask(who)) store.Submit(Rec(t->task_id, who, SlotVerdict::kTie));
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(store.judgment_count(), 200u);
  AnnotationStore reopened(MakePairs(50), Opts(log));
  EXPECT_EQ(reopened.judgment_count(), 200u);
}

TEST(AnnotServeConfigTest, RejectsUnknownKeys) {
  EXPECT_THROW(AnnotServeConfig::FromJson(Json{{"pairs", "p"}, {"prot", 1}}), Error);
  EXPECT_THROW(AnnotServeConfig::FromJson(Json{{"log", "l"}}), Error);
  auto c = AnnotServeConfig::FromJson(Json{{"pairs", "p"}, {"port", 0}});
  EXPECT_EQ(c.port, 0);
  EXPECT_EQ(AnnotServeConfig::FromJson(Json::parse(c.ToJson().dump())).ToJson(), c.ToJson());
}

class AnnotationServerTest : public ::testing::Test {
 protected:
  void SetUp() override {
    store_ = std::make_unique<AnnotationStore>(MakePairs(3), Opts());
    server_ = std::make_unique<AnnotationServer>(store_.get());
    port_ = server_->Bind("127.0.0.1", 0);
    thread_ = std::thread([this] { server_->Serve(); });
    server_->WaitUntilReady();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
  }
  void TearDown() override {
    server_->Stop();
    thread_.join();
  }

  httplib::Result Post(const Json& body) {
    return client_->Post("/api/judgments", body.dump(), "application/json");
  }

  std::unique_ptr<AnnotationStore> store_;
  std::unique_ptr<AnnotationServer> server_;
  std::unique_ptr<httplib::Client> client_;
  std::thread thread_;
  int port_ = 0;
};

TEST_F(AnnotationServerTest, Health) {
  auto res = client_->Get("/api/health");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  auto j = Json::parse(res->body);
  EXPECT_EQ(j["status"], "ok");
  EXPECT_EQ(j["tasks"], 3);
}

TEST_F(AnnotationServerTest, AnnotationFlow) {
  auto res = client_->Get("/api/tasks/next?annotator=ann1");
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200);
  EXPECT_EQ(res->body.find("dpo"), std::string::npos);
  const Json task = Json::parse(res->body)["task"];
  const Json body = {{"task_id", task["task_id"]}, {"annotator", "ann1"}, {"humor", "slot1"},
                     {"consistency", "slot2"}};
  res = Post(body);
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  res = Post(body);
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 409);
  EXPECT_EQ(Json::parse(res->body)["error"], "DuplicateSubmission");

  res = client_->Get("/api/export");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->body, store_->Export()[0].dump() + "\n");
}

TEST_F(AnnotationServerTest, ErrorStatuses) {
  auto res = Post({{"task_id", "t00009"}, {"annotator", "a"}, {"humor", "tie"},
                   {"consistency", "tie"}});
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 404);
  EXPECT_EQ(Json::parse(res->body)["error"], "UnknownTask");
  res = Post({{"task_id", "t00000"}, {"annotator", "a"}, {"humor", "slot3"},
              {"consistency", "tie"}});
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  EXPECT_EQ(Json::parse(res->body)["error"], "InvalidVerdict");
  res = client_->Post("/api/judgments", "{not json", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  res = client_->Get("/api/tasks/next");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
}

TEST_F(AnnotationServerTest, ExhaustedQueueReturnsNullTask) {
  for (int i = 0; i < 3; ++i) {
    const Json task =
        Json::parse(client_->Get("/api/tasks/next?annotator=solo")->body)["task"];
    ASSERT_TRUE(task.is_object());
    ASSERT_EQ(Post({{"task_id", task["task_id"]}, {"annotator", "solo"}, {"humor", "tie"},
                    {"consistency", "tie"}})
                  ->status,
              200);
  }
  auto res = client_->Get("/api/tasks/next?annotator=solo");
  ASSERT_TRUE(res);
  EXPECT_TRUE(Json::parse(res->body)["task"].is_null());
}

}  // namespace
}  // namespace fdkd
