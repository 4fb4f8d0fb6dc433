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

#ifndef FDKD_ANNOTSERVE_STORE_H_
#define FDKD_ANNOTSERVE_STORE_H_

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "common/jsonl.h"

namespace fdkd {

// One line of the pairs file: {"id", "input", "a", "b"}.
struct AnnotationPair {
  std::string id;
  std::string input;
  std::string a;
  std::string b;
};

std::vector<AnnotationPair> ReadAnnotationPairs(const std::string& path);

// What an annotator sees. task_id is an opaque queue handle, so pair ids
// chosen by the experimenter (which often name the systems) stay server side.
struct AnnotationTask {
  std::string task_id;
  std::string input;
  std::string slot1;
  std::string slot2;

  OrderedJson ToJson() const;
};

enum class SlotVerdict { kSlot1, kSlot2, kTie };

std::string SlotVerdictName(SlotVerdict v);
SlotVerdict ParseSlotVerdict(const std::string& s);  // throws kInvalidVerdict

struct HumanJudgmentRecord {
  std::string task_id;  // opaque id from AnnotationTask
  std::string annotator;
  SlotVerdict humor = SlotVerdict::kTie;
  SlotVerdict consistency = SlotVerdict::kTie;
  int64_t timestamp_ms = 0;  // assigned by the store

  // Parses a client submission {"task_id", "annotator", "humor",
  // "consistency"}. A client "timestamp" is accepted and ignored.
  static HumanJudgmentRecord FromClientJson(const Json& j);
};

struct AnnotationStoreOptions {
  uint64_t seed = 1;
  // Append-only judgment log; replayed on construction. Empty keeps
  // judgments in memory only.
  std::string log_path;
  // Milliseconds since the epoch; replaceable for tests.
  std::function<int64_t()> clock;
};

// Thread safe. Every mutation goes through one mutex and is appended to the
// log (flushed and fsynced) before Submit returns.
class AnnotationStore {
 public:
  AnnotationStore(std::vector<AnnotationPair> pairs, AnnotationStoreOptions options);

  // First task in queue order this annotator has not judged; nullopt when the
  // queue is exhausted for them.
  std::optional<AnnotationTask> NextTask(const std::string& annotator) const;

  // Throws kUnknownTask, kDuplicateSubmission, kInvalidArgument (empty
  // annotator) or kIo. Returns the stored record with its timestamp.
  HumanJudgmentRecord Submit(HumanJudgmentRecord record);

  // One object per judgment, ordered by timestamp (log order breaks ties):
  // {"task_id": <pair id>, "annotator", "humor": "A|B|tie",
  //  "consistency": "A|B|tie", "presented_order": "forward|swapped",
  //  "timestamp"}. "forward" means candidate a was shown in slot 1.
  std::vector<OrderedJson> Export() const;

  size_t task_count() const { return pairs_.size(); }
  size_t judgment_count() const;
  // True when candidate a occupies slot 1 of task i.
  bool a_in_slot1(size_t i) const { return a_first_[i]; }

 private:
  struct Stored {
    size_t task = 0;
    HumanJudgmentRecord record;
    bool a_first = true;  // as presented, persisted with the record
  };

  size_t TaskIndex(const std::string& task_id) const;  // throws kUnknownTask
  AnnotationTask MakeTask(size_t i) const;
  void Replay();
  void Append(const Stored& s);

  std::vector<AnnotationPair> pairs_;
  std::vector<bool> a_first_;
  std::map<std::string, size_t> index_;
  AnnotationStoreOptions options_;

  mutable std::mutex mu_;
  std::vector<Stored> judgments_;
  std::set<std::pair<size_t, std::string>> done_;  // (task, annotator)
};

std::string TaskIdForIndex(size_t i);

}  // namespace fdkd

#endif  // FDKD_ANNOTSERVE_STORE_H_
