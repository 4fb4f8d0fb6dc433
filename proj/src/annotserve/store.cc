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

#include "annotserve/store.h"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstdio>
#include <cstring>

#include "common/error.h"
#include "common/rng.h"

namespace fdkd {

std::vector<AnnotationPair> ReadAnnotationPairs(const std::string& path) {
  std::vector<AnnotationPair> out;
  std::set<std::string> seen;
  for (const Json& row : ReadJsonl(path)) {
    AnnotationPair p;
    try {
      RequireKnownKeys(row, {"id", "input", "a", "b"}, "pairs");
      p.id = row.at("id").get<std::string>();
      p.input = row.at("input").get<std::string>();
      p.a = row.at("a").get<std::string>();
      p.b = row.at("b").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      Fail(ErrorCode::kIo, path + ": " + e.what());
    } catch (const Error& e) {
      Fail(ErrorCode::kIo, path + ": " + e.detail());
    }
    if (!seen.insert(p.id).second) Fail(ErrorCode::kIo, path + ": duplicate pair id " + p.id);
    out.push_back(std::move(p));
  }
  return out;
}

OrderedJson AnnotationTask::ToJson() const {
  OrderedJson j;
  j["task_id"] = task_id;
  j["input"] = input;
  j["slot1"] = slot1;
  j["slot2"] = slot2;
  return j;
}

std::string SlotVerdictName(SlotVerdict v) {
  switch (v) {
    case SlotVerdict::kSlot1: return "slot1";
    case SlotVerdict::kSlot2: return "slot2";
    case SlotVerdict::kTie: return "tie";
  }
  return "?";
}

SlotVerdict ParseSlotVerdict(const std::string& s) {
  if (s == "slot1") return SlotVerdict::kSlot1;
  if (s == "slot2") return SlotVerdict::kSlot2;
  if (s == "tie") return SlotVerdict::kTie;
  Fail(ErrorCode::kInvalidVerdict, s);
}

HumanJudgmentRecord HumanJudgmentRecord::FromClientJson(const Json& j) {
  RequireKnownKeys(j, {"task_id", "annotator", "humor", "consistency", "timestamp"}, "judgment");
  HumanJudgmentRecord r;
  try {
    r.task_id = j.at("task_id").get<std::string>();
    r.annotator = j.at("annotator").get<std::string>();
    const Json& humor = j.at("humor");
    const Json& consistency = j.at("consistency");
    if (!humor.is_string() || !consistency.is_string()) {
      Fail(ErrorCode::kInvalidVerdict, "verdicts must be strings");
    }
    r.humor = ParseSlotVerdict(humor.get<std::string>());
    r.consistency = ParseSlotVerdict(consistency.get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kInvalidArgument, std::string("judgment: ") + e.what());
  }
  return r;
}

std::string TaskIdForIndex(size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "t%05zu", i);
  return buf;
}

namespace {

int64_t WallClockMs() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

// Resolves a slot verdict to the candidate it names.
std::string Resolve(SlotVerdict v, bool a_first) {
  if (v == SlotVerdict::kTie) return "tie";
  const bool slot1 = v == SlotVerdict::kSlot1;
  return slot1 == a_first ? "A" : "B";
}

}  // namespace

AnnotationStore::AnnotationStore(std::vector<AnnotationPair> pairs,
                                 AnnotationStoreOptions options)
    : pairs_(std::move(pairs)), options_(std::move(options)) {
  if (!options_.clock) options_.clock = WallClockMs;
  a_first_.reserve(pairs_.size());
  for (size_t i = 0; i < pairs_.size(); ++i) {
    if (!index_.emplace(pairs_[i].id, i).second) {
      Fail(ErrorCode::kInvalidArgument, "duplicate pair id " + pairs_[i].id);
    }
    Rng rng(DeriveSeed(options_.seed, {0x51077ULL, i}));
    a_first_.push_back(rng.Bernoulli(0.5));
  }
  Replay();
}

size_t AnnotationStore::TaskIndex(const std::string& task_id) const {
  if (task_id.size() > 1 && task_id.size() < 16 && task_id[0] == 't' &&
      std::all_of(task_id.begin() + 1, task_id.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    const size_t i = std::stoull(task_id.substr(1));
    if (i < pairs_.size() && TaskIdForIndex(i) == task_id) return i;
  }
  Fail(ErrorCode::kUnknownTask, task_id);
}

AnnotationTask AnnotationStore::MakeTask(size_t i) const {
  const AnnotationPair& p = pairs_[i];
  AnnotationTask t;
  t.task_id = TaskIdForIndex(i);
  t.input = p.input;
  t.slot1 = a_first_[i] ? p.a : p.b;
  t.slot2 = a_first_[i] ? p.b : p.a;
  return t;
}

std::optional<AnnotationTask> AnnotationStore::NextTask(const std::string& annotator) const {
  std::lock_guard<std::mutex> lock(mu_);
  for (size_t i = 0; i < pairs_.size(); ++i) {
    if (!done_.count({i, annotator})) return MakeTask(i);
  }
  return std::nullopt;
}

HumanJudgmentRecord AnnotationStore::Submit(HumanJudgmentRecord record) {
  if (record.annotator.empty()) Fail(ErrorCode::kInvalidArgument, "annotator is empty");
  const size_t i = TaskIndex(record.task_id);
  std::lock_guard<std::mutex> lock(mu_);
  if (done_.count({i, record.annotator})) {
    Fail(ErrorCode::kDuplicateSubmission, record.task_id + " by " + record.annotator);
  }
  record.timestamp_ms = options_.clock();
  Stored s{i, record, a_first_[i]};
  Append(s);
  done_.insert({i, record.annotator});
  judgments_.push_back(std::move(s));
  return record;
}

void AnnotationStore::Append(const Stored& s) {
  if (options_.log_path.empty()) return;
  OrderedJson j;
  j["task_id"] = s.record.task_id;
  j["pair_id"] = pairs_[s.task].id;
  j["annotator"] = s.record.annotator;
  j["humor"] = SlotVerdictName(s.record.humor);
  j["consistency"] = SlotVerdictName(s.record.consistency);
  j["a_in_slot1"] = s.a_first;
  j["timestamp"] = s.record.timestamp_ms;
  const std::string line = j.dump() + "\n";
  const int fd = ::open(options_.log_path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) Fail(ErrorCode::kIo, options_.log_path + ": " + std::strerror(errno));
  size_t off = 0;
  bool ok = true;
  while (off < line.size()) {
    const ssize_t n = ::write(fd, line.data() + off, line.size() - off);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      ok = false;
      break;
    }
    off += static_cast<size_t>(n);
  }
  ok = ok && ::fsync(fd) == 0;
  ::close(fd);
  if (!ok) Fail(ErrorCode::kIo, "append to " + options_.log_path + " failed");
}

void AnnotationStore::Replay() {
  if (options_.log_path.empty() || !FileExists(options_.log_path)) return;
  const std::vector<std::string> lines = ReadLines(options_.log_path);
  for (size_t n = 0; n < lines.size(); ++n) {
    const std::string& line = lines[n];
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error&) {
      // A torn final line is a write that was never acknowledged. Drop it so
      // the next append starts on a fresh line.
      if (n + 1 == lines.size()) {
        std::string kept;
        for (size_t k = 0; k < n; ++k) kept += lines[k] + "\n";
        WriteFile(options_.log_path, kept);
        break;
      }
      Fail(ErrorCode::kIo, options_.log_path + ":" + std::to_string(n + 1) + ": corrupt record");
    }
    Stored s;
    try {
      const std::string pair_id = j.at("pair_id").get<std::string>();
      auto it = index_.find(pair_id);
      if (it == index_.end()) {
        Fail(ErrorCode::kIo, options_.log_path + ": pair " + pair_id + " is not in the queue");
      }
      s.task = it->second;
      s.record.task_id = TaskIdForIndex(s.task);
      s.record.annotator = j.at("annotator").get<std::string>();
      s.record.humor = ParseSlotVerdict(j.at("humor").get<std::string>());
      s.record.consistency = ParseSlotVerdict(j.at("consistency").get<std::string>());
      s.record.timestamp_ms = j.at("timestamp").get<int64_t>();
      s.a_first = j.at("a_in_slot1").get<bool>();
    } catch (const nlohmann::json::exception& e) {
      Fail(ErrorCode::kIo, options_.log_path + ":" + std::to_string(n + 1) + ": " + e.what());
    }
    if (!done_.insert({s.task, s.record.annotator}).second) {
      Fail(ErrorCode::kIo, options_.log_path + ": duplicate record for " + s.record.task_id);
    }
    judgments_.push_back(std::move(s));
  }
}

size_t AnnotationStore::judgment_count() const {
  std::lock_guard<std::mutex> lock(mu_);
  return judgments_.size();
}

std::vector<OrderedJson> AnnotationStore::Export() const {
  std::vector<Stored> snapshot;
  {
    std::lock_guard<std::mutex> lock(mu_);
    snapshot = judgments_;
  }
  std::stable_sort(snapshot.begin(), snapshot.end(), [](const Stored& x, const Stored& y) {
    return x.record.timestamp_ms < y.record.timestamp_ms;
  });
  std::vector<OrderedJson> out;
  out.reserve(snapshot.size());
  for (const Stored& s : snapshot) {
    OrderedJson j;
    j["task_id"] = pairs_[s.task].id;
    j["annotator"] = s.record.annotator;
    j["humor"] = Resolve(s.record.humor, s.a_first);
    j["consistency"] = Resolve(s.record.consistency, s.a_first);
    j["presented_order"] = s.a_first ? "forward" : "swapped";
    j["timestamp"] = s.record.timestamp_ms;
    out.push_back(std::move(j));
  }
  return out;
}

}  // namespace fdkd
