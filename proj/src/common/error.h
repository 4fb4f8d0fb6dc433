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

#ifndef FDKD_COMMON_ERROR_H_
#define FDKD_COMMON_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace fdkd {

// Every failure the core can raise. The numeric values are part of the C ABI
// (they are returned verbatim as fdkd_status), so only append.
enum class ErrorCode : int {
  kOk = 0,
  kInvalidArgument = 1,
  kConfig = 2,
  kIo = 3,
  kUnknownToken = 10,
  kSequenceTooLong = 11,
  kShapeMismatch = 12,
  kEmptyOutput = 13,
  kDegenerateModel = 14,
  kBadCheckpoint = 15,
  kEmptyBatch = 20,
  kNonFiniteLoss = 21,
  kEmptyRanking = 22,
  kAuthError = 30,
  kTimeout = 31,
  kRateLimited = 32,
  kMalformedResponse = 33,
  kUnboundPlaceholder = 34,
  kTransport = 35,
  kFixtureMiss = 36,
  kUnparseableVerdict = 40,
  kLogprobsUnavailable = 41,
  kInsufficientDiversity = 50,
  kNoEligiblePair = 51,
  kEmptyPreferenceSet = 60,
  kMissingTeacherRankings = 61,
  kWarmStartMismatch = 62,
  kEmptyJudgments = 70,
  kOrderMismatch = 71,
  kPairMismatch = 72,
  kDuplicateSubmission = 80,
  kUnknownTask = 81,
  kInvalidVerdict = 82,
};

std::string_view ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(ErrorCodeName(code)) +
                           (detail.empty() ? "" : ": " + detail)),
        code_(code),
        detail_(detail) {}

  ErrorCode code() const { return code_; }
  // The message without the code prefix, e.g. the offending token.
  const std::string& detail() const { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string& detail = {}) {
  throw Error(code, detail);
}

}  // namespace fdkd

#endif  // FDKD_COMMON_ERROR_H_
