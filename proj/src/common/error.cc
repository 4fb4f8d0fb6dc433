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

#include "common/error.h"

namespace fdkd {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kOk: return "Ok";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kConfig: return "ConfigError";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kUnknownToken: return "UnknownToken";
    case ErrorCode::kSequenceTooLong: return "SequenceTooLong";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kEmptyOutput: return "EmptyOutput";
    case ErrorCode::kDegenerateModel: return "DegenerateModel";
    case ErrorCode::kBadCheckpoint: return "BadCheckpoint";
    case ErrorCode::kEmptyBatch: return "EmptyBatch";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kEmptyRanking: return "EmptyRanking";
    case ErrorCode::kAuthError: return "AuthError";
    case ErrorCode::kTimeout: return "Timeout";
    case ErrorCode::kRateLimited: return "RateLimited";
    case ErrorCode::kMalformedResponse: return "MalformedResponse";
    case ErrorCode::kUnboundPlaceholder: return "UnboundPlaceholder";
    case ErrorCode::kTransport: return "TransportError";
    case ErrorCode::kFixtureMiss: return "FixtureMiss";
    case ErrorCode::kUnparseableVerdict: return "UnparseableVerdict";
    case ErrorCode::kLogprobsUnavailable: return "LogprobsUnavailable";
    case ErrorCode::kInsufficientDiversity: return "InsufficientDiversity";
    case ErrorCode::kNoEligiblePair: return "NoEligiblePair";
    case ErrorCode::kEmptyPreferenceSet: return "EmptyPreferenceSet";
    case ErrorCode::kMissingTeacherRankings: return "MissingTeacherRankings";
    case ErrorCode::kWarmStartMismatch: return "WarmStartMismatch";
    case ErrorCode::kEmptyJudgments: return "EmptyJudgments";
    case ErrorCode::kOrderMismatch: return "OrderMismatch";
    case ErrorCode::kPairMismatch: return "PairMismatch";
    case ErrorCode::kDuplicateSubmission: return "DuplicateSubmission";
    case ErrorCode::kUnknownTask: return "UnknownTask";
    case ErrorCode::kInvalidVerdict: return "InvalidVerdict";
  }
  return "Unknown";
}

}  // namespace fdkd
