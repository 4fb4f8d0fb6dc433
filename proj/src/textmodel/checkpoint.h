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

#ifndef FDKD_TEXTMODEL_CHECKPOINT_H_
#define FDKD_TEXTMODEL_CHECKPOINT_H_

#include <string>

#include "textmodel/model.h"
#include "textmodel/vocabulary.h"

namespace fdkd {

struct StudentModel {
  Vocabulary vocab;
  ModelParams params;
};

// Binary layout (little-endian):
//   "FDKD" | u32 version=1 | u32 vocab | u32 d_embed | u32 d_hidden
//   per tensor, in ModelParams::tensors() order: u32 rows | u32 cols | f32[rows*cols]
//   trailer: vocabulary JSON (UTF-8) up to end of file
// Values are narrowed to float32 on write.
std::string SerializeCheckpoint(const StudentModel& model);
StudentModel DeserializeCheckpoint(const std::string& bytes);  // throws kBadCheckpoint

void SaveCheckpoint(const std::string& path, const StudentModel& model);
StudentModel LoadCheckpoint(const std::string& path);

// Fingerprint of the serialized form; equal hashes mean bitwise-equal files.
std::string CheckpointHash(const StudentModel& model);

}  // namespace fdkd

#endif  // FDKD_TEXTMODEL_CHECKPOINT_H_
