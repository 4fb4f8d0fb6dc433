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

#ifndef FDKD_COMMON_JSONL_H_
#define FDKD_COMMON_JSONL_H_

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace fdkd {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

// One JSON value per non-blank line. Throws Error(kIo) with the line number on
// parse failures.
std::vector<Json> ReadJsonl(const std::string& path);
void WriteJsonl(const std::string& path, const std::vector<OrderedJson>& rows);
void AppendJsonlLine(const std::string& path, const OrderedJson& row);

std::string ReadFile(const std::string& path);
void WriteFile(const std::string& path, const std::string& contents);
std::vector<std::string> ReadLines(const std::string& path);
bool FileExists(const std::string& path);
void MakeDirs(const std::string& path);
std::string JoinPath(const std::string& dir, const std::string& name);

// Throws Error(kConfig) naming the first key of `obj` not in `allowed`, or
// if `obj` is not an object. `section` prefixes the key in the message.
void RequireKnownKeys(const Json& obj, const std::vector<std::string>& allowed,
                      const std::string& section);

// FNV-1a over raw bytes; used to fingerprint checkpoints.
uint64_t Fnv1a64(const std::string& bytes);
std::string HexU64(uint64_t v);

}  // namespace fdkd

#endif  // FDKD_COMMON_JSONL_H_
