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

#include "common/jsonl.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "common/error.h"

namespace fdkd {

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIo, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorCode::kIo, "cannot write " + path);
  out << contents;
  if (!out) Fail(ErrorCode::kIo, "short write to " + path);
}

std::vector<std::string> ReadLines(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIo, "cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

std::vector<Json> ReadJsonl(const std::string& path) {
  std::vector<Json> rows;
  size_t lineno = 0;
  for (const std::string& line : ReadLines(path)) {
    ++lineno;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      rows.push_back(Json::parse(line));
    } catch (const Json::parse_error& e) {
      Fail(ErrorCode::kIo, path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

void WriteJsonl(const std::string& path, const std::vector<OrderedJson>& rows) {
  std::string out;
  for (const auto& row : rows) {
    out += row.dump();
    out += '\n';
  }
  WriteFile(path, out);
}

void AppendJsonlLine(const std::string& path, const OrderedJson& row) {
  std::FILE* f = std::fopen(path.c_str(), "ab");
  if (!f) Fail(ErrorCode::kIo, "cannot append to " + path);
  const std::string line = row.dump() + "\n";
  const bool ok = std::fwrite(line.data(), 1, line.size(), f) == line.size() &&
                  std::fflush(f) == 0;
  std::fclose(f);
  if (!ok) Fail(ErrorCode::kIo, "short write to " + path);
}

bool FileExists(const std::string& path) { return std::filesystem::exists(path); }

void MakeDirs(const std::string& path) {
  if (path.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) Fail(ErrorCode::kIo, "cannot create " + path + ": " + ec.message());
}

std::string JoinPath(const std::string& dir, const std::string& name) {
  if (dir.empty()) return name;
  return (std::filesystem::path(dir) / name).string();
}

uint64_t Fnv1a64(const std::string& bytes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string HexU64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void RequireKnownKeys(const Json& obj, const std::vector<std::string>& allowed,
                      const std::string& section) {
  if (!obj.is_object()) Fail(ErrorCode::kConfig, section + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      Fail(ErrorCode::kConfig,
           "unknown key '" + (section.empty() ? key : section + "." + key) + "'");
    }
  }
}

}  // namespace fdkd
