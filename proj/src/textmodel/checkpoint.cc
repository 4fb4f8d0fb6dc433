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

#include "textmodel/checkpoint.h"

#include <cstring>

#include "common/error.h"
#include "common/jsonl.h"

namespace fdkd {
namespace {

constexpr uint32_t kVersion = 1;

void PutU32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void PutF32(std::string& out, float f) {
  uint32_t bits;
  std::memcpy(&bits, &f, sizeof(bits));
  PutU32(out, bits);
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  uint32_t U32() {
    if (pos_ + 4 > bytes_.size()) Fail(ErrorCode::kBadCheckpoint, "truncated");
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  float F32() {
    const uint32_t bits = U32();
    float f;
    std::memcpy(&f, &bits, sizeof(f));
    return f;
  }

  std::string Rest() const { return bytes_.substr(pos_); }
  size_t pos() const { return pos_; }

 private:
  const std::string& bytes_;
  size_t pos_ = 0;
};

}  // namespace

std::string SerializeCheckpoint(const StudentModel& model) {
  CheckCompatible(model.vocab, model.params);
  const ModelDims& d = model.params.dims();
  std::string out = "FDKD";
  PutU32(out, kVersion);
  PutU32(out, static_cast<uint32_t>(d.vocab));
  PutU32(out, static_cast<uint32_t>(d.embed));
  PutU32(out, static_cast<uint32_t>(d.hidden));
  for (const TensorView& t : model.params.tensors()) {
    PutU32(out, static_cast<uint32_t>(t.rows));
    PutU32(out, static_cast<uint32_t>(t.cols));
    const double* p = model.params.data(t);
    for (size_t i = 0; i < t.size(); ++i) PutF32(out, static_cast<float>(p[i]));
  }
  out += model.vocab.ToJson().dump();
  return out;
}

StudentModel DeserializeCheckpoint(const std::string& bytes) {
  if (bytes.size() < 4 || bytes.compare(0, 4, "FDKD") != 0) {
    Fail(ErrorCode::kBadCheckpoint, "missing FDKD magic");
  }
  const std::string body = bytes.substr(4);
  Reader r(body);
  const uint32_t version = r.U32();
  if (version != kVersion) Fail(ErrorCode::kBadCheckpoint, "unsupported version " + std::to_string(version));
  ModelDims dims;
  dims.vocab = r.U32();
  dims.embed = r.U32();
  dims.hidden = r.U32();
  ModelParams params(dims);
  for (const TensorView& t : params.tensors()) {
    const uint32_t rows = r.U32();
    const uint32_t cols = r.U32();
    if (rows != t.rows || cols != t.cols) {
      Fail(ErrorCode::kBadCheckpoint, "tensor shape " + std::to_string(rows) + "x" +
                                          std::to_string(cols) + " does not match header");
    }
    double* p = params.data(t);
    for (size_t i = 0; i < t.size(); ++i) p[i] = static_cast<double>(r.F32());
  }
  Vocabulary vocab;
  try {
    vocab = Vocabulary::FromJson(Json::parse(r.Rest()));
  } catch (const Json::exception& e) {
    Fail(ErrorCode::kBadCheckpoint, std::string("vocabulary trailer: ") + e.what());
  } catch (const Error& e) {
    Fail(ErrorCode::kBadCheckpoint, std::string("vocabulary trailer: ") + e.what());
  }
  if (vocab.size() != dims.vocab) Fail(ErrorCode::kBadCheckpoint, "vocabulary size mismatch");
  return {std::move(vocab), std::move(params)};
}

void SaveCheckpoint(const std::string& path, const StudentModel& model) {
  WriteFile(path, SerializeCheckpoint(model));
}

StudentModel LoadCheckpoint(const std::string& path) {
  return DeserializeCheckpoint(ReadFile(path));
}

std::string CheckpointHash(const StudentModel& model) {
  return HexU64(Fnv1a64(SerializeCheckpoint(model)));
}

}  // namespace fdkd
