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

#include "textmodel/vocabulary.h"

#include <cctype>

#include "common/error.h"

namespace fdkd {
namespace {

const char* const kSpecialNames[Vocabulary::kNumSpecials] = {"<bos>", "<eos>", "<sep>",
                                                             "<pad>"};

}  // namespace

std::vector<std::string> SplitWhitespace(std::string_view text) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

Vocabulary::Vocabulary(const std::vector<std::string>& content_tokens) {
  tokens_.reserve(kNumSpecials + content_tokens.size());
  for (const char* name : kSpecialNames) tokens_.emplace_back(name);
  for (const std::string& t : content_tokens) tokens_.push_back(t);
  for (size_t i = 0; i < tokens_.size(); ++i) {
    const std::string& t = tokens_[i];
    if (t.empty() || SplitWhitespace(t).size() != 1 || SplitWhitespace(t)[0] != t) {
      Fail(ErrorCode::kInvalidArgument, "vocabulary token '" + t + "' is not a single word");
    }
    if (!index_.emplace(t, static_cast<TokenId>(i)).second) {
      Fail(ErrorCode::kInvalidArgument, "duplicate or reserved vocabulary token '" + t + "'");
    }
  }
}

bool Vocabulary::Contains(std::string_view token) const {
  return index_.count(std::string(token)) != 0;
}

TokenId Vocabulary::Id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) Fail(ErrorCode::kUnknownToken, std::string(token));
  return it->second;
}

TokenSequence Vocabulary::Encode(std::string_view text, size_t max_len) const {
  TokenSequence seq;
  for (const std::string& word : SplitWhitespace(text)) {
    auto it = index_.find(word);
    // Specials are never valid content.
    if (it == index_.end() || IsSpecial(it->second)) Fail(ErrorCode::kUnknownToken, word);
    seq.ids.push_back(it->second);
  }
  if (seq.size() > max_len) {
    Fail(ErrorCode::kSequenceTooLong,
         std::to_string(seq.size()) + " tokens > " + std::to_string(max_len));
  }
  return seq;
}

std::string Vocabulary::Decode(const TokenSequence& seq) const {
  std::string out;
  for (TokenId id : seq.ids) {
    if (id >= tokens_.size()) Fail(ErrorCode::kUnknownToken, "id " + std::to_string(id));
    if (!out.empty()) out += ' ';
    out += tokens_[id];
  }
  return out;
}

std::vector<std::string> Vocabulary::ContentTokens() const {
  return {tokens_.begin() + kNumSpecials, tokens_.end()};
}

OrderedJson Vocabulary::ToJson() const {
  OrderedJson j;
  j["tokens"] = tokens_;
  j["bos"] = kBos;
  j["eos"] = kEos;
  j["sep"] = kSep;
  j["pad"] = kPad;
  return j;
}

Vocabulary Vocabulary::FromJson(const Json& j) {
  if (!j.is_object() || !j.contains("tokens") || !j["tokens"].is_array()) {
    Fail(ErrorCode::kInvalidArgument, "vocabulary JSON needs a 'tokens' array");
  }
  auto tokens = j["tokens"].get<std::vector<std::string>>();
  if (tokens.size() < kNumSpecials) Fail(ErrorCode::kInvalidArgument, "vocabulary too small");
  for (size_t i = 0; i < kNumSpecials; ++i) {
    if (tokens[i] != kSpecialNames[i]) {
      Fail(ErrorCode::kInvalidArgument, "vocabulary specials out of order");
    }
  }
  return Vocabulary(std::vector<std::string>(tokens.begin() + kNumSpecials, tokens.end()));
}

}  // namespace fdkd
