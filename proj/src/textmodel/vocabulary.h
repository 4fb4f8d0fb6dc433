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

#ifndef FDKD_TEXTMODEL_VOCABULARY_H_
#define FDKD_TEXTMODEL_VOCABULARY_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "common/jsonl.h"

namespace fdkd {

using TokenId = uint32_t;

inline constexpr size_t kDefaultMaxSequenceLength = 32;

struct TokenSequence {
  std::vector<TokenId> ids;

  size_t size() const { return ids.size(); }
  bool empty() const { return ids.empty(); }
  bool operator==(const TokenSequence&) const = default;
  auto operator<=>(const TokenSequence&) const = default;
};

// Whitespace-token vocabulary. Ids 0..3 are always the specials, in the order
// <bos>, <eos>, <sep>, <pad>; content tokens follow in the order given.
class Vocabulary {
 public:
  static constexpr TokenId kBos = 0;
  static constexpr TokenId kEos = 1;
  static constexpr TokenId kSep = 2;
  static constexpr TokenId kPad = 3;
  static constexpr size_t kNumSpecials = 4;

  Vocabulary() : Vocabulary(std::vector<std::string>{}) {}
  // Throws kInvalidArgument on duplicate, empty, or reserved-name tokens.
  explicit Vocabulary(const std::vector<std::string>& content_tokens);

  size_t size() const { return tokens_.size(); }
  const std::string& Token(TokenId id) const { return tokens_.at(id); }
  bool Contains(std::string_view token) const;
  TokenId Id(std::string_view token) const;  // throws kUnknownToken
  bool IsSpecial(TokenId id) const { return id < kNumSpecials; }

  TokenSequence Encode(std::string_view text,
                       size_t max_len = kDefaultMaxSequenceLength) const;
  std::string Decode(const TokenSequence& seq) const;

  const std::vector<std::string>& tokens() const { return tokens_; }
  std::vector<std::string> ContentTokens() const;

  OrderedJson ToJson() const;
  static Vocabulary FromJson(const Json& j);

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

std::vector<std::string> SplitWhitespace(std::string_view text);

}  // namespace fdkd

#endif  // FDKD_TEXTMODEL_VOCABULARY_H_
