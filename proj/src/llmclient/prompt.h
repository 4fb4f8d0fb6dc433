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

#ifndef FDKD_LLMCLIENT_PROMPT_H_
#define FDKD_LLMCLIENT_PROMPT_H_

#include <map>
#include <string>
#include <vector>

#include "common/jsonl.h"
#include "llmclient/llm_client.h"

namespace fdkd {

// Role-tagged message skeletons with {name} placeholders. Names are
// [A-Za-z0-9_]+; any other brace text is literal.
struct PromptTemplate {
  std::string name;
  std::vector<ChatMessage> messages;

  // Placeholder names in order of first appearance.
  std::vector<std::string> Placeholders() const;

  OrderedJson ToJson() const;
  static PromptTemplate FromJson(const Json& j);
};

using Bindings = std::map<std::string, std::string>;

// Single-pass substitution; substituted values are not rescanned. Throws
// kUnboundPlaceholder with the placeholder name as detail.
std::vector<ChatMessage> Render(const PromptTemplate& tmpl, const Bindings& bindings);
std::string RenderText(const std::string& text, const Bindings& bindings);

// Zero-shot humorous paraphrase instruction; binds {input}.
PromptTemplate GenerationTemplate();
// Pick-the-funnier-paraphrase instruction showing both candidates labeled
// "1" and "2"; binds {input}, {p1}, {p2}.
PromptTemplate McpTemplate();
// Cloze scoring sentence; binds {input}, {p1}.
std::string ClozeTemplate();

}  // namespace fdkd

#endif  // FDKD_LLMCLIENT_PROMPT_H_
