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

#include "llmclient/prompt.h"

#include <algorithm>
#include <cctype>

#include "common/error.h"

namespace fdkd {
namespace {

bool IsNameChar(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// Calls on_text(literal) and on_name(name) while walking `text`.
template <typename TextFn, typename NameFn>
void Scan(const std::string& text, TextFn on_text, NameFn on_name) {
  size_t i = 0;
  while (i < text.size()) {
    const size_t open = text.find('{', i);
    if (open == std::string::npos) break;
    size_t end = open + 1;
    while (end < text.size() && IsNameChar(text[end])) ++end;
    if (end < text.size() && text[end] == '}' && end > open + 1) {
      on_text(text.substr(i, open - i));
      on_name(text.substr(open + 1, end - open - 1));
      i = end + 1;
    } else {
      on_text(text.substr(i, open + 1 - i));
      i = open + 1;
    }
  }
  on_text(text.substr(std::min(i, text.size())));
}

}  // namespace

std::vector<std::string> PromptTemplate::Placeholders() const {
  std::vector<std::string> names;
  for (const auto& m : messages) {
    Scan(m.content, [](const std::string&) {},
         [&](const std::string& n) {
           if (std::find(names.begin(), names.end(), n) == names.end()) names.push_back(n);
         });
  }
  return names;
}

OrderedJson PromptTemplate::ToJson() const {
  OrderedJson j;
  j["name"] = name;
  j["messages"] = OrderedJson::array();
  for (const auto& m : messages) j["messages"].push_back({{"role", m.role}, {"content", m.content}});
  return j;
}

PromptTemplate PromptTemplate::FromJson(const Json& j) {
  RequireKnownKeys(j, {"name", "messages"}, "template");
  PromptTemplate t;
  try {
    t.name = j.value("name", std::string());
    for (const auto& m : j.at("messages")) {
      t.messages.push_back({m.at("role").get<std::string>(), m.at("content").get<std::string>()});
    }
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kConfig, std::string("template: ") + e.what());
  }
  if (t.messages.empty()) Fail(ErrorCode::kConfig, "template has no messages");
  return t;
}

std::string RenderText(const std::string& text, const Bindings& bindings) {
  std::string out;
  Scan(text, [&](const std::string& lit) { out += lit; },
       [&](const std::string& n) {
         auto it = bindings.find(n);
         if (it == bindings.end()) Fail(ErrorCode::kUnboundPlaceholder, n);
         out += it->second;
       });
  return out;
}

std::vector<ChatMessage> Render(const PromptTemplate& tmpl, const Bindings& bindings) {
  std::vector<ChatMessage> out;
  out.reserve(tmpl.messages.size());
  for (const auto& m : tmpl.messages) out.push_back({m.role, RenderText(m.content, bindings)});
  return out;
}

PromptTemplate GenerationTemplate() {
  return {"generate",
          {{"system", "You rewrite sentences so that they become funny while keeping their meaning."},
           {"user",
            "Write a humorous paraphrase of the following sentence. Reply with the paraphrase "
            "only.\n\nSentence: {input}"}}};
}

PromptTemplate McpTemplate() {
  return {"mcp",
          {{"system", "You are a careful judge of humor."},
           {"user",
            "Here is a sentence and two paraphrases of it.\n\nSentence: {input}\n\n"
            "1: {p1}\n2: {p2}\n\n"
            "Which paraphrase is the funnier one while keeping the meaning of the sentence? "
            "Answer with 1 or 2 only."}}};
}

std::string ClozeTemplate() { return "The funny paraphrase of {input} is {p1}"; }

}  // namespace fdkd
