// Copyright 2026 The CKMA Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ckma/prompts.hpp"

#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ckma {

namespace {

bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

std::string strip_final_newlines(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

void require_placeholders(const std::string& name, const std::string& tmpl,
                          std::initializer_list<const char*> keys) {
  for (const char* key : keys) {
    if (tmpl.find(std::string("{") + key + "}") == std::string::npos) {
      throw std::invalid_argument("template " + name +
                                  " lacks placeholder {" + key + "}");
    }
  }
}

std::string* field(PromptTemplates& t, const std::string& name) {
  if (name == "graph_system") return &t.graph_system;
  if (name == "graph_initial") return &t.graph_initial;
  if (name == "graph_iterative") return &t.graph_iterative;
  if (name == "graph_demonstration") return &t.graph_demonstration;
  if (name == "summary_system") return &t.summary_system;
  if (name == "summary_chunk") return &t.summary_chunk;
  if (name == "summary_expert") return &t.summary_expert;
  if (name == "summary_demonstration") return &t.summary_demonstration;
  return nullptr;
}

}  // namespace

std::string render_template(std::string_view tmpl,
                            const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      std::size_t j = i + 1;
      while (j < tmpl.size() && is_ident_char(tmpl[j])) ++j;
      if (j < tmpl.size() && tmpl[j] == '}' && j > i + 1) {
        auto it = values.find(std::string(tmpl.substr(i + 1, j - i - 1)));
        if (it != values.end()) {
          out += it->second;
          i = j + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

PromptTemplates PromptTemplates::defaults() {
  PromptTemplates t;
  for (const auto& [name, text] : builtin_template_files()) {
    if (std::string* f = field(t, name)) *f = strip_final_newlines(text);
  }
  t.check();
  return t;
}

PromptTemplates PromptTemplates::load(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) {
    throw std::invalid_argument("templates directory not found: " + dir);
  }
  PromptTemplates t = defaults();
  for (const auto& [name, unused] : builtin_template_files()) {
    const fs::path p = fs::path(dir) / (name + ".txt");
    if (!fs::exists(p)) continue;
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot read template " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    *field(t, name) = strip_final_newlines(ss.str());
  }
  t.check();
  return t;
}

void PromptTemplates::check() const {
  require_placeholders("graph_initial", graph_initial, {"abstracts", "m"});
  require_placeholders("graph_iterative", graph_iterative,
                       {"prior_graph", "abstracts", "m"});
  require_placeholders("summary_chunk", summary_chunk,
                       {"query_abstract", "items", "graph_text"});
  require_placeholders("summary_expert", summary_expert,
                       {"query_abstract", "items", "graph_text"});
}

}  // namespace ckma
