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

#ifndef CKMA_PROMPTS_HPP_
#define CKMA_PROMPTS_HPP_

#include <map>
#include <string>
#include <string_view>

namespace ckma {

// Replaces every {name} whose name is a key of values, in one left-to-right
// pass (substituted text is not rescanned). Other braces are left alone, so
// JSON inside templates needs no escaping.
std::string render_template(std::string_view tmpl,
                            const std::map<std::string, std::string>& values);

// All prompt text used by the pipeline. Defaults are compiled in from the
// templates/ directory of the source tree.
struct PromptTemplates {
  std::string graph_system;
  std::string graph_initial;    // {entity_types} {relation_types} {m}
                                // {demonstration} {abstracts}
  std::string graph_iterative;  // as above plus {prior_graph}
  std::string graph_demonstration;
  std::string summary_system;
  std::string summary_chunk;    // {query_abstract} {items} {graph_text}
                                // {demonstration}
  std::string summary_expert;
  std::string summary_demonstration;

  static PromptTemplates defaults();

  // Defaults overridden by any <name>.txt present in dir (graph_initial.txt,
  // summary_expert.txt, ...). Throws std::invalid_argument when a template
  // lacks a required placeholder.
  static PromptTemplates load(const std::string& dir);

  void check() const;
};

// Name -> compiled-in file contents.
const std::map<std::string, std::string>& builtin_template_files();

}  // namespace ckma

#endif  // CKMA_PROMPTS_HPP_
