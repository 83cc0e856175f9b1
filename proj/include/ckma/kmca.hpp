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

#ifndef CKMA_KMCA_HPP_
#define CKMA_KMCA_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ckma/chunker.hpp"
#include "ckma/llm_backend.hpp"
#include "ckma/prompts.hpp"
#include "ckma/types.hpp"

namespace ckma {

// Knowledge minigraph construction agent.
struct KmcaConfig {
  std::size_t k = 3;   // references per chunk
  std::size_t m = 32;  // volume limit, enforced at every iteration
  std::size_t max_context_chars = 48000;
  int max_output_tokens = 2048;
  double temperature = 0.0;
  std::string model_id;
  PromptTemplates templates = PromptTemplates::defaults();
};

class ContextOverflowError : public std::runtime_error {
 public:
  ContextOverflowError(std::size_t rendered_chars, std::size_t limit,
                       std::string longest_reference_id);
  std::size_t rendered_chars() const { return rendered_chars_; }
  const std::string& longest_reference_id() const { return longest_id_; }

 private:
  std::size_t rendered_chars_;
  std::string longest_id_;
};

// Failure inside a pipeline stage; what() reads "<stage> <index>: <cause>".
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, std::size_t index, const std::string& cause)
      : std::runtime_error(stage + " " + std::to_string(index) + ": " + cause),
        stage_(std::move(stage)),
        index_(index) {}
  const std::string& stage() const { return stage_; }
  std::size_t index() const { return index_; }

 private:
  std::string stage_;
  std::size_t index_;
};

// "[id] abstract" blocks separated by blank lines.
std::string format_abstracts(const std::vector<ReferenceDocument>& refs);

std::string entity_type_list();
std::string relation_type_list();

// Graph prompt G for one chunk. prev_graph_text is R(O^{i-1}) for i >= 2.
// Throws ContextOverflowError when the user text exceeds max_context_chars.
CompletionRequest build_graph_prompt(
    const std::optional<std::string>& prev_graph_text, const Chunk& chunk,
    std::size_t m, const KmcaConfig& cfg);

// Cuts text to at most max_chars, preferring the last sentence end, then the
// last word boundary.
std::string truncate_at_sentence(const std::string& text,
                                 std::size_t max_chars);

struct KmcaIteration {
  std::size_t chunk_index;
  std::size_t backend_calls;
  std::vector<DroppedRecord> dropped;
  bool truncated_abstracts = false;
};

struct GraphConstruction {
  KnowledgeMinigraph graph;
  std::vector<Chunk> chunks;
  std::vector<KmcaIteration> iterations;
};

// Runs the iterative construction O^1 = G(chunk 1), O^i = G(R(O^{i-1}),
// chunk i) over the given chunks and returns O^I.
GraphConstruction construct_minigraph(const std::vector<Chunk>& chunks,
                                      const KmcaConfig& cfg,
                                      CompletionBackend& backend);

// Chunks instance.references with the "chunking:<id>" substream of seed, then
// constructs the graph.
GraphConstruction construct_minigraph(const QueryInstance& instance,
                                      const KmcaConfig& cfg,
                                      CompletionBackend& backend,
                                      std::uint64_t seed);

std::vector<Chunk> chunk_instance(const QueryInstance& instance, std::size_t k,
                                  std::uint64_t seed);

inline constexpr const char* kJsonReprompt =
    "Return only valid JSON matching the schema.";

}  // namespace ckma

#endif  // CKMA_KMCA_HPP_
