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

#ifndef CKMA_MPSA_HPP_
#define CKMA_MPSA_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ckma/chunker.hpp"
#include "ckma/llm_backend.hpp"
#include "ckma/prompts.hpp"
#include "ckma/types.hpp"

namespace ckma {

// Multiple path summarization agent.
struct MpsaConfig {
  std::size_t experts = 3;
  double temperature = 0.0;
  // Temperature for expert calls only; the single-path ablation runs
  // experts = 1 with this set to 0.7.
  std::optional<double> expert_temperature;
  int max_output_tokens = 1024;
  std::string model_id;
  PromptTemplates templates = PromptTemplates::defaults();
};

struct ChunkSummary {
  std::size_t chunk_index;
  std::string text;
};

using Permutation = std::vector<std::size_t>;

struct ExpertSummary {
  std::size_t expert_index;
  Permutation permutation;
  std::string text;
};

struct ReviewOutput {
  std::string final_text;
  std::size_t selected_expert = 0;
  std::vector<ExpertSummary> all_experts;
  std::vector<double> agreement_scores;
  std::vector<ChunkSummary> chunk_summaries;
};

inline constexpr const char* kNoGraphMarker = "(no graph available)";

std::string graph_context_text(const KnowledgeMinigraph& graph);

// Prompt S(A, chunk abstracts, O^I).
CompletionRequest build_chunk_prompt(const std::string& query_abstract,
                                     const Chunk& chunk,
                                     const KnowledgeMinigraph& graph,
                                     const MpsaConfig& cfg);

// Prompt P_e: the chunk prompt with the abstracts replaced by the chunk
// summaries in permutation order.
CompletionRequest build_expert_prompt(const std::string& query_abstract,
                                      const std::vector<ChunkSummary>& summaries,
                                      const Permutation& perm,
                                      const KnowledgeMinigraph& graph,
                                      const MpsaConfig& cfg);

ChunkSummary summarize_chunk(const std::string& query_abstract,
                             const Chunk& chunk,
                             const KnowledgeMinigraph& graph,
                             CompletionBackend& backend,
                             const MpsaConfig& cfg = {});

// min(e_count, i_count!) distinct permutations of {0..i_count-1}. Expert 0 is
// always the identity; the rest are drawn uniformly without replacement.
std::vector<Permutation> sample_permutations(std::size_t i_count,
                                             std::size_t e_count,
                                             std::uint64_t seed);

ExpertSummary expert_summarize(const std::string& query_abstract,
                               const std::vector<ChunkSummary>& summaries,
                               const Permutation& perm,
                               const KnowledgeMinigraph& graph,
                               CompletionBackend& backend,
                               const MpsaConfig& cfg = {},
                               std::size_t expert_index = 0);

// Picks the candidate with the largest summed ROUGE-1 recall against its
// peers (candidate e as reference). Ties go to the lowest index.
ReviewOutput route(const std::vector<ExpertSummary>& candidates);

// Chunk summaries, permutations from the "permutations:<id>" substream of
// seed, expert summaries, routing. I + E_eff backend calls.
ReviewOutput generate_review(const QueryInstance& instance,
                             const KnowledgeMinigraph& graph,
                             const MpsaConfig& cfg,
                             const std::vector<Chunk>& chunks,
                             CompletionBackend& backend, std::uint64_t seed);

}  // namespace ckma

#endif  // CKMA_MPSA_HPP_
