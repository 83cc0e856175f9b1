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

#include "ckma/mpsa.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "ckma/kmca.hpp"
#include "ckma/parallel.hpp"
#include "ckma/random.hpp"
#include "ckma/rouge.hpp"

namespace ckma {

namespace {

CompletionRequest summary_request(const std::string& tmpl,
                                  const std::string& query_abstract,
                                  const std::string& items,
                                  const KnowledgeMinigraph& graph,
                                  const MpsaConfig& cfg, double temperature) {
  CompletionRequest req;
  req.system_text = cfg.templates.summary_system;
  req.user_text = render_template(
      tmpl, {{"query_abstract", query_abstract},
             {"items", items},
             {"graph_text", graph_context_text(graph)},
             {"demonstration", cfg.templates.summary_demonstration}});
  req.temperature = temperature;
  req.max_output_tokens = cfg.max_output_tokens;
  req.model_id = cfg.model_id;
  return req;
}

std::string require_text(std::string text, const char* what) {
  if (trim(text).empty()) {
    throw BackendError(std::string("empty ") + what + " from backend");
  }
  return text;
}

// min(n!, cap) without overflow.
std::size_t capped_factorial(std::size_t n, std::size_t cap) {
  std::size_t f = 1;
  for (std::size_t i = 2; i <= n; ++i) {
    if (f > cap / i) return cap + 1;
    f *= i;
  }
  return f;
}

}  // namespace

std::string graph_context_text(const KnowledgeMinigraph& graph) {
  return graph.empty() ? std::string(kNoGraphMarker) : minigraph_to_text(graph);
}

CompletionRequest build_chunk_prompt(const std::string& query_abstract,
                                     const Chunk& chunk,
                                     const KnowledgeMinigraph& graph,
                                     const MpsaConfig& cfg) {
  return summary_request(cfg.templates.summary_chunk, query_abstract,
                         format_abstracts(chunk.references), graph, cfg,
                         cfg.temperature);
}

CompletionRequest build_expert_prompt(const std::string& query_abstract,
                                      const std::vector<ChunkSummary>& summaries,
                                      const Permutation& perm,
                                      const KnowledgeMinigraph& graph,
                                      const MpsaConfig& cfg) {
  if (perm.size() != summaries.size()) {
    throw std::invalid_argument("expert prompt: permutation size " +
                                std::to_string(perm.size()) + " != " +
                                std::to_string(summaries.size()) +
                                " chunk summaries");
  }
  std::string items;
  for (std::size_t pos = 0; pos < perm.size(); ++pos) {
    if (perm[pos] >= summaries.size()) {
      throw std::invalid_argument("expert prompt: permutation out of range");
    }
    if (!items.empty()) items += "\n\n";
    items += "Summary " + std::to_string(pos + 1) + ":\n";
    items += summaries[perm[pos]].text;
  }
  return summary_request(cfg.templates.summary_expert, query_abstract, items,
                         graph, cfg,
                         cfg.expert_temperature.value_or(cfg.temperature));
}

ChunkSummary summarize_chunk(const std::string& query_abstract,
                             const Chunk& chunk,
                             const KnowledgeMinigraph& graph,
                             CompletionBackend& backend,
                             const MpsaConfig& cfg) {
  try {
    const auto req = build_chunk_prompt(query_abstract, chunk, graph, cfg);
    return {chunk.index,
            require_text(backend.complete(req).text, "chunk summary")};
  } catch (const std::exception& e) {
    throw StageError("mpsa chunk summary", chunk.index, e.what());
  }
}

std::vector<Permutation> sample_permutations(std::size_t i_count,
                                             std::size_t e_count,
                                             std::uint64_t seed) {
  if (i_count < 1 || e_count < 1) {
    throw std::invalid_argument("sample_permutations: counts must be >= 1");
  }
  Permutation identity(i_count);
  std::iota(identity.begin(), identity.end(), std::size_t{0});

  std::vector<Permutation> out;
  const std::size_t total = capped_factorial(i_count, e_count);
  if (total <= e_count) {
    Permutation p = identity;
    do {
      out.push_back(p);
    } while (std::next_permutation(p.begin(), p.end()));
    return out;
  }

  std::mt19937_64 rng(seed);
  std::set<Permutation> seen{identity};
  out.push_back(identity);
  while (out.size() < e_count) {
    Permutation p = identity;
    shuffle_in_place(p, rng);
    if (seen.insert(p).second) out.push_back(std::move(p));
  }
  return out;
}

ExpertSummary expert_summarize(const std::string& query_abstract,
                               const std::vector<ChunkSummary>& summaries,
                               const Permutation& perm,
                               const KnowledgeMinigraph& graph,
                               CompletionBackend& backend,
                               const MpsaConfig& cfg,
                               std::size_t expert_index) {
  try {
    const auto req =
        build_expert_prompt(query_abstract, summaries, perm, graph, cfg);
    return {expert_index, perm,
            require_text(backend.complete(req).text, "expert summary")};
  } catch (const std::exception& e) {
    throw StageError("mpsa expert", expert_index, e.what());
  }
}

ReviewOutput route(const std::vector<ExpertSummary>& candidates) {
  if (candidates.empty()) {
    throw std::invalid_argument("route: no candidate summaries");
  }
  std::vector<std::string> texts;
  texts.reserve(candidates.size());
  for (const auto& c : candidates) texts.push_back(c.text);

  ReviewOutput out;
  out.agreement_scores = pairwise_agreement(texts);
  // max_element returns the first maximum, i.e. the lowest index on ties.
  const auto best = std::max_element(out.agreement_scores.begin(),
                                     out.agreement_scores.end());
  out.selected_expert =
      static_cast<std::size_t>(best - out.agreement_scores.begin());
  out.final_text = candidates[out.selected_expert].text;
  out.all_experts = candidates;
  return out;
}

ReviewOutput generate_review(const QueryInstance& instance,
                             const KnowledgeMinigraph& graph,
                             const MpsaConfig& cfg,
                             const std::vector<Chunk>& chunks,
                             CompletionBackend& backend, std::uint64_t seed) {
  if (chunks.empty()) throw std::invalid_argument("mpsa: no chunks");
  if (cfg.experts < 1) throw std::invalid_argument("mpsa: experts must be >= 1");
  const std::size_t workers = backend.concurrency_limit();

  std::vector<ChunkSummary> summaries(chunks.size());
  parallel_for(chunks.size(), workers, [&](std::size_t i) {
    summaries[i] = summarize_chunk(instance.query_abstract, chunks[i], graph,
                                   backend, cfg);
  });

  const auto perms =
      sample_permutations(chunks.size(), cfg.experts,
                          derive_seed(seed, "permutations:" + instance.id));
  std::vector<ExpertSummary> experts(perms.size());
  parallel_for(perms.size(), workers, [&](std::size_t e) {
    experts[e] = expert_summarize(instance.query_abstract, summaries, perms[e],
                                  graph, backend, cfg, e);
  });

  ReviewOutput out = route(experts);
  out.chunk_summaries = std::move(summaries);
  return out;
}

}  // namespace ckma
