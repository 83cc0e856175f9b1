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

#include "ckma/kmca.hpp"

#include <algorithm>

#include "ckma/random.hpp"

namespace ckma {

namespace {

template <typename Range>
std::string join_names(const Range& values) {
  std::string out;
  for (const auto& v : values) {
    if (!out.empty()) out += ", ";
    out += to_string(v);
  }
  return out;
}

std::string render_graph_prompt(const std::optional<std::string>& prev,
                                 const std::string& abstracts, std::size_t m,
                                 const KmcaConfig& cfg) {
  std::map<std::string, std::string> values = {
      {"entity_types", entity_type_list()},
      {"relation_types", relation_type_list()},
      {"m", std::to_string(m)},
      {"demonstration", cfg.templates.graph_demonstration},
      {"abstracts", abstracts},
  };
  if (prev) {
    values["prior_graph"] = prev->empty() ? "(empty graph)" : *prev;
    return render_template(cfg.templates.graph_iterative, values);
  }
  return render_template(cfg.templates.graph_initial, values);
}

struct Attempt {
  std::vector<CandidateRelation> records;
  std::size_t calls = 0;
};

// One G call with a single JSON-repair reprompt.
Attempt call_graph(const CompletionRequest& req, CompletionBackend& backend) {
  Attempt a;
  std::string first_error;
  for (int round = 0; round < 2; ++round) {
    CompletionRequest r = req;
    if (round == 1) r.user_text += "\n\n" + std::string(kJsonReprompt);
    ++a.calls;
    const CompletionResponse resp = backend.complete(r);
    try {
      a.records = minigraph_from_json(extract_json(resp.text));
      return a;
    } catch (const ExtractionError&) {
      if (round == 1) throw;
    } catch (const ParseError&) {
      if (round == 1) throw;
    }
  }
  return a;
}

}  // namespace

ContextOverflowError::ContextOverflowError(std::size_t rendered_chars,
                                           std::size_t limit,
                                           std::string longest_reference_id)
    : std::runtime_error("graph prompt has " + std::to_string(rendered_chars) +
                         " chars, limit " + std::to_string(limit) +
                         "; longest abstract: " + longest_reference_id),
      rendered_chars_(rendered_chars),
      longest_id_(std::move(longest_reference_id)) {}

std::string format_abstracts(const std::vector<ReferenceDocument>& refs) {
  std::string out;
  for (const auto& ref : refs) {
    if (!out.empty()) out += "\n\n";
    out += "[" + ref.id + "] ";
    if (ref.title && !ref.title->empty()) out += *ref.title + ". ";
    out += ref.abstract;
  }
  return out;
}

std::string entity_type_list() { return join_names(kAllEntityTypes); }
std::string relation_type_list() { return join_names(kAllRelationTypes); }

CompletionRequest build_graph_prompt(
    const std::optional<std::string>& prev_graph_text, const Chunk& chunk,
    std::size_t m, const KmcaConfig& cfg) {
  if (chunk.references.empty()) {
    throw std::invalid_argument("graph prompt: chunk has no references");
  }
  CompletionRequest req;
  req.system_text = cfg.templates.graph_system;
  req.user_text = render_graph_prompt(
      prev_graph_text, format_abstracts(chunk.references), m, cfg);
  req.temperature = cfg.temperature;
  req.max_output_tokens = cfg.max_output_tokens;
  req.model_id = cfg.model_id;
  if (req.user_text.size() > cfg.max_context_chars) {
    const auto longest = std::max_element(
        chunk.references.begin(), chunk.references.end(),
        [](const auto& a, const auto& b) {
          return a.abstract.size() < b.abstract.size();
        });
    throw ContextOverflowError(req.user_text.size(), cfg.max_context_chars,
                               longest->id);
  }
  return req;
}

std::string truncate_at_sentence(const std::string& text,
                                 std::size_t max_chars) {
  if (text.size() <= max_chars) return text;
  const std::string_view head(text.data(), max_chars);
  for (std::size_t i = head.size(); i > 0; --i) {
    const char c = head[i - 1];
    if ((c == '.' || c == '!' || c == '?') &&
        (i == text.size() || text[i] == ' ' || text[i] == '\n')) {
      return std::string(head.substr(0, i));
    }
  }
  const auto space = head.find_last_of(" \n");
  if (space != std::string_view::npos && space > 0) {
    return std::string(head.substr(0, space));
  }
  return std::string(head);
}

std::vector<Chunk> chunk_instance(const QueryInstance& instance, std::size_t k,
                                  std::uint64_t seed) {
  return chunk_references(instance.references, k,
                          derive_seed(seed, "chunking:" + instance.id));
}

GraphConstruction construct_minigraph(const std::vector<Chunk>& chunks,
                                      const KmcaConfig& cfg,
                                      CompletionBackend& backend) {
  if (chunks.empty()) throw std::invalid_argument("kmca: no chunks");
  GraphConstruction out{KnowledgeMinigraph(cfg.m), chunks, {}};

  for (std::size_t i = 0; i < chunks.size(); ++i) {
    KmcaIteration trace{chunks[i].index, 0, {}, false};
    std::optional<std::string> prev;
    if (i > 0) prev = minigraph_to_text(out.graph);

    try {
      CompletionRequest req;
      try {
        req = build_graph_prompt(prev, chunks[i], cfg.m, cfg);
      } catch (const ContextOverflowError&) {
        Chunk shortened = chunks[i];
        for (auto& ref : shortened.references) ref.abstract.clear();
        const std::size_t overhead =
            render_graph_prompt(prev, format_abstracts(shortened.references),
                                cfg.m, cfg)
                .size();
        if (overhead >= cfg.max_context_chars) throw;
        const std::size_t budget = (cfg.max_context_chars - overhead) /
                                   chunks[i].references.size();
        for (std::size_t r = 0; r < shortened.references.size(); ++r) {
          shortened.references[r].abstract =
              truncate_at_sentence(chunks[i].references[r].abstract, budget);
        }
        req = build_graph_prompt(prev, shortened, cfg.m, cfg);
        trace.truncated_abstracts = true;
      }

      ValidationResult v{KnowledgeMinigraph(cfg.m), {}};
      for (int tries = 0; tries < 2; ++tries) {
        Attempt a = call_graph(req, backend);
        trace.backend_calls += a.calls;
        v = validate_minigraph(a.records, cfg.m);
        if (!v.graph.empty()) break;
      }
      trace.dropped = std::move(v.dropped);
      out.graph = std::move(v.graph);
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError("kmca iteration", i + 1, e.what());
    }
    out.iterations.push_back(std::move(trace));
  }
  return out;
}

GraphConstruction construct_minigraph(const QueryInstance& instance,
                                      const KmcaConfig& cfg,
                                      CompletionBackend& backend,
                                      std::uint64_t seed) {
  check_instance(instance);
  return construct_minigraph(chunk_instance(instance, cfg.k, seed), cfg,
                             backend);
}

}  // namespace ckma
