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

#include "ckma/pipeline.hpp"

namespace ckma {

PipelineResult run_pipeline(const QueryInstance& instance,
                            const KmcaConfig& kmca, const MpsaConfig& mpsa,
                            CompletionBackend& backend, std::uint64_t seed) {
  GraphConstruction g = construct_minigraph(instance, kmca, backend, seed);
  ReviewOutput r =
      generate_review(instance, g.graph, mpsa, g.chunks, backend, seed);
  return {std::move(g), std::move(r)};
}

}  // namespace ckma
