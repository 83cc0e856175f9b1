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

#ifndef CKMA_PIPELINE_HPP_
#define CKMA_PIPELINE_HPP_

#include <cstdint>

#include "ckma/kmca.hpp"
#include "ckma/mpsa.hpp"

namespace ckma {

struct PipelineResult {
  GraphConstruction construction;
  ReviewOutput review;
};

// KMCA then MPSA on one instance; the chunking from KMCA is reused by MPSA.
PipelineResult run_pipeline(const QueryInstance& instance,
                            const KmcaConfig& kmca, const MpsaConfig& mpsa,
                            CompletionBackend& backend, std::uint64_t seed);

}  // namespace ckma

#endif  // CKMA_PIPELINE_HPP_
