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

#ifndef CKMA_CHUNKER_HPP_
#define CKMA_CHUNKER_HPP_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ckma/types.hpp"

namespace ckma {

struct Chunk {
  std::size_t index;
  std::vector<ReferenceDocument> references;
};

// Seeded shuffle of refs followed by contiguous slices of size k; the last
// chunk holds the T mod k remainder when k does not divide T.
// Throws std::invalid_argument on empty refs or k == 0.
std::vector<Chunk> chunk_references(const std::vector<ReferenceDocument>& refs,
                                    std::size_t k, std::uint64_t seed);

}  // namespace ckma

#endif  // CKMA_CHUNKER_HPP_
