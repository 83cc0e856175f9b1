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

#include "ckma/chunker.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

#include "ckma/random.hpp"

namespace ckma {

std::vector<Chunk> chunk_references(const std::vector<ReferenceDocument>& refs,
                                    std::size_t k, std::uint64_t seed) {
  if (refs.empty()) throw std::invalid_argument("references must be non-empty");
  if (k < 1) throw std::invalid_argument("chunk size k must be >= 1");

  std::vector<ReferenceDocument> order = refs;
  std::mt19937_64 rng(seed);
  shuffle_in_place(order, rng);

  std::vector<Chunk> chunks;
  chunks.reserve((order.size() + k - 1) / k);
  for (std::size_t start = 0; start < order.size(); start += k) {
    const std::size_t end = std::min(order.size(), start + k);
    Chunk c{chunks.size(), {}};
    c.references.assign(std::make_move_iterator(order.begin() + start),
                        std::make_move_iterator(order.begin() + end));
    chunks.push_back(std::move(c));
  }
  return chunks;
}

}  // namespace ckma
