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

#ifndef CKMA_ROUGE_HPP_
#define CKMA_ROUGE_HPP_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace ckma {

// Lowercased ASCII alphanumeric runs. Any other byte (punctuation, space,
// non-ASCII) separates tokens. No stemming, no stopwords.
struct TokenSequence {
  std::vector<std::string> tokens;
};

struct RougeScore {
  double recall = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
};

TokenSequence tokenize(std::string_view text);

// Clipped multiset n-gram overlap. recall divides by the reference n-gram
// count, precision by the candidate's; either is 0 when its denominator is 0.
// n must be >= 1.
RougeScore rouge_n(const TokenSequence& reference,
                   const TokenSequence& candidate, std::size_t n);
RougeScore rouge_n(std::string_view reference, std::string_view candidate,
                   std::size_t n);

// agreement[e] = sum over j != e of rouge_n(texts[e], texts[j], 1).recall,
// i.e. texts[e] is the reference for each of its peers.
std::vector<double> pairwise_agreement(const std::vector<std::string>& texts);

}  // namespace ckma

#endif  // CKMA_ROUGE_HPP_
