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

#include "ckma/rouge.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>
#include <unordered_map>

namespace ckma {

namespace {

using NGramCounts = std::unordered_map<std::string, std::size_t>;

NGramCounts count_ngrams(const TokenSequence& seq, std::size_t n,
                         std::size_t& total) {
  NGramCounts counts;
  total = 0;
  const auto& t = seq.tokens;
  if (t.size() < n) return counts;
  for (std::size_t i = 0; i + n <= t.size(); ++i) {
    std::string key = t[i];
    for (std::size_t j = 1; j < n; ++j) {
      key += ' ';
      key += t[i + j];
    }
    ++counts[key];
    ++total;
  }
  return counts;
}

}  // namespace

TokenSequence tokenize(std::string_view text) {
  TokenSequence out;
  std::string cur;
  for (unsigned char c : text) {
    if (c < 0x80 && std::isalnum(c)) {
      cur += static_cast<char>(std::tolower(c));
    } else if (!cur.empty()) {
      out.tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.tokens.push_back(std::move(cur));
  return out;
}

RougeScore rouge_n(const TokenSequence& reference,
                   const TokenSequence& candidate, std::size_t n) {
  if (n < 1) throw std::invalid_argument("rouge_n: n must be >= 1");
  std::size_t ref_total = 0, cand_total = 0;
  const NGramCounts ref = count_ngrams(reference, n, ref_total);
  const NGramCounts cand = count_ngrams(candidate, n, cand_total);

  std::size_t overlap = 0;
  for (const auto& [gram, count] : cand) {
    auto it = ref.find(gram);
    if (it != ref.end()) overlap += std::min(count, it->second);
  }

  RougeScore s;
  if (ref_total > 0) s.recall = static_cast<double>(overlap) / ref_total;
  if (cand_total > 0) s.precision = static_cast<double>(overlap) / cand_total;
  if (s.recall + s.precision > 0) {
    s.f1 = 2 * s.precision * s.recall / (s.precision + s.recall);
  }
  return s;
}

RougeScore rouge_n(std::string_view reference, std::string_view candidate,
                   std::size_t n) {
  return rouge_n(tokenize(reference), tokenize(candidate), n);
}

std::vector<double> pairwise_agreement(const std::vector<std::string>& texts) {
  std::vector<TokenSequence> toks;
  toks.reserve(texts.size());
  for (const auto& t : texts) toks.push_back(tokenize(t));

  std::vector<double> agreement(texts.size(), 0.0);
  for (std::size_t e = 0; e < toks.size(); ++e) {
    for (std::size_t j = 0; j < toks.size(); ++j) {
      if (j != e) agreement[e] += rouge_n(toks[e], toks[j], 1).recall;
    }
  }
  return agreement;
}

}  // namespace ckma
