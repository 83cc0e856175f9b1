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

#ifndef CKMA_DATASET_EVAL_HPP_
#define CKMA_DATASET_EVAL_HPP_

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ckma/rouge.hpp"
#include "ckma/types.hpp"

namespace ckma {

// Malformed corpus input. line() is 1-based, 0 when not line-oriented.
class CorpusError : public std::runtime_error {
 public:
  CorpusError(std::size_t line, const std::string& message)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " +
                                          message
                                    : message),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// One record per line:
//   {"id": str?, "abstract": str,
//    "references": [{"id": str, "abstract": str, "title": str?}],
//    "related_work": str?}
// Native Multi-XScience records (aid, ref_abstract, related_work) are mapped
// onto the same fields. Blank lines are skipped; a missing id becomes the
// 1-based line number.
std::vector<QueryInstance> parse_corpus(std::string_view text);
std::vector<QueryInstance> load_corpus(const std::string& path);

// A single instance: a JSON document (may span lines) or a one-record JSONL.
QueryInstance load_instance(const std::string& path);

struct InstanceScore {
  std::string id;
  std::size_t reference_count;
  RougeScore rouge1;
  RougeScore rouge2;
};

struct ScoreMeans {
  RougeScore rouge1;
  RougeScore rouge2;
};

struct GroupSummary {
  std::size_t instances = 0;
  ScoreMeans mean;
};

struct EvaluationReport {
  std::vector<InstanceScore> per_instance;
  ScoreMeans aggregate;
  std::map<std::size_t, GroupSummary> groups;  // keyed by reference count
  std::size_t excluded_without_gold = 0;
};

// ROUGE-1/2 of generated (candidate) against gold (reference) for every
// instance that has a gold summary. Throws std::invalid_argument when a gold
// instance has no generated text, std::runtime_error("zero evaluable
// instances") when nothing can be scored.
EvaluationReport evaluate_corpus(
    const std::vector<QueryInstance>& instances,
    const std::map<std::string, std::string>& generated);

// Stable-key JSON; scores labelled "ROUGE-1/2 (unstemmed)".
std::string report_to_json(const EvaluationReport& report);

// Aligned plain-text table (aggregate, groups, per-instance).
std::string report_to_table(const EvaluationReport& report);

}  // namespace ckma

#endif  // CKMA_DATASET_EVAL_HPP_
