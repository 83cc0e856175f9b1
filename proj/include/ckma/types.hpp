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

#ifndef CKMA_TYPES_HPP_
#define CKMA_TYPES_HPP_

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ckma {

// Entity types of the scientific constraint. Closed set.
enum class EntityType {
  kTask,
  kMethod,
  kMetric,
  kMaterial,
  kGeneric,
  kOtherScientificTerm,
};

// Relation types of the scientific constraint. Closed set.
enum class RelationType {
  kCompare,
  kUsedFor,
  kFeatureOf,
  kHyponymOf,
  kEvaluateFor,
  kPartOf,
  kConjunction,
};

inline constexpr std::array<EntityType, 6> kAllEntityTypes = {
    EntityType::kTask,    EntityType::kMethod,  EntityType::kMetric,
    EntityType::kMaterial, EntityType::kGeneric,
    EntityType::kOtherScientificTerm};

inline constexpr std::array<RelationType, 7> kAllRelationTypes = {
    RelationType::kCompare,    RelationType::kUsedFor,
    RelationType::kFeatureOf,  RelationType::kHyponymOf,
    RelationType::kEvaluateFor, RelationType::kPartOf,
    RelationType::kConjunction};

std::string_view to_string(EntityType t);
std::string_view to_string(RelationType t);

// Exact, case-sensitive parsing of the canonical spellings
// ("OtherScientificTerm", "Used-for", ...). nullopt for anything else.
std::optional<EntityType> parse_entity_type(std::string_view s);
std::optional<RelationType> parse_relation_type(std::string_view s);

// Raised for malformed minigraph JSON and, in strict mode, for invalid
// relation records.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Entity {
  std::string name;
  EntityType etype;

  friend bool operator==(const Entity&, const Entity&) = default;
};

struct Relation {
  Entity head;
  RelationType rtype;
  Entity tail;

  friend bool operator==(const Relation&, const Relation&) = default;
};

// One relation as emitted by the backend, before any type checking.
struct CandidateRelation {
  std::string head_name;
  std::string head_type;
  std::string relation;
  std::string tail_name;
  std::string tail_type;
};

// A volume-bounded, duplicate-free list of typed relations. Only
// validate_minigraph() produces non-empty instances, so every value satisfies
// the invariants.
class KnowledgeMinigraph {
 public:
  explicit KnowledgeMinigraph(std::size_t volume_limit);

  const std::vector<Relation>& relations() const { return relations_; }
  std::size_t volume_limit() const { return volume_limit_; }
  std::size_t size() const { return relations_.size(); }
  bool empty() const { return relations_.empty(); }

  // Distinct entities in first-appearance order (case-insensitive on name).
  std::vector<Entity> entities() const;

  friend bool operator==(const KnowledgeMinigraph&,
                         const KnowledgeMinigraph&) = default;

 private:
  friend struct MinigraphBuilder;

  std::vector<Relation> relations_;
  std::size_t volume_limit_;
};

struct DroppedRecord {
  std::size_t index;  // position in the input list
  std::string reason;
};

struct ValidationResult {
  KnowledgeMinigraph graph;
  std::vector<DroppedRecord> dropped;
};

struct ValidationOptions {
  // Throw ParseError on the first type/name/self-loop violation instead of
  // dropping. Duplicates and volume truncation are never fatal.
  bool strict = false;
};

// Filters invalid records, removes case-insensitive duplicates (first wins)
// and keeps the first volume_limit survivors. volume_limit must be >= 1.
ValidationResult validate_minigraph(
    const std::vector<CandidateRelation>& raw, std::size_t volume_limit,
    ValidationOptions options = {});

// Re-validation helper for already typed relations.
std::vector<CandidateRelation> to_candidates(const KnowledgeMinigraph& g);

// "<head> - <rtype> -> <tail>" per relation, joined by '\n', no trailing
// newline.
std::string minigraph_to_text(const KnowledgeMinigraph& g);

// Canonical schema:
//   {"relations":[{"head":{"name":..,"type":..},"relation":..,
//                  "tail":{"name":..,"type":..}}, ...]}
std::vector<CandidateRelation> minigraph_from_json(std::string_view text);
std::string minigraph_to_json(const KnowledgeMinigraph& g);

struct ReferenceDocument {
  std::string id;
  std::string abstract;
  std::optional<std::string> title;

  friend bool operator==(const ReferenceDocument&,
                         const ReferenceDocument&) = default;
};

struct QueryInstance {
  std::string id;
  std::string query_abstract;
  std::vector<ReferenceDocument> references;
  std::optional<std::string> gold_summary;
};

// Throws std::invalid_argument naming the violated invariant.
void check_instance(const QueryInstance& q);

// ASCII helpers shared by the modules.
std::string trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);

}  // namespace ckma

#endif  // CKMA_TYPES_HPP_
