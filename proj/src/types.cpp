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

#include "ckma/types.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

#include <json.hpp>

namespace ckma {

struct MinigraphBuilder {
  static void push(KnowledgeMinigraph& g, Relation r) {
    g.relations_.push_back(std::move(r));
  }
};

namespace {

constexpr std::array<std::string_view, 6> kEntityNames = {
    "Task", "Method", "Metric", "Material", "Generic", "OtherScientificTerm"};
constexpr std::array<std::string_view, 7> kRelationNames = {
    "Compare",      "Used-for", "Feature-of", "Hyponym-of",
    "Evaluate-for", "Part-of",  "Conjunction"};

bool is_space(char c) {
  return std::isspace(static_cast<unsigned char>(c)) != 0;
}

std::string dedup_key(const Relation& r) {
  std::string key = to_lower_ascii(r.head.name);
  key += '\x1f';
  key += to_string(r.rtype);
  key += '\x1f';
  key += to_lower_ascii(r.tail.name);
  return key;
}

// Returns the typed relation or the reason the record is unusable.
std::optional<Relation> type_check(const CandidateRelation& c,
                                   std::string& reason) {
  auto rtype = parse_relation_type(trim(c.relation));
  if (!rtype) {
    reason = "unknown relation type";
    return std::nullopt;
  }
  auto htype = parse_entity_type(trim(c.head_type));
  auto ttype = parse_entity_type(trim(c.tail_type));
  if (!htype || !ttype) {
    reason = "unknown entity type";
    return std::nullopt;
  }
  std::string head = trim(c.head_name);
  std::string tail = trim(c.tail_name);
  if (head.empty() || tail.empty()) {
    reason = "empty entity name";
    return std::nullopt;
  }
  if (to_lower_ascii(head) == to_lower_ascii(tail)) {
    reason = "self-loop";
    return std::nullopt;
  }
  return Relation{{std::move(head), *htype}, *rtype, {std::move(tail), *ttype}};
}

}  // namespace

std::string_view to_string(EntityType t) {
  return kEntityNames[static_cast<std::size_t>(t)];
}

std::string_view to_string(RelationType t) {
  return kRelationNames[static_cast<std::size_t>(t)];
}

std::optional<EntityType> parse_entity_type(std::string_view s) {
  for (std::size_t i = 0; i < kEntityNames.size(); ++i) {
    if (kEntityNames[i] == s) return kAllEntityTypes[i];
  }
  return std::nullopt;
}

std::optional<RelationType> parse_relation_type(std::string_view s) {
  for (std::size_t i = 0; i < kRelationNames.size(); ++i) {
    if (kRelationNames[i] == s) return kAllRelationTypes[i];
  }
  return std::nullopt;
}

KnowledgeMinigraph::KnowledgeMinigraph(std::size_t volume_limit)
    : volume_limit_(volume_limit) {
  if (volume_limit == 0) {
    throw std::invalid_argument("volume limit must be positive");
  }
}

std::vector<Entity> KnowledgeMinigraph::entities() const {
  std::vector<Entity> out;
  std::unordered_set<std::string> seen;
  for (const auto& r : relations_) {
    for (const Entity* e : {&r.head, &r.tail}) {
      if (seen.insert(to_lower_ascii(e->name)).second) out.push_back(*e);
    }
  }
  return out;
}

ValidationResult validate_minigraph(const std::vector<CandidateRelation>& raw,
                                    std::size_t volume_limit,
                                    ValidationOptions options) {
  ValidationResult result{KnowledgeMinigraph(volume_limit), {}};
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    std::string reason;
    auto rel = type_check(raw[i], reason);
    if (!rel) {
      if (options.strict) {
        throw ParseError("relation " + std::to_string(i) + ": " + reason);
      }
      result.dropped.push_back({i, std::move(reason)});
      continue;
    }
    if (!seen.insert(dedup_key(*rel)).second) {
      result.dropped.push_back({i, "duplicate relation"});
      continue;
    }
    if (result.graph.size() >= volume_limit) {
      result.dropped.push_back({i, "exceeds volume limit"});
      continue;
    }
    MinigraphBuilder::push(result.graph, std::move(*rel));
  }
  return result;
}

std::vector<CandidateRelation> to_candidates(const KnowledgeMinigraph& g) {
  std::vector<CandidateRelation> out;
  out.reserve(g.size());
  for (const auto& r : g.relations()) {
    out.push_back({r.head.name, std::string(to_string(r.head.etype)),
                   std::string(to_string(r.rtype)), r.tail.name,
                   std::string(to_string(r.tail.etype))});
  }
  return out;
}

std::string minigraph_to_text(const KnowledgeMinigraph& g) {
  std::string out;
  for (const auto& r : g.relations()) {
    if (!out.empty()) out += '\n';
    out += r.head.name;
    out += " - ";
    out += to_string(r.rtype);
    out += " -> ";
    out += r.tail.name;
  }
  return out;
}

namespace {

const nlohmann::json& require(const nlohmann::json& obj, const char* key,
                              const std::string& path) {
  if (!obj.is_object()) {
    throw ParseError("expected object at " + (path.empty() ? "$" : path));
  }
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ParseError("missing key: " + (path.empty() ? "" : path + ".") + key);
  }
  return *it;
}

std::string require_string(const nlohmann::json& obj, const char* key,
                           const std::string& path) {
  const auto& v = require(obj, key, path);
  if (!v.is_string()) {
    throw ParseError("expected string at " + path + "." + key);
  }
  return v.get<std::string>();
}

}  // namespace

std::vector<CandidateRelation> minigraph_from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
  const auto& rels = require(doc, "relations", "");
  if (!rels.is_array()) throw ParseError("expected array at relations");

  std::vector<CandidateRelation> out;
  out.reserve(rels.size());
  for (std::size_t i = 0; i < rels.size(); ++i) {
    const std::string path = "relations[" + std::to_string(i) + "]";
    const auto& item = rels[i];
    const auto& head = require(item, "head", path);
    const auto& tail = require(item, "tail", path);
    out.push_back({require_string(head, "name", path + ".head"),
                   require_string(head, "type", path + ".head"),
                   require_string(item, "relation", path),
                   require_string(tail, "name", path + ".tail"),
                   require_string(tail, "type", path + ".tail")});
  }
  return out;
}

std::string minigraph_to_json(const KnowledgeMinigraph& g) {
  nlohmann::ordered_json rels = nlohmann::ordered_json::array();
  for (const auto& r : g.relations()) {
    nlohmann::ordered_json item;
    item["head"]["name"] = r.head.name;
    item["head"]["type"] = to_string(r.head.etype);
    item["relation"] = to_string(r.rtype);
    item["tail"]["name"] = r.tail.name;
    item["tail"]["type"] = to_string(r.tail.etype);
    rels.push_back(std::move(item));
  }
  nlohmann::ordered_json doc;
  doc["relations"] = std::move(rels);
  return doc.dump();
}

void check_instance(const QueryInstance& q) {
  if (trim(q.query_abstract).empty()) {
    throw std::invalid_argument("abstract must be non-empty");
  }
  if (q.references.empty()) {
    throw std::invalid_argument("references must be non-empty");
  }
  std::unordered_set<std::string> ids;
  for (std::size_t i = 0; i < q.references.size(); ++i) {
    const auto& ref = q.references[i];
    if (trim(ref.abstract).empty()) {
      throw std::invalid_argument("references[" + std::to_string(i) +
                                  "].abstract must be non-empty");
    }
    if (!ids.insert(ref.id).second) {
      throw std::invalid_argument("duplicate reference id: " + ref.id);
    }
  }
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

}  // namespace ckma
