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

#include "ckma/dataset_eval.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace ckma {

namespace {

using Json = nlohmann::ordered_json;

std::string get_string(const Json& obj, const char* key, std::size_t line,
                       const std::string& path = "") {
  const std::string name = path.empty() ? key : path + "." + key;
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) {
    throw CorpusError(line, "missing field: " + name);
  }
  if (!it->is_string()) throw CorpusError(line, name + " must be a string");
  return it->get<std::string>();
}

std::optional<std::string> get_optional(const Json& obj, const char* key,
                                        std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    throw CorpusError(line, std::string(key) + " must be a string");
  }
  return it->get<std::string>();
}

std::string id_field(const Json& obj, const char* key, std::size_t line,
                     std::string fallback) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  throw CorpusError(line, std::string(key) + " must be a string");
}

QueryInstance from_native(const Json& obj, std::size_t line) {
  QueryInstance q;
  q.id = id_field(obj, "aid", line, std::to_string(line));
  q.query_abstract = get_string(obj, "abstract", line);
  const auto& refs = obj["ref_abstract"];
  if (!refs.is_object()) throw CorpusError(line, "ref_abstract must be an object");
  for (const auto& [cite, ref] : refs.items()) {
    if (!ref.is_object()) continue;
    const auto abstract = get_optional(ref, "abstract", line);
    if (!abstract || trim(*abstract).empty()) continue;
    q.references.push_back({cite, *abstract, std::nullopt});
  }
  q.gold_summary = get_optional(obj, "related_work", line);
  return q;
}

QueryInstance from_json(const Json& obj, std::size_t line) {
  if (!obj.is_object()) throw CorpusError(line, "record must be a JSON object");
  if (!obj.contains("references") && obj.contains("ref_abstract")) {
    QueryInstance q = from_native(obj, line);
    try {
      check_instance(q);
    } catch (const std::invalid_argument& e) {
      throw CorpusError(line, e.what());
    }
    return q;
  }

  QueryInstance q;
  q.id = id_field(obj, "id", line, std::to_string(line));
  q.query_abstract = get_string(obj, "abstract", line);
  auto it = obj.find("references");
  if (it == obj.end()) throw CorpusError(line, "missing field: references");
  if (!it->is_array()) throw CorpusError(line, "references must be an array");
  for (std::size_t i = 0; i < it->size(); ++i) {
    const auto& ref = (*it)[i];
    const std::string path = "references[" + std::to_string(i) + "]";
    if (!ref.is_object()) throw CorpusError(line, path + " must be an object");
    q.references.push_back({id_field(ref, "id", line, ""),
                            get_string(ref, "abstract", line, path),
                            get_optional(ref, "title", line)});
    if (q.references.back().id.empty()) {
      throw CorpusError(line, "missing field: " + path + ".id");
    }
  }
  q.gold_summary = get_optional(obj, "related_work", line);
  try {
    check_instance(q);
  } catch (const std::invalid_argument& e) {
    throw CorpusError(line, e.what());
  }
  return q;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError(0, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void accumulate(ScoreMeans& sum, const InstanceScore& s) {
  for (auto [dst, src] : {std::pair{&sum.rouge1, &s.rouge1},
                          std::pair{&sum.rouge2, &s.rouge2}}) {
    dst->recall += src->recall;
    dst->precision += src->precision;
    dst->f1 += src->f1;
  }
}

void divide(ScoreMeans& sum, std::size_t n) {
  for (RougeScore* r : {&sum.rouge1, &sum.rouge2}) {
    r->recall /= static_cast<double>(n);
    r->precision /= static_cast<double>(n);
    r->f1 /= static_cast<double>(n);
  }
}

Json score_json(const RougeScore& s) {
  Json j;
  j["recall"] = s.recall;
  j["precision"] = s.precision;
  j["f1"] = s.f1;
  return j;
}

Json means_json(const ScoreMeans& m) {
  Json j;
  j["rouge1"] = score_json(m.rouge1);
  j["rouge2"] = score_json(m.rouge2);
  return j;
}

std::string pct(double v) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * v);
  return buf;
}

}  // namespace

std::vector<QueryInstance> parse_corpus(std::string_view text) {
  std::vector<QueryInstance> out;
  std::set<std::string> ids;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    const std::string line = trim(text.substr(start, end - start));
    start = end + 1;
    if (line.empty()) continue;
    Json obj = Json::parse(line, nullptr, false);
    if (obj.is_discarded()) throw CorpusError(line_no, "malformed JSON");
    out.push_back(from_json(obj, line_no));
    if (!ids.insert(out.back().id).second) {
      throw CorpusError(line_no, "duplicate instance id: " + out.back().id);
    }
  }
  return out;
}

std::vector<QueryInstance> load_corpus(const std::string& path) {
  return parse_corpus(read_file(path));
}

QueryInstance load_instance(const std::string& path) {
  const std::string text = read_file(path);
  Json doc = Json::parse(text, nullptr, false);
  if (!doc.is_discarded()) return from_json(doc, 0);
  auto all = parse_corpus(text);
  if (all.size() != 1) {
    throw CorpusError(0, path + ": expected exactly one instance, found " +
                             std::to_string(all.size()));
  }
  return all.front();
}

EvaluationReport evaluate_corpus(
    const std::vector<QueryInstance>& instances,
    const std::map<std::string, std::string>& generated) {
  EvaluationReport report;
  ScoreMeans sum;
  std::map<std::size_t, ScoreMeans> group_sums;
  for (const auto& q : instances) {
    if (!q.gold_summary) {
      ++report.excluded_without_gold;
      continue;
    }
    auto it = generated.find(q.id);
    if (it == generated.end()) {
      throw std::invalid_argument("no generated text for instance " + q.id);
    }
    const TokenSequence gold = tokenize(*q.gold_summary);
    const TokenSequence gen = tokenize(it->second);
    InstanceScore s{q.id, q.references.size(), rouge_n(gold, gen, 1),
                    rouge_n(gold, gen, 2)};
    accumulate(sum, s);
    accumulate(group_sums[s.reference_count], s);
    ++report.groups[s.reference_count].instances;
    report.per_instance.push_back(std::move(s));
  }
  if (report.per_instance.empty()) {
    throw std::runtime_error("zero evaluable instances");
  }
  divide(sum, report.per_instance.size());
  report.aggregate = sum;
  for (auto& [count, group] : report.groups) {
    group.mean = group_sums[count];
    divide(group.mean, group.instances);
  }
  return report;
}

std::string report_to_json(const EvaluationReport& report) {
  Json j;
  j["metric"] = "ROUGE-1/2 (unstemmed)";
  j["instances"] = report.per_instance.size();
  j["excluded_without_gold"] = report.excluded_without_gold;
  j["aggregate"] = means_json(report.aggregate);
  Json groups = Json::array();
  for (const auto& [count, g] : report.groups) {
    Json row;
    row["reference_count"] = count;
    row["instances"] = g.instances;
    row["mean"] = means_json(g.mean);
    groups.push_back(std::move(row));
  }
  j["groups"] = std::move(groups);
  Json rows = Json::array();
  for (const auto& s : report.per_instance) {
    Json row;
    row["id"] = s.id;
    row["reference_count"] = s.reference_count;
    row["rouge1"] = score_json(s.rouge1);
    row["rouge2"] = score_json(s.rouge2);
    rows.push_back(std::move(row));
  }
  j["per_instance"] = std::move(rows);
  return j.dump(2);
}

std::string report_to_table(const EvaluationReport& report) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"scope", "refs", "n", "R1-R", "R1-P", "R1-F", "R2-R", "R2-P",
                  "R2-F"});
  auto add = [&](std::string scope, std::string refs, std::size_t n,
                 const RougeScore& r1, const RougeScore& r2) {
    rows.push_back({std::move(scope), std::move(refs), std::to_string(n),
                    pct(r1.recall), pct(r1.precision), pct(r1.f1),
                    pct(r2.recall), pct(r2.precision), pct(r2.f1)});
  };
  add("all", "-", report.per_instance.size(), report.aggregate.rouge1,
      report.aggregate.rouge2);
  for (const auto& [count, g] : report.groups) {
    add("group", std::to_string(count), g.instances, g.mean.rouge1,
        g.mean.rouge2);
  }
  for (const auto& s : report.per_instance) {
    add(s.id, std::to_string(s.reference_count), 1, s.rouge1, s.rouge2);
  }

  std::vector<std::size_t> width(rows.front().size(), 0);
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      width[c] = std::max(width[c], r[c].size());
    }
  }
  std::string out = "ROUGE-1/2 (unstemmed), scores x100\n";
  for (const auto& r : rows) {
    std::string line;
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (c > 0) line += "  ";
      const std::string pad(width[c] - r[c].size(), ' ');
      line += c < 2 ? r[c] + pad : pad + r[c];
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
  }
  if (report.excluded_without_gold > 0) {
    out += "excluded (no gold summary): " +
           std::to_string(report.excluded_without_gold) + "\n";
  }
  return out;
}

}  // namespace ckma
