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

#include "ckma/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ckma/dataset_eval.hpp"
#include "ckma/llm_backend.hpp"
#include "ckma/parallel.hpp"
#include "ckma/pipeline.hpp"

namespace ckma::cli {

namespace {

using Json = nlohmann::ordered_json;

// Raised for problems that map to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Flags {
  std::optional<std::size_t> k, m, experts, concurrency, limit;
  std::optional<std::uint64_t> seed;
  std::optional<double> temperature, expert_temperature, timeout;
  std::optional<int> max_attempts;
  std::optional<std::string> model, base_url, backend, templates_dir, output,
      config;
  std::string input;
};

void add_options(CLI::App* cmd, Flags& f, bool eval) {
  cmd->add_option("input", f.input,
                  eval ? "Corpus JSONL file" : "Instance JSON file")
      ->required();
  cmd->add_option("--k", f.k, "References per chunk (default 3)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--m", f.m, "Minigraph volume limit (default 32)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--experts", f.experts, "Number of experts E (default 3)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", f.seed, "Run seed (default 42)");
  cmd->add_option("--temperature", f.temperature, "Sampling temperature")
      ->check(CLI::Range(0.0, 2.0));
  cmd->add_option("--expert-temperature", f.expert_temperature,
                  "Temperature override for expert calls")
      ->check(CLI::Range(0.0, 2.0));
  cmd->add_option("--model", f.model, "Model id");
  cmd->add_option("--base-url", f.base_url, "OpenAI-compatible API base URL");
  cmd->add_option("--timeout", f.timeout, "HTTP timeout in seconds")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--max-attempts", f.max_attempts, "HTTP attempts per call")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--backend", f.backend,
                  "http | mock:echo | mock:<script.json>");
  cmd->add_option("--templates-dir", f.templates_dir,
                  "Directory overriding prompt templates");
  cmd->add_option("--output", f.output, "Output path");
  cmd->add_option("--concurrency", f.concurrency, "Parallel backend calls")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--config", f.config, "JSON config file");
  if (eval) {
    cmd->add_option("--limit", f.limit, "Evaluate only the first N instances")
        ->check(CLI::PositiveNumber);
  }
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

template <typename T>
void take(const Json& doc, const char* key, T& dst) {
  if (doc.contains(key)) dst = doc[key].get<T>();
}

RunConfig resolve_config(const Flags& f, const std::string& default_output) {
  RunConfig c;
  c.output = default_output;
  if (f.config) {
    Json doc = Json::parse(read_text(*f.config), nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
      throw UsageError("config " + *f.config + " is not a JSON object");
    }
    try {
      take(doc, "k", c.k);
      take(doc, "m", c.m);
      take(doc, "experts", c.experts);
      take(doc, "seed", c.seed);
      take(doc, "temperature", c.temperature);
      if (doc.contains("expert_temperature")) {
        c.expert_temperature = doc["expert_temperature"].get<double>();
      }
      take(doc, "model_id", c.model_id);
      take(doc, "base_url", c.base_url);
      take(doc, "timeout_seconds", c.timeout_seconds);
      take(doc, "max_attempts", c.max_attempts);
      take(doc, "backend", c.backend);
      take(doc, "templates_dir", c.templates_dir);
      take(doc, "concurrency", c.concurrency);
      take(doc, "max_context_chars", c.max_context_chars);
    } catch (const nlohmann::json::exception& e) {
      throw UsageError("config " + *f.config + ": " + e.what());
    }
  }
  if (f.k) c.k = *f.k;
  if (f.m) c.m = *f.m;
  if (f.experts) c.experts = *f.experts;
  if (f.seed) c.seed = *f.seed;
  if (f.temperature) c.temperature = *f.temperature;
  if (f.expert_temperature) c.expert_temperature = f.expert_temperature;
  if (f.model) c.model_id = *f.model;
  if (f.base_url) c.base_url = *f.base_url;
  if (f.timeout) c.timeout_seconds = *f.timeout;
  if (f.max_attempts) c.max_attempts = *f.max_attempts;
  if (f.backend) c.backend = *f.backend;
  if (f.templates_dir) c.templates_dir = *f.templates_dir;
  if (f.concurrency) c.concurrency = *f.concurrency;
  if (f.limit) c.limit = f.limit;
  if (f.output) c.output = *f.output;
  if (c.k < 1 || c.m < 1 || c.experts < 1 || c.concurrency < 1) {
    throw UsageError("k, m, experts and concurrency must be positive");
  }
  return c;
}

std::unique_ptr<CompletionBackend> make_backend(const RunConfig& c) {
  if (c.backend == "http") {
    const char* key = std::getenv(kApiKeyEnv);
    if (key == nullptr || *key == '\0') {
      throw UsageError(std::string("http backend needs ") + kApiKeyEnv +
                       " in the environment");
    }
    HttpConfig h;
    h.base_url = c.base_url;
    h.model_id = c.model_id;
    h.timeout_seconds = c.timeout_seconds;
    h.api_key = key;
    h.retry.max_attempts = c.max_attempts;
    h.concurrency = c.concurrency;
    try {
      return std::make_unique<HttpBackend>(std::move(h));
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  if (c.backend == "mock:echo") return MockBackend::echo_user();
  if (c.backend.rfind("mock:", 0) == 0) {
    try {
      return MockBackend::from_file(c.backend.substr(5));
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  throw UsageError("unknown backend '" + c.backend + "'");
}

struct Stages {
  KmcaConfig kmca;
  MpsaConfig mpsa;
};

Stages make_stages(const RunConfig& c) {
  Stages s;
  PromptTemplates templates;
  try {
    templates = c.templates_dir.empty() ? PromptTemplates::defaults()
                                        : PromptTemplates::load(c.templates_dir);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  s.kmca.k = c.k;
  s.kmca.m = c.m;
  s.kmca.temperature = c.temperature;
  s.kmca.model_id = c.model_id;
  s.kmca.max_context_chars = c.max_context_chars;
  s.kmca.templates = templates;
  s.mpsa.experts = c.experts;
  s.mpsa.temperature = c.temperature;
  s.mpsa.expert_temperature = c.expert_temperature;
  s.mpsa.model_id = c.model_id;
  s.mpsa.templates = std::move(templates);
  return s;
}

Json manifest(const std::string& command, const std::string& input,
              const RunConfig& c, const CompletionBackend& backend) {
  Json j;
  j["command"] = command;
  j["input"] = input;
  j["backend"] = c.backend;
  j["backend_description"] = backend.describe();
  j["seed"] = c.seed;
  Json cfg;
  cfg["k"] = c.k;
  cfg["m"] = c.m;
  cfg["experts"] = c.experts;
  cfg["temperature"] = c.temperature;
  cfg["expert_temperature"] =
      c.expert_temperature ? Json(*c.expert_temperature) : Json(nullptr);
  cfg["model_id"] = c.model_id;
  cfg["base_url"] = c.base_url;
  cfg["timeout_seconds"] = c.timeout_seconds;
  cfg["max_attempts"] = c.max_attempts;
  cfg["concurrency"] = c.concurrency;
  cfg["max_context_chars"] = c.max_context_chars;
  cfg["templates_dir"] = c.templates_dir;
  cfg["limit"] = c.limit ? Json(*c.limit) : Json(nullptr);
  j["config"] = std::move(cfg);
  j["backend_calls"] = backend.call_count();
  return j;
}

Json graph_json(const KnowledgeMinigraph& g) {
  return Json::parse(minigraph_to_json(g));
}

Json construction_json(const GraphConstruction& gc) {
  Json j;
  Json chunks = Json::array();
  for (const auto& c : gc.chunks) {
    Json ids = Json::array();
    for (const auto& r : c.references) ids.push_back(r.id);
    chunks.push_back(std::move(ids));
  }
  j["chunks"] = std::move(chunks);
  Json iters = Json::array();
  for (const auto& it : gc.iterations) {
    Json row;
    row["chunk_index"] = it.chunk_index;
    row["backend_calls"] = it.backend_calls;
    row["truncated_abstracts"] = it.truncated_abstracts;
    Json dropped = Json::array();
    for (const auto& d : it.dropped) {
      dropped.push_back({{"index", d.index}, {"reason", d.reason}});
    }
    row["dropped"] = std::move(dropped);
    iters.push_back(std::move(row));
  }
  j["iterations"] = std::move(iters);
  return j;
}

Json review_sidecar(const QueryInstance& q, const PipelineResult& r) {
  Json j;
  j["instance_id"] = q.id;
  j["final_text"] = r.review.final_text;
  j["selected_expert"] = r.review.selected_expert;
  j["agreement_scores"] = r.review.agreement_scores;
  Json experts = Json::array();
  for (const auto& e : r.review.all_experts) {
    Json row;
    row["expert_index"] = e.expert_index;
    row["permutation"] = e.permutation;
    row["text"] = e.text;
    experts.push_back(std::move(row));
  }
  j["experts"] = std::move(experts);
  Json summaries = Json::array();
  for (const auto& s : r.review.chunk_summaries) {
    summaries.push_back({{"chunk_index", s.chunk_index}, {"text", s.text}});
  }
  j["chunk_summaries"] = std::move(summaries);
  j["minigraph"] = graph_json(r.construction.graph);
  j["construction"] = construction_json(r.construction);
  return j;
}

QueryInstance read_instance(const std::string& path) {
  if (!std::filesystem::exists(path)) {
    throw UsageError("input file not found: " + path);
  }
  try {
    return load_instance(path);
  } catch (const CorpusError& e) {
    throw UsageError(path + ": " + e.what());
  }
}

int cmd_graph(const Flags& f, std::ostream& out) {
  const RunConfig c = resolve_config(f, "graph.json");
  const QueryInstance q = read_instance(f.input);
  const Stages stages = make_stages(c);
  auto backend = make_backend(c);

  const GraphConstruction gc =
      construct_minigraph(q, stages.kmca, *backend, c.seed);
  write_text(c.output, minigraph_to_json(gc.graph) + "\n");
  Json m = manifest("graph", f.input, c, *backend);
  m["construction"] = construction_json(gc);
  write_text(c.output + ".manifest.json", m.dump(2) + "\n");
  out << "wrote " << c.output << " (" << gc.graph.size() << " relations, "
      << backend->call_count() << " backend calls)\n";
  return kOk;
}

int cmd_review(const Flags& f, std::ostream& out) {
  const RunConfig c = resolve_config(f, "review.txt");
  const QueryInstance q = read_instance(f.input);
  const Stages stages = make_stages(c);
  auto backend = make_backend(c);

  const PipelineResult r =
      run_pipeline(q, stages.kmca, stages.mpsa, *backend, c.seed);
  write_text(c.output, r.review.final_text + "\n");
  write_text(c.output + ".json", review_sidecar(q, r).dump(2) + "\n");
  write_text(c.output + ".manifest.json",
             manifest("review", f.input, c, *backend).dump(2) + "\n");
  out << "wrote " << c.output << " (expert " << r.review.selected_expert
      << " of " << r.review.all_experts.size() << ", "
      << backend->call_count() << " backend calls)\n";
  return kOk;
}

int cmd_eval(const Flags& f, std::ostream& out, std::ostream& err) {
  const RunConfig c = resolve_config(f, "report.json");
  if (!std::filesystem::exists(f.input)) {
    throw UsageError("input file not found: " + f.input);
  }
  std::vector<QueryInstance> corpus;
  try {
    corpus = load_corpus(f.input);
  } catch (const CorpusError& e) {
    throw UsageError(f.input + ": " + e.what());
  }
  if (c.limit && corpus.size() > *c.limit) corpus.resize(*c.limit);

  std::vector<QueryInstance> evaluable;
  for (const auto& q : corpus) {
    if (q.gold_summary) evaluable.push_back(q);
  }
  if (evaluable.empty()) throw std::runtime_error("zero evaluable instances");

  const Stages stages = make_stages(c);
  auto backend = make_backend(c);

  std::vector<std::optional<PipelineResult>> results(evaluable.size());
  std::vector<std::string> errors(evaluable.size());
  const std::size_t workers =
      std::min(c.concurrency, backend->concurrency_limit());
  parallel_for(evaluable.size(), workers, [&](std::size_t i) {
    try {
      results[i] = run_pipeline(evaluable[i], stages.kmca, stages.mpsa,
                                *backend, c.seed);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });

  std::vector<QueryInstance> done;
  std::map<std::string, std::string> generated;
  Json failures = Json::array();
  std::string reviews;
  for (std::size_t i = 0; i < evaluable.size(); ++i) {
    if (results[i]) {
      done.push_back(evaluable[i]);
      generated[evaluable[i].id] = results[i]->review.final_text;
      reviews += review_sidecar(evaluable[i], *results[i]).dump() + "\n";
    } else {
      failures.push_back({{"id", evaluable[i].id}, {"error", errors[i]}});
      err << "ckma: instance " << evaluable[i].id << " failed: " << errors[i]
          << "\n";
    }
  }

  Json m = manifest("eval", f.input, c, *backend);
  m["failures"] = failures;
  write_text(c.output + ".manifest.json", m.dump(2) + "\n");
  write_text(c.output + ".reviews.jsonl", reviews);
  if (done.empty()) {
    throw std::runtime_error("all " + std::to_string(evaluable.size()) +
                             " instances failed");
  }

  std::vector<QueryInstance> scored = done;
  for (const auto& q : corpus) {
    if (!q.gold_summary) scored.push_back(q);
  }
  const EvaluationReport report = evaluate_corpus(scored, generated);
  Json doc = Json::parse(report_to_json(report));
  doc["failures"] = failures;
  write_text(c.output, doc.dump(2) + "\n");
  const std::string table = report_to_table(report);
  write_text(c.output + ".txt", table);
  out << table;
  return failures.empty() ? kOk : kPartialFailure;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Literature review generation with knowledge minigraph agents",
               "ckma"};
  app.require_subcommand(1);
  Flags graph_flags, review_flags, eval_flags;
  auto* graph = app.add_subcommand(
      "graph", "Build the knowledge minigraph of one instance");
  add_options(graph, graph_flags, false);
  auto* review = app.add_subcommand(
      "review", "Generate a related-work paragraph for one instance");
  add_options(review, review_flags, false);
  auto* eval = app.add_subcommand(
      "eval", "Generate and score reviews for a corpus");
  add_options(eval, eval_flags, true);

  std::vector<std::string> argv_store;
  argv_store.reserve(args.size() + 1);
  argv_store.emplace_back("ckma");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }

  try {
    if (graph->parsed()) return cmd_graph(graph_flags, out);
    if (review->parsed()) return cmd_review(review_flags, out);
    return cmd_eval(eval_flags, out, err);
  } catch (const UsageError& e) {
    err << "ckma: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "ckma: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace ckma::cli
