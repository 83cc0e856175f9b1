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

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. The live check (8) runs only when CKMA_API_KEY and
// CKMA_LIVE_CORPUS are both set.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ckma/chunker.hpp"
#include "ckma/cli.hpp"
#include "ckma/dataset_eval.hpp"
#include "ckma/kmca.hpp"
#include "ckma/llm_backend.hpp"
#include "ckma/mpsa.hpp"
#include "ckma/rouge.hpp"
#include "ckma/types.hpp"
#include "test_support.hpp"

namespace {

using namespace ckma;
namespace t = ckma::testing;

struct Outcome {
  enum Kind { kPass, kFail, kSkip } kind = kPass;
  std::string detail;
};

// Records the first failed expectation; later ones are ignored.
struct Expect {
  Outcome out;
  bool operator()(bool cond, const std::string& what) {
    if (!cond && out.kind == Outcome::kPass) {
      out.kind = Outcome::kFail;
      out.detail = what;
    }
    return cond;
  }
  bool ok() const { return out.kind == Outcome::kPass; }
};

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome rouge_oracle() {
  Expect expect;
  std::mt19937_64 rng(20261019);
  std::uniform_int_distribution<std::size_t> len(0, 30), vocab(2, 12);
  std::size_t pairs = 0;
  for (; pairs < 400 && expect.ok(); ++pairs) {
    const std::size_t v = vocab(rng);
    std::vector<std::string> a(len(rng)), b(len(rng));
    for (auto& w : a) w = t::random_word(rng, v);
    for (auto& w : b) w = t::random_word(rng, v);
    for (std::size_t n : {1u, 2u}) {
      const auto got = rouge_n(TokenSequence{a}, TokenSequence{b}, n);
      const auto want = t::oracle_rouge(a, b, n);
      expect(std::abs(got.recall - want.recall) < 1e-12 &&
                 std::abs(got.precision - want.precision) < 1e-12 &&
                 std::abs(got.f1 - want.f1) < 1e-12,
             fmt("pair %zu n=%zu: recall %.6f vs oracle %.6f", pairs, n,
                 got.recall, want.recall));
    }
  }
  if (expect.ok()) expect.out.detail = fmt("%zu pairs, n in {1,2}", pairs);
  return expect.out;
}

Outcome chunker_partition() {
  Expect expect;
  const std::uint64_t seeds[] = {0, 1, 42, 977, 0xdeadbeefULL};
  std::size_t runs = 0;
  for (std::size_t total = 1; total <= 200 && expect.ok(); ++total) {
    const auto refs = t::make_refs(total);
    std::multiset<std::string> want;
    for (const auto& r : refs) want.insert(r.id);
    for (std::size_t k = 1; k <= 16 && expect.ok(); ++k) {
      const std::size_t count = (total + k - 1) / k;
      for (auto seed : seeds) {
        ++runs;
        const auto chunks = chunk_references(refs, k, seed);
        const std::string where =
            fmt("T=%zu k=%zu seed=%llu: ", total, k,
                static_cast<unsigned long long>(seed));
        if (!expect(chunks.size() == count, where + "wrong chunk count")) break;
        std::multiset<std::string> got;
        for (std::size_t i = 0; i < count; ++i) {
          const std::size_t size =
              i + 1 < count ? k : total - k * (count - 1);
          expect(chunks[i].index == i, where + "chunk index out of order");
          expect(chunks[i].references.size() == size, where + "size pattern");
          for (const auto& r : chunks[i].references) got.insert(r.id);
        }
        expect(got == want, where + "not an exact partition");
        const auto again = chunk_references(refs, k, seed);
        bool same = again.size() == chunks.size();
        for (std::size_t i = 0; same && i < count; ++i) {
          same = again[i].references == chunks[i].references;
        }
        expect(same, where + "not deterministic");
      }
    }
  }
  if (expect.ok()) expect.out.detail = fmt("%zu chunkings", runs);
  return expect.out;
}

std::vector<ExpertSummary> candidates(const std::vector<std::string>& texts) {
  std::vector<ExpertSummary> out;
  for (std::size_t i = 0; i < texts.size(); ++i) out.push_back({i, {}, texts[i]});
  return out;
}

Outcome router() {
  Expect expect;
  auto near = [](const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (std::abs(a[i] - b[i]) > 1e-12) return false;
    }
    return true;
  };

  auto tie = route(candidates({"a b c", "a b c", "x y z"}));
  expect(near(tie.agreement_scores, {1.0, 1.0, 0.0}), "tie example scores");
  expect(tie.selected_expert == 0 && tie.final_text == "a b c",
         "tie example must select expert 0");
  auto one = route(candidates({"lonely"}));
  expect(one.selected_expert == 0 && near(one.agreement_scores, {0.0}) &&
             one.final_text == "lonely",
         "single candidate example");
  auto same = route(candidates({"a b", "a b", "a b"}));
  expect(near(same.agreement_scores, {2.0, 2.0, 2.0}) &&
             same.selected_expert == 0,
         "identical candidates example");
  auto later = route(candidates({"q", "a b", "a b"}));
  expect(later.selected_expert == 1, "tie among later experts goes to lowest");

  std::mt19937_64 rng(4);
  std::uniform_int_distribution<std::size_t> count(1, 6), len(0, 20);
  for (int set = 0; set < 100 && expect.ok(); ++set) {
    std::vector<std::string> texts(count(rng));
    std::vector<std::vector<std::string>> toks;
    for (auto& s : texts) {
      std::vector<std::string> words(len(rng));
      for (auto& w : words) {
        w = t::random_word(rng, 6);
        s += (s.empty() ? "" : " ") + w;
      }
      toks.push_back(words);
    }
    const auto want = t::oracle_agreement(toks);
    const auto r = route(candidates(texts));
    expect(near(r.agreement_scores, want), fmt("set %d: agreement mismatch", set));
    const double best = *std::max_element(want.begin(), want.end());
    const auto first =
        std::find(want.begin(), want.end(), best) - want.begin();
    expect(r.selected_expert == static_cast<std::size_t>(first),
           fmt("set %d: selected %zu, expected %td", set, r.selected_expert,
               first));
    expect(r.final_text == texts[r.selected_expert], "final text mismatch");
  }
  if (expect.ok()) expect.out.detail = "3 worked examples, 100 random sets";
  return expect.out;
}

std::string graph_text_of(const std::string& payload) {
  return minigraph_to_text(
      validate_minigraph(minigraph_from_json(payload), 32).graph);
}

Outcome graph_loop() {
  Expect expect;
  const auto chunks = chunk_references(t::make_refs(7), 3, 42);
  const std::vector<std::string> script = {
      t::graph_payload(3), "```json\n" + t::graph_payload(5, 10) + "\n```",
      t::graph_payload(40, 100)};
  auto mock = MockBackend::scripted(script);
  KmcaConfig cfg;
  const auto built = construct_minigraph(chunks, cfg, *mock);
  const auto reqs = mock->requests();
  expect(mock->call_count() == 3 && reqs.size() == 3,
         fmt("expected 3 graph calls, got %zu", mock->call_count()));
  if (reqs.size() == 3) {
    const auto user_text = [&](std::size_t i) { return reqs[i].user_text; };
    expect(user_text(0).find("E0 - Used-for -> T0") == std::string::npos,
           "first prompt must not carry a prior graph");
    expect(user_text(1).find(graph_text_of(script[0])) != std::string::npos,
           "prompt 2 lacks the text of the first graph");
    expect(user_text(2).find(graph_text_of(t::graph_payload(5, 10))) !=
               std::string::npos,
           "prompt 3 lacks the text of the second graph");
  }
  expect(built.graph.size() == 32, fmt("final graph has %zu relations",
                                       built.graph.size()));
  expect(built.graph.relations().front().head.name == "E100" &&
             built.graph.relations().back().head.name == "E131",
         "truncation must keep the first 32 relations");
  std::size_t volume_drops = 0;
  for (const auto& d : built.iterations.back().dropped) {
    volume_drops += d.reason == "exceeds volume limit";
  }
  expect(volume_drops == 8, "8 relations should be dropped for volume");

  nlohmann::json bad = nlohmann::json::parse(t::graph_payload(4));
  bad["relations"][1]["relation"] = "Causes";
  bad["relations"][2]["head"]["type"] = "Person";
  bad["relations"][3]["tail"]["type"] = "method";
  auto bad_mock = MockBackend::scripted({bad.dump()});
  const auto typed = construct_minigraph(
      std::vector<Chunk>{chunks.front()}, cfg, *bad_mock);
  const auto& dropped = typed.iterations.front().dropped;
  expect(typed.graph.size() == 1, "only the valid relation should survive");
  expect(dropped.size() == 3 && dropped[0].index == 1 &&
             dropped[0].reason == "unknown relation type" &&
             dropped[1].reason == "unknown entity type" &&
             dropped[2].reason == "unknown entity type",
         "invalid type strings must be dropped with reasons");
  if (expect.ok()) {
    expect.out.detail = "3 calls, prior graph embedded, 40 -> 32, 3 drops";
  }
  return expect.out;
}

Outcome review_determinism() {
  Expect expect;
  const auto dir = t::scratch_dir("acceptance_review");
  struct Case {
    std::size_t refs, k, experts;
  };
  std::string summary;
  for (const Case c : {Case{7, 3, 3}, Case{2, 3, 3}, Case{3, 3, 1}}) {
    const std::size_t chunks = (c.refs + c.k - 1) / c.k;
    std::size_t factorial = 1;
    for (std::size_t i = 2; i <= chunks; ++i) factorial *= i;
    const std::size_t e_eff = std::min(c.experts, factorial);
    std::vector<std::string> script;
    for (std::size_t i = 0; i < chunks; ++i) {
      script.push_back(t::graph_payload(2, 10 * i));
    }
    for (std::size_t i = 0; i < chunks; ++i) {
      script.push_back("Chunk " + std::to_string(i) + " covers graph methods.");
    }
    for (std::size_t e = 0; e < e_eff; ++e) {
      script.push_back("Expert " + std::to_string(e) +
                       " reviews graph methods for summarization.");
    }
    const std::string tag = fmt("T%zu_k%zu_E%zu", c.refs, c.k, c.experts);
    t::write_file(dir / (tag + ".json"),
                  t::instance_json(t::make_instance(c.refs)));
    t::write_file(dir / (tag + ".mock.json"),
                  nlohmann::json{{"mode", "scripted"}, {"responses", script}}
                      .dump());
    auto run_once = [&](const std::string& name) {
      const auto out = (dir / (tag + name)).string();
      std::ostringstream so, se;
      const int code = cli::run(
          {"review", (dir / (tag + ".json")).string(), "--k",
           std::to_string(c.k), "--experts", std::to_string(c.experts),
           "--seed", "1234", "--backend",
           "mock:" + (dir / (tag + ".mock.json")).string(), "--output", out},
          so, se);
      expect(code == 0, tag + ": review failed: " + se.str());
      return out;
    };
    const auto a = run_once(".a.txt");
    const auto b = run_once(".b.txt");
    if (!expect.ok()) break;
    expect(t::read_file(a) == t::read_file(b), tag + ": review text differs");
    expect(t::read_file(a + ".json") == t::read_file(b + ".json"),
           tag + ": sidecar differs");
    const auto manifest =
        nlohmann::json::parse(t::read_file(a + ".manifest.json"));
    const auto sidecar = nlohmann::json::parse(t::read_file(a + ".json"));
    std::size_t graph_calls = 0;
    for (const auto& it : sidecar["construction"]["iterations"]) {
      graph_calls += it["backend_calls"].get<std::size_t>();
    }
    const std::size_t total = manifest["backend_calls"].get<std::size_t>();
    expect(graph_calls == chunks,
           tag + fmt(": %zu graph calls, expected %zu", graph_calls, chunks));
    expect(total - graph_calls == chunks + e_eff,
           tag + fmt(": %zu summarization calls, expected %zu",
                     total - graph_calls, chunks + e_eff));
    expect(sidecar["experts"].size() == e_eff, tag + ": expert count");
    summary += fmt("%s%s: %zu+%zu", summary.empty() ? "" : ", ", tag.c_str(),
                   chunks, e_eff);
  }
  if (expect.ok()) {
    expect.out.detail =
        "identical reruns; summarization calls I+E_eff (" + summary +
        "), plus I graph calls";
  }
  return expect.out;
}

Outcome round_trip() {
  Expect expect;
  std::mt19937_64 rng(606);
  std::uniform_int_distribution<std::size_t> size(0, 40), limit(1, 32);
  for (int i = 0; i < 100 && expect.ok(); ++i) {
    const auto g =
        validate_minigraph(t::random_candidates(rng, size(rng)), limit(rng))
            .graph;
    const auto back = validate_minigraph(minigraph_from_json(minigraph_to_json(g)),
                                         g.volume_limit(), {.strict = true});
    expect(back.graph == g && back.dropped.empty(),
           fmt("graph %d changed in round trip", i));
    const auto text = minigraph_to_text(g);
    const std::size_t lines =
        text.empty() ? 0 : std::count(text.begin(), text.end(), '\n') + 1;
    expect(lines == g.size(), fmt("graph %d: %zu lines for %zu relations", i,
                                  lines, g.size()));
  }
  if (expect.ok()) expect.out.detail = "100 random graphs";
  return expect.out;
}

Outcome evaluation_harness() {
  Expect expect;
  std::vector<QueryInstance> corpus = {t::make_instance(2, "a"),
                                       t::make_instance(2, "b"),
                                       t::make_instance(5, "c")};
  corpus[1].gold_summary = "Graph based methods summarize many documents well.";
  std::map<std::string, std::string> generated;
  for (const auto& q : corpus) generated[q.id] = *q.gold_summary;
  const auto report = evaluate_corpus(corpus, generated);
  expect(report.per_instance.size() == 3, "three scored instances");
  expect(report.aggregate.rouge1.f1 == 1.0 && report.aggregate.rouge2.f1 == 1.0,
         fmt("aggregate f1 %.6f / %.6f", report.aggregate.rouge1.f1,
             report.aggregate.rouge2.f1));
  expect(report.groups.size() == 2 && report.groups.count(2) &&
             report.groups.at(2).instances == 2 && report.groups.count(5) &&
             report.groups.at(5).instances == 1,
         "reference-count groups should be {2: 2, 5: 1}");
  if (expect.ok()) expect.out.detail = "f1 = 1.0, groups {2: 2, 5: 1}";
  return expect.out;
}

Outcome live_smoke() {
  const char* key = std::getenv(kApiKeyEnv);
  const char* corpus = std::getenv("CKMA_LIVE_CORPUS");
  if (!key || !*key || !corpus || !*corpus) {
    return {Outcome::kSkip, "set CKMA_API_KEY and CKMA_LIVE_CORPUS to run"};
  }
  Expect expect;
  const auto dir = t::scratch_dir("acceptance_live");
  const auto out = (dir / "report.json").string();
  std::vector<std::string> args = {"eval", corpus, "--limit", "10",
                                   "--output", out};
  if (const char* url = std::getenv("CKMA_LIVE_BASE_URL")) {
    args.insert(args.end(), {"--base-url", url});
  }
  if (const char* model = std::getenv("CKMA_LIVE_MODEL")) {
    args.insert(args.end(), {"--model", model});
  }
  std::ostringstream so, se;
  const int code = cli::run(args, so, se);
  expect(code == 0, fmt("eval exited with %d: ", code) + se.str());
  if (!expect.ok()) return expect.out;
  const auto report = nlohmann::json::parse(t::read_file(out));
  const double r1 = report["aggregate"]["rouge1"]["f1"].get<double>();
  expect.out.detail = fmt("%zu instances, ROUGE-1 f1 %.4f%s",
                          report["per_instance"].size(), r1,
                          r1 > 0.15 ? "" : " (below 0.15 sanity floor)");
  return expect.out;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_seconds;  // 0: no runtime bound
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria = {
      {1, "rouge matches brute-force oracle", 5, rouge_oracle},
      {2, "chunker partitions every (T, k, seed)", 10, chunker_partition},
      {3, "router agreement and tie-break", 0, router},
      {4, "graph construction loop contract", 0, graph_loop},
      {5, "review is deterministic with exact call counts", 5,
       review_determinism},
      {6, "minigraph JSON round trip", 0, round_trip},
      {7, "evaluation harness on a perfect corpus", 0, evaluation_harness},
      {8, "live smoke run (optional)", 0, live_smoke},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {Outcome::kFail, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - start)
                            .count();
    if (o.kind == Outcome::kPass && c.budget_seconds > 0 &&
        secs >= c.budget_seconds) {
      o = {Outcome::kFail, fmt("took %.2fs, budget %.0fs", secs,
                               c.budget_seconds)};
    }
    const char* label = o.kind == Outcome::kPass   ? "PASS"
                        : o.kind == Outcome::kSkip ? "SKIP"
                                                   : "FAIL";
    failures += o.kind == Outcome::kFail;
    std::cout << label << "  [" << c.id << "] " << c.name << " ("
              << fmt("%.3fs", secs) << ")";
    if (!o.detail.empty()) std::cout << ": " << o.detail;
    std::cout << "\n";
  }
  return failures == 0 ? 0 : 1;
}
