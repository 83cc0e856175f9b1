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

#ifndef CKMA_CLI_HPP_
#define CKMA_CLI_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace ckma::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,        // pipeline or runtime error
  kUsage = 2,          // bad flags, unreadable or invalid input
  kPartialFailure = 3  // eval: some instances failed
};

struct RunConfig {
  std::size_t k = 3;
  std::size_t m = 32;
  std::size_t experts = 3;
  std::uint64_t seed = 42;
  double temperature = 0.0;
  std::optional<double> expert_temperature;
  std::string model_id = "gpt-3.5-turbo";
  std::string base_url = "https://api.openai.com/v1";
  double timeout_seconds = 60.0;
  int max_attempts = 3;
  std::string backend = "http";  // "http", "mock:echo" or "mock:<script>"
  std::string templates_dir;     // empty: compiled-in templates
  std::size_t concurrency = 4;
  std::size_t max_context_chars = 48000;
  std::optional<std::size_t> limit;
  std::string output;
};

// Entry point shared by the ckma binary and the tests. args excludes the
// program name.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace ckma::cli

#endif  // CKMA_CLI_HPP_
