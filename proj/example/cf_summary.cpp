// Copyright 2026 The semmass Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Loads a corpus, builds gold concept sets with the chosen tokenizer and
// prints the commitment-failure breakdown per model.
// Usage: example_cf_summary <corpus.jsonl> [tokenizer.json|byte] [theta]

#include <cstdio>
#include <cstdlib>
#include <exception>

#include "semmass/pipeline.hpp"

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s <corpus.jsonl> [tokenizer] [theta]\n", argv[0]);
    return 2;
  }
  semmass::RunConfig cfg;
  cfg.corpus = {argv[1]};
  if (argc > 2) cfg.tokenizer = argv[2];
  if (argc > 3) cfg.theta = std::strtod(argv[3], nullptr);
  try {
    const auto ds = semmass::load_dataset(cfg);
    const auto classified = semmass::classify_all(ds, cfg.theta);
    std::fputs(semmass::cf_table_tsv(classified, cfg.theta).render().c_str(), stdout);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
