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


// Randomized search for counterexamples to the two concept-belief bounds.
// Usage: example_bound_search [models] [seed]

#include <cstdio>
#include <cstdlib>

#include "semmass/latent_model.hpp"

int main(int argc, char** argv) {
  semmass::latent::SimulationConfig cfg;
  cfg.models = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 2000;
  cfg.seed = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 0;
  const auto rep = semmass::latent::simulate(cfg);
  std::printf("models %zu, target checks %zu\n", rep.models, rep.checks);
  std::printf("gap bound violations        %zu (min slack %.3g)\n", rep.prop1_violations, rep.min_prop1_slack);
  std::printf("posterior bound violations  %zu (min slack %.3g)\n", rep.prop2_violations, rep.min_prop2_slack);
  std::printf("single-token shortfalls     %zu\n", rep.token_level_shortfalls);
  return rep.prop1_violations + rep.prop2_violations == 0 ? 0 : 1;
}
