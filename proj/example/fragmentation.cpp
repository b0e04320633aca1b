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


// Walks one fragmented commitment step through the library: the gold
// concept's mass is split over three surface-form tokens while a single
// competitor wins greedy decoding.

#include <cstdio>

#include "semmass/semmass.hpp"

int main() {
  using namespace semmass;
  constexpr TokenId kSaint = 11, kSt = 12, kC = 13, kMos = 14;

  StepDistribution step;
  step.position = 1;
  step.k = 50;
  step.entries = {{kMos, 0.312}, {kSaint, 0.244}, {kC, 0.131}, {kSt, 0.115}};

  ConceptTokenSet gold;
  gold.concept_id = "q#gold";
  gold.first_token_ids = {kSaint, kSt, kC};

  SampleRecord r;
  r.sample_id = "q";
  r.model_id = "demo";
  r.question = "Which city was the capital of the Russian Empire?";
  r.gold_aliases = {"Saint Petersburg"};
  r.generated_text = "Moscow";
  r.generated_token_ids = {kMos};
  r.steps = {step};

  const auto d = mass_diagnostics(step, gold, kMos);
  std::printf("p_mass          %.4f\n", d.p_mass);
  std::printf("top1 alias      %.4f\n", d.top1_alias_prob);
  std::printf("d2 (top1/mass)  %.4f\n", *d.d2);
  std::printf("d3 (y/mass)     %.4f\n", *d.d3);
  std::printf("spread          %.4f\n", *d.spread);
  std::printf("entropy         %.4f\n", d.entropy);

  const auto c = classify(r, gold, kDefaultTheta);
  std::printf("category        %s\n", std::string(to_string(c.category)).c_str());

  const auto choice = cluster_argmax(step, ClusterAssignment::gold(gold));
  std::printf("cluster argmax  %s (%.4f of the top-k)\n", choice.cluster_id.c_str(), choice.mass);
  return 0;
}
