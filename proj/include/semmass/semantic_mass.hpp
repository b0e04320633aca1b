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

#pragma once

#include <cmath>
#include <optional>

#include "semmass/concept_sets.hpp"
#include "semmass/data_model.hpp"
#include "semmass/error.hpp"

namespace semmass {

// Sum of top-k probabilities on the concept's first tokens.
inline double p_mass(const StepDistribution& step, const ConceptTokenSet& cs) {
  double s = 0.0;
  for (const auto& e : step.entries)
    if (cs.contains(e.token_id)) s += e.prob;
  return s;
}

struct GoldMass {
  double value = 0.0;
  bool exact = false;  // taken from the extractor's full-vocabulary value
};

// Gold-concept mass: the exact full-softmax value when the dump carries
// one, the top-k sum otherwise.
inline GoldMass gold_p_mass(const StepDistribution& step, const ConceptTokenSet& gold) {
  if (auto v = step.exact(kExactPmassCorrect)) return {*v, true};
  return {p_mass(step, gold), false};
}

// Entropy in nats of the top-k entries renormalized to sum to one.
inline double step_entropy(const StepDistribution& step) {
  const double z = step.total_mass();
  if (!(z > 0.0)) throw DomainError("step " + std::to_string(step.position) + " has no probability mass");
  double h = 0.0;
  for (const auto& e : step.entries) {
    if (e.prob <= 0.0) continue;
    const double q = e.prob / z;
    h -= q * std::log(q);
  }
  return h;
}

// Inverse Simpson index of the concept's top-k probabilities.
inline std::optional<double> spread(const StepDistribution& step, const ConceptTokenSet& cs) {
  double sum = 0.0, sq = 0.0;
  for (const auto& e : step.entries) {
    if (!cs.contains(e.token_id)) continue;
    sum += e.prob;
    sq += e.prob * e.prob;
  }
  if (!(sum > 0.0)) return std::nullopt;
  return sum * sum / sq;
}

struct MassDiagnostics {
  double p_mass = 0.0;
  bool p_mass_exact = false;
  double top1_alias_prob = 0.0;
  std::optional<double> spread;
  std::optional<double> d2;
  std::optional<double> d3;
  double entropy = 0.0;
  double greedy_prob = 0.0;
  bool greedy_in_set = false;
  bool greedy_missing = false;  // emitted token absent from top-k; greedy_prob is 0
};

// All per-step scalars for one concept. With use_exact, the gold-concept
// exact mass (when present) replaces the top-k sum in p_mass, d2 and d3;
// spread and top1_alias_prob always come from the top-k entries.
inline MassDiagnostics mass_diagnostics(const StepDistribution& step, const ConceptTokenSet& cs, TokenId emitted,
                                        bool use_exact = false) {
  MassDiagnostics d;
  if (use_exact) {
    const auto g = gold_p_mass(step, cs);
    d.p_mass = g.value;
    d.p_mass_exact = g.exact;
  } else {
    d.p_mass = p_mass(step, cs);
  }
  for (const auto& e : step.entries)
    if (cs.contains(e.token_id) && e.prob > d.top1_alias_prob) d.top1_alias_prob = e.prob;
  d.spread = spread(step, cs);
  if (auto p = step.prob_of(emitted)) {
    d.greedy_prob = *p;
  } else {
    d.greedy_missing = true;
  }
  d.greedy_in_set = cs.contains(emitted);
  if (d.p_mass > 0.0) {
    d.d2 = d.top1_alias_prob / d.p_mass;
    d.d3 = d.greedy_prob / d.p_mass;
  }
  if (step.total_mass() > 0.0) d.entropy = step_entropy(step);
  return d;
}

}  // namespace semmass
