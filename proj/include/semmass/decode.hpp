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

#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "semmass/concept_sets.hpp"
#include "semmass/data_model.hpp"
#include "semmass/error.hpp"

namespace semmass {

// Explicit token clusters; any top-k token outside them competes alone.
struct ClusterAssignment {
  std::vector<std::pair<std::string, std::set<TokenId>>> clusters;

  void validate() const {
    std::set<TokenId> seen;
    for (const auto& [id, tokens] : clusters)
      for (auto t : tokens)
        if (!seen.insert(t).second) throw ValidationError("clusters disjoint", "token " + std::to_string(t) + " in two clusters");
  }

  static ClusterAssignment gold(const ConceptTokenSet& cs) { return {{{cs.concept_id, cs.first_token_ids}}}; }
};

struct ClusterChoice {
  std::string cluster_id;  // explicit id, or "token:<id>" for a singleton
  bool explicit_cluster = false;
  double mass = 0.0;  // share of the renormalized top-k
};

inline std::string singleton_id(TokenId t) { return "token:" + std::to_string(t); }

// Highest-mass cluster over the renormalized top-k. Ties go to the cluster
// holding the lowest token_id among its top-k entries.
inline ClusterChoice cluster_argmax(const StepDistribution& step, const ClusterAssignment& assignment) {
  if (step.entries.empty()) throw DomainError("cluster_argmax: empty step");
  assignment.validate();
  std::map<TokenId, std::size_t> cluster_of;
  for (std::size_t i = 0; i < assignment.clusters.size(); ++i)
    for (auto t : assignment.clusters[i].second) cluster_of[t] = i;

  struct Acc {
    double mass = 0.0;
    TokenId lowest = std::numeric_limits<TokenId>::max();
  };
  std::vector<Acc> explicit_acc(assignment.clusters.size());
  std::map<TokenId, Acc> singles;
  const double z = step.total_mass();
  for (const auto& e : step.entries) {
    const double q = z > 0.0 ? e.prob / z : 0.0;
    auto it = cluster_of.find(e.token_id);
    Acc& a = it == cluster_of.end() ? singles[e.token_id] : explicit_acc[it->second];
    a.mass += q;
    a.lowest = std::min(a.lowest, e.token_id);
  }

  ClusterChoice best;
  TokenId best_lowest = std::numeric_limits<TokenId>::max();
  bool have = false;
  auto consider = [&](const Acc& a, std::string id, bool is_explicit) {
    if (a.lowest == std::numeric_limits<TokenId>::max()) return;  // no top-k member
    if (!have || a.mass > best.mass || (a.mass == best.mass && a.lowest < best_lowest)) {
      best = {std::move(id), is_explicit, a.mass};
      best_lowest = a.lowest;
      have = true;
    }
  };
  for (std::size_t i = 0; i < explicit_acc.size(); ++i) consider(explicit_acc[i], assignment.clusters[i].first, true);
  for (const auto& [t, a] : singles) consider(a, singleton_id(t), false);
  return best;
}

struct RecoveryCount {
  std::size_t n = 0;
  std::size_t recovered = 0;
  std::optional<double> rate;
};

// Fraction of selection failures whose gold cluster wins cluster-argmax.
inline RecoveryCount recovery_count(std::span<const std::pair<StepDistribution, ConceptTokenSet>> samples) {
  RecoveryCount r;
  for (const auto& [step, cs] : samples) {
    ++r.n;
    const auto choice = cluster_argmax(step, ClusterAssignment::gold(cs));
    if (choice.explicit_cluster && choice.cluster_id == cs.concept_id) ++r.recovered;
  }
  if (r.n) r.rate = static_cast<double>(r.recovered) / static_cast<double>(r.n);
  return r;
}

inline std::optional<double> recovery_rate(std::span<const std::pair<StepDistribution, ConceptTokenSet>> samples) {
  return recovery_count(samples).rate;
}

inline std::optional<double> recovery_rate(const std::vector<std::pair<StepDistribution, ConceptTokenSet>>& samples) {
  return recovery_rate(std::span<const std::pair<StepDistribution, ConceptTokenSet>>(samples));
}

}  // namespace semmass
