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


#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "semmass/error.hpp"
#include "semmass/semantic_mass.hpp"

namespace sm = semmass;
using sm::testing::Fragmentation;
using sm::testing::make_set;
using sm::testing::make_step;

TEST(PMass, FragmentedGoldConcept) {
  const Fragmentation f;
  EXPECT_NEAR(sm::p_mass(f.step, f.gold), 0.490, 1e-12);
}

TEST(PMass, DisjointAndFullSets) {
  const auto s = make_step(1, {{1, 0.5}, {2, 0.5}});
  EXPECT_EQ(sm::p_mass(s, make_set("c", {3, 4})), 0.0);
  EXPECT_EQ(sm::p_mass(s, make_set("c", {1, 2})), 1.0);
}

TEST(PMass, ExactValueIsPreferredForGold) {
  auto s = make_step(1, {{1, 0.3}, {2, 0.2}});
  const auto cs = make_set("c", {1});
  EXPECT_FALSE(sm::gold_p_mass(s, cs).exact);
  EXPECT_DOUBLE_EQ(sm::gold_p_mass(s, cs).value, 0.3);
  s.exact_fields[std::string(sm::kExactPmassCorrect)] = 0.41;
  const auto g = sm::gold_p_mass(s, cs);
  EXPECT_TRUE(g.exact);
  EXPECT_DOUBLE_EQ(g.value, 0.41);
  EXPECT_DOUBLE_EQ(sm::p_mass(s, cs), 0.3);  // plain sum ignores the override
}

TEST(StepEntropy, Fixtures) {
  EXPECT_EQ(sm::step_entropy(make_step(1, {{1, 1.0}})), 0.0);
  EXPECT_NEAR(sm::step_entropy(make_step(1, {{1, 0.5}, {2, 0.5}})), std::log(2.0), 1e-15);
  EXPECT_NEAR(sm::step_entropy(make_step(1, {{1, 0.9}, {2, 0.1}})), 0.3251, 1e-4);
  EXPECT_NEAR(sm::step_entropy(make_step(1, {{1, 0.9}, {2, 0.1}})), -0.9 * std::log(0.9) - 0.1 * std::log(0.1), 1e-15);
}

TEST(StepEntropy, RenormalizesTruncatedMass) {
  EXPECT_NEAR(sm::step_entropy(make_step(1, {{1, 0.45}, {2, 0.05}})),
              sm::step_entropy(make_step(1, {{1, 0.9}, {2, 0.1}})), 1e-15);
  EXPECT_EQ(sm::step_entropy(make_step(1, {{1, 0.7}, {2, 0.0}})), 0.0);
}

TEST(StepEntropy, ZeroMassIsAnError) {
  EXPECT_THROW(sm::step_entropy(make_step(1, {{1, 0.0}, {2, 0.0}})), sm::DomainError);
  EXPECT_THROW(sm::step_entropy(make_step(1, {})), sm::DomainError);
}

TEST(Spread, Fixtures) {
  EXPECT_DOUBLE_EQ(*sm::spread(make_step(1, {{1, 0.6}, {9, 0.4}}), make_set("c", {1})), 1.0);
  EXPECT_NEAR(*sm::spread(make_step(1, {{1, 0.1}, {2, 0.1}, {3, 0.1}, {4, 0.1}}), make_set("c", {1, 2, 3, 4})), 4.0,
              1e-12);
  const Fragmentation f;
  EXPECT_NEAR(*sm::spread(f.step, f.gold), 0.2401 / 0.089922, 1e-9);
  EXPECT_NEAR(*sm::spread(f.step, f.gold), 2.670, 1e-3);
  EXPECT_FALSE(sm::spread(f.step, make_set("c", {99})).has_value());
}

TEST(MassDiagnostics, FragmentationExample) {
  const Fragmentation f;
  const auto d = sm::mass_diagnostics(f.step, f.gold, Fragmentation::kMos);
  EXPECT_NEAR(d.p_mass, 0.490, 1e-12);
  EXPECT_DOUBLE_EQ(d.top1_alias_prob, 0.244);
  ASSERT_TRUE(d.d2 && d.d3 && d.spread);
  EXPECT_NEAR(*d.d2, 0.498, 1e-3);
  EXPECT_NEAR(*d.d3, 0.637, 1e-3);
  EXPECT_FALSE(d.greedy_in_set);
  EXPECT_DOUBLE_EQ(d.greedy_prob, 0.312);
  EXPECT_FALSE(d.greedy_missing);
}

TEST(MassDiagnostics, SingleAliasTokenCarryingAllMass) {
  const auto s = make_step(1, {{5, 0.7}, {6, 0.3}});
  const auto d = sm::mass_diagnostics(s, make_set("c", {5}), 5);
  EXPECT_EQ(*d.d2, 1.0);
  EXPECT_EQ(*d.d3, 1.0);
  EXPECT_TRUE(d.greedy_in_set);
  EXPECT_EQ(*d.spread, 1.0);
}

TEST(MassDiagnostics, NoConceptMass) {
  const auto d = sm::mass_diagnostics(make_step(1, {{5, 0.7}, {6, 0.3}}), make_set("c", {9}), 5);
  EXPECT_EQ(d.p_mass, 0.0);
  EXPECT_FALSE(d.d2 || d.d3 || d.spread);
  EXPECT_FALSE(d.greedy_in_set);
}

TEST(MassDiagnostics, EmittedTokenOutsideTopK) {
  const auto d = sm::mass_diagnostics(make_step(1, {{5, 0.7}, {6, 0.3}}), make_set("c", {5}), 77);
  EXPECT_TRUE(d.greedy_missing);
  EXPECT_EQ(d.greedy_prob, 0.0);
  EXPECT_EQ(*d.d3, 0.0);
}

TEST(MassDiagnostics, ExactMassFeedsRatiosOnly) {
  auto s = make_step(1, {{5, 0.4}, {6, 0.3}, {7, 0.1}});
  s.exact_fields[std::string(sm::kExactPmassCorrect)] = 0.8;
  const auto cs = make_set("c", {5, 7});
  const auto d = sm::mass_diagnostics(s, cs, 6, true);
  EXPECT_TRUE(d.p_mass_exact);
  EXPECT_DOUBLE_EQ(d.p_mass, 0.8);
  EXPECT_DOUBLE_EQ(*d.d2, 0.4 / 0.8);
  EXPECT_DOUBLE_EQ(*d.d3, 0.3 / 0.8);
  EXPECT_DOUBLE_EQ(*d.spread, 0.25 / 0.17);
  EXPECT_DOUBLE_EQ(sm::mass_diagnostics(s, cs, 6, false).p_mass, 0.5);
}

// Naive recomputation straight from the definitions.
TEST(MassDiagnostics, MatchesBruteForceOnRandomSteps) {
  sm::detail::Rng rng(11);
  for (int trial = 0; trial < 2000; ++trial) {
    const int k = static_cast<int>(rng.between(1, 8));
    std::vector<std::pair<sm::TokenId, double>> es;
    std::vector<double> w(static_cast<std::size_t>(k));
    double z = 0.0;
    for (auto& x : w) z += (x = rng.exponential());
    const double total = rng.uniform(0.05, 1.0);
    for (int i = 0; i < k; ++i) es.emplace_back(i, total * w[static_cast<std::size_t>(i)] / z);
    const auto s = make_step(1, es);
    std::set<sm::TokenId> members;
    for (int i = 0; i < k; ++i)
      if (rng.bernoulli(0.5)) members.insert(i);
    const auto cs = make_set("c", {members.begin(), members.end()});
    const auto y = static_cast<sm::TokenId>(rng.below(static_cast<std::uint64_t>(k)));

    double pm = 0.0, sq = 0.0, top = 0.0, h = 0.0, mass = 0.0, py = 0.0;
    for (const auto& [id, p] : es) mass += p;
    for (const auto& [id, p] : es) {
      if (members.count(id)) {
        pm += p;
        sq += p * p;
        top = std::max(top, p);
      }
      if (id == y) py = p;
      if (p > 0) h -= (p / mass) * std::log(p / mass);
    }
    const auto d = sm::mass_diagnostics(s, cs, y);
    EXPECT_NEAR(d.p_mass, pm, 1e-12);
    EXPECT_NEAR(d.top1_alias_prob, top, 1e-12);
    EXPECT_NEAR(d.entropy, h, 1e-12);
    EXPECT_NEAR(d.greedy_prob, py, 1e-12);
    EXPECT_EQ(d.greedy_in_set, members.count(y) == 1);
    EXPECT_LE(d.top1_alias_prob, d.p_mass);
    EXPECT_LE(d.p_mass, 1.0 + 1e-12);
    EXPECT_LE(d.entropy, std::log(static_cast<double>(k)) + 1e-12);
    EXPECT_GE(d.entropy, 0.0);
    if (pm > 0) {
      EXPECT_NEAR(*d.spread, pm * pm / sq, 1e-12);
      EXPECT_GE(*d.spread, 1.0 - 1e-12);
      EXPECT_LE(*d.spread, static_cast<double>(members.size()) + 1e-12);
      EXPECT_NEAR(*d.d2, top / pm, 1e-12);
      EXPECT_NEAR(*d.d3, py / pm, 1e-12);
    } else {
      EXPECT_FALSE(d.spread || d.d2 || d.d3);
    }

    // Additivity over a disjoint split of the set.
    std::vector<sm::TokenId> a, b;
    for (auto m : members) (rng.bernoulli(0.5) ? a : b).push_back(m);
    EXPECT_NEAR(sm::p_mass(s, make_set("a", a)) + sm::p_mass(s, make_set("b", b)), pm, 1e-12);
  }
}
