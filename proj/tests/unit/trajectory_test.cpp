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
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "semmass/error.hpp"
#include "semmass/trajectory.hpp"

namespace sm = semmass;
using sm::Group;
using sm::testing::make_record;
using sm::testing::make_set;
using sm::testing::make_step;

namespace {

constexpr sm::TokenId kAlias = 1, kOther = 2, kFiller = 3;

const sm::ConceptTokenSet& gold() {
  static const auto cs = make_set("g#gold", {kAlias});
  return cs;
}

// Five steps with the concept's mass only at t_c = 3. Emitted tokens are
// the top-1 of each step.
sm::SampleRecord aligned(const std::string& id, bool correct, double mass_at_tc) {
  std::vector<sm::StepDistribution> steps;
  std::vector<sm::TokenId> ids;
  for (int t = 1; t <= 5; ++t) {
    if (t == 3) {
      steps.push_back(make_step(t, {{kAlias, mass_at_tc}, {kOther, 1.0 - mass_at_tc}}));
    } else {
      steps.push_back(make_step(t, {{kFiller, 0.9}, {kOther, 0.1}}));
    }
    ids.push_back(steps.back().entries.front().token_id);
  }
  auto r = make_record(id, {"Answer"}, correct ? "the answer" : "a guess", ids, steps);
  r.t_c = 3;
  return r;
}

// Flat entropy everywhere except a two-way tie at `peak`.
sm::SampleRecord peaked(const std::string& id, int tc, int peak, int length = 8) {
  std::vector<sm::StepDistribution> steps;
  for (int t = 1; t <= length; ++t)
    steps.push_back(t == peak ? make_step(t, {{kAlias, 0.5}, {kOther, 0.5}}) : make_step(t, {{kFiller, 1.0}}));
  auto r = make_record(id, {"x"}, "y", {}, steps);
  r.t_c = tc;
  return r;
}

// Record whose steps have the given gold masses and emitted-token probabilities.
sm::SampleRecord scored(const std::vector<double>& masses, const std::vector<double>& token_probs) {
  std::vector<sm::StepDistribution> steps;
  std::vector<sm::TokenId> ids;
  for (std::size_t i = 0; i < masses.size(); ++i) {
    const int t = static_cast<int>(i) + 1;
    const double m = masses[i], p = token_probs[i];
    // Emitted token 10 carries p; the alias gets m (or shares with 10 when
    // the two overlap in mass).
    std::vector<std::pair<sm::TokenId, double>> es{{10, p}};
    if (m > 0) es.emplace_back(kAlias, std::min(m, 1.0 - p));
    steps.push_back(make_step(t, es));
    ids.push_back(10);
  }
  return make_record("s", {"x"}, "y", ids, steps);
}

}  // namespace

TEST(AlignToCommitment, WindowZeroEqualsStepOneMeans) {
  std::vector<sm::SampleRecord> rs;
  for (int i = 0; i < 4; ++i) {
    auto r = aligned("r" + std::to_string(i), i % 2 == 0, 0.2 * (i + 1));
    r.t_c = 1;
    rs.push_back(r);
  }
  const std::vector<sm::ConceptTokenSet> cs(rs.size(), gold());
  const auto curves = sm::align_to_commitment(rs, cs, 0);
  for (const auto& p : curves.points) EXPECT_EQ(p.offset, 0);
  const auto e = curves.at(0, Group::correct, "entropy");
  ASSERT_TRUE(e);
  EXPECT_EQ(e->n, 2u);
  EXPECT_NEAR(e->mean, sm::step_entropy(rs[0].steps[0]), 1e-15);
}

TEST(AlignToCommitment, RecoversGroupMeansAtCommitment) {
  std::vector<sm::SampleRecord> rs;
  for (double m : {0.90, 0.94, 0.92, 0.92}) rs.push_back(aligned("c" + std::to_string(rs.size()), true, m));
  for (double m : {0.70, 0.84, 0.77}) rs.push_back(aligned("h" + std::to_string(rs.size()), false, m));
  const std::vector<sm::ConceptTokenSet> cs(rs.size(), gold());
  const auto curves = sm::align_to_commitment(rs, cs, 5);
  EXPECT_NEAR(curves.at(0, Group::correct, "p_mass")->mean, 0.92, 1e-12);
  EXPECT_NEAR(curves.at(0, Group::halluc, "p_mass")->mean, 0.77, 1e-12);
  EXPECT_EQ(curves.at(0, Group::correct, "p_mass")->n, 4u);
  for (int off : {-2, -1, 1, 2}) {
    EXPECT_EQ(curves.at(off, Group::correct, "p_mass")->mean, 0.0) << off;
    EXPECT_EQ(curves.at(off, Group::halluc, "p_mass")->mean, 0.0) << off;
  }
  // Offsets beyond the dump are simply absent.
  EXPECT_FALSE(curves.at(3, Group::correct, "p_mass"));
  EXPECT_FALSE(curves.at(-3, Group::halluc, "entropy"));
}

TEST(AlignToCommitment, SkipsLongFormWithoutCommitment) {
  auto r = aligned("lf", false, 0.5);
  r.task = sm::Task::long_form;
  r.t_c.reset();
  std::vector<sm::SampleRecord> rs{r, aligned("ok", true, 0.5)};
  const std::vector<sm::ConceptTokenSet> cs(rs.size(), gold());
  const auto curves = sm::align_to_commitment(rs, cs);
  ASSERT_EQ(curves.skipped.size(), 1u);
  EXPECT_EQ(curves.skipped[0], "lf");
  EXPECT_FALSE(curves.at(0, Group::halluc, "p_mass"));
  EXPECT_THROW(sm::align_to_commitment(rs, cs, -1), sm::DomainError);
}

TEST(AlignToCommitment, FloorsMissingTokens) {
  auto r = aligned("f", true, 0.5);
  r.generated_token_ids[1] = 999;
  std::vector<sm::SampleRecord> rs{r};
  const std::vector<sm::ConceptTokenSet> cs(rs.size(), gold());
  const auto curves = sm::align_to_commitment(rs, cs);
  ASSERT_EQ(curves.floored.size(), 1u);
  EXPECT_NEAR(curves.at(-1, Group::correct, "token_prob")->mean, 0.1, 1e-15);
}

TEST(EntropyLocalization, PeakAtCommitment) {
  std::vector<sm::SampleRecord> rs{peaked("a", 2, 2), peaked("b", 4, 4)};
  const auto loc = sm::entropy_localization(rs);
  EXPECT_EQ(loc.n, 2u);
  EXPECT_EQ(*loc.exact_frac, 1.0);
  EXPECT_EQ(*loc.within1_frac, 1.0);
}

TEST(EntropyLocalization, PeakTwoStepsLate) {
  std::vector<sm::SampleRecord> rs{peaked("a", 2, 4), peaked("b", 3, 5)};
  const auto loc = sm::entropy_localization(rs);
  EXPECT_EQ(*loc.exact_frac, 0.0);
  EXPECT_EQ(*loc.within1_frac, 0.0);
}

TEST(EntropyLocalization, MixedFixture) {
  std::vector<sm::SampleRecord> rs;
  for (int i = 0; i < 25; ++i) {
    const int offset = i < 5 ? 0 : (i < 8 ? (i % 2 ? 1 : -1) : 3);
    rs.push_back(peaked("s" + std::to_string(i), 3, 3 + offset));
  }
  const auto loc = sm::entropy_localization(rs);
  EXPECT_EQ(loc.n, 25u);
  EXPECT_NEAR(*loc.exact_frac, 0.20, 1e-15);
  EXPECT_NEAR(*loc.within1_frac, 0.32, 1e-15);
}

TEST(EntropyLocalization, TiesGoToEarliestStep) {
  auto r = peaked("t", 2, 2);
  r.steps[4] = make_step(5, {{kAlias, 0.5}, {kOther, 0.5}});
  const auto loc = sm::entropy_localization(std::vector<sm::SampleRecord>{r});
  EXPECT_EQ(*loc.exact_frac, 1.0);
  // Single-step and unannotated long-form records are excluded.
  auto lf = peaked("lf", 1, 1);
  lf.task = sm::Task::long_form;
  lf.t_c.reset();
  EXPECT_EQ(sm::entropy_localization(std::vector<sm::SampleRecord>{peaked("one", 1, 1, 1), lf}).n, 0u);
}

TEST(PerStepAuroc, InformativeOnlyAtCommitment) {
  std::vector<sm::SampleRecord> rs;
  for (int i = 0; i < 6; ++i) rs.push_back(aligned("c" + std::to_string(i), true, 0.8 + 0.01 * i));
  for (int i = 0; i < 6; ++i) rs.push_back(aligned("h" + std::to_string(i), false, 0.3 + 0.01 * i));
  const std::vector<sm::ConceptTokenSet> cs(rs.size(), gold());
  const auto rows = sm::per_step_auroc(rs, cs, 2);
  ASSERT_EQ(rows.size(), 5u);
  for (const auto& row : rows) {
    EXPECT_EQ(row.n_halluc, 6u);
    EXPECT_EQ(row.n_correct, 6u);
    if (row.offset == 0) {
      EXPECT_EQ(row.pmass_auroc, 1.0);
    } else {
      EXPECT_EQ(row.pmass_auroc, 0.5);
      EXPECT_EQ(row.token_prob_auroc, 0.5);  // identical filler steps
    }
  }
}

TEST(PerStepAuroc, FlippingLabelsMirrorsAuroc) {
  std::vector<sm::SampleRecord> rs, flipped;
  sm::detail::Rng rng(4);
  for (int i = 0; i < 12; ++i) {
    const bool correct = i % 3 == 0;
    const double m = rng.uniform(0.05, 0.95);
    rs.push_back(aligned("r" + std::to_string(i), correct, m));
    flipped.push_back(aligned("r" + std::to_string(i), !correct, m));
  }
  const std::vector<sm::ConceptTokenSet> cs(rs.size(), gold());
  const auto a = sm::per_step_auroc(rs, cs, 1);
  const auto b = sm::per_step_auroc(flipped, cs, 1);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(a[i].pmass_auroc, 1.0 - b[i].pmass_auroc, 1e-12);
    EXPECT_NEAR(a[i].token_prob_auroc, 1.0 - b[i].token_prob_auroc, 1e-12);
  }
}

TEST(PerStepAuroc, SingleClassOffsetsAreOmitted) {
  std::vector<sm::SampleRecord> rs{aligned("a", true, 0.5), aligned("b", true, 0.6)};
  const std::vector<sm::ConceptTokenSet> cs(rs.size(), gold());
  EXPECT_TRUE(sm::per_step_auroc(rs, cs).empty());
}

TEST(AggregateScores, SpecExamples) {
  const auto a = sm::aggregate_scores(scored({0.8, 0.0, 0.0}, {0.2, 1.0, 1.0}), gold());
  EXPECT_NEAR(a.pmass_t1, 0.8, 1e-15);
  EXPECT_NEAR(a.pmass_mean, 0.8 / 3.0, 1e-15);
  const auto b = sm::aggregate_scores(scored({0.0, 0.0, 0.0}, {0.5, 1.0, 1.0}), gold());
  EXPECT_NEAR(b.ln_nll, std::log(0.5) / 3.0, 1e-15);
  EXPECT_NEAR(b.ln_nll, -0.2310, 1e-4);
  EXPECT_NEAR(b.logp_y1, std::log(0.5), 1e-15);
  const auto c = sm::aggregate_scores(scored({0.4}, {0.6}), gold());
  EXPECT_EQ(c.pmass_t1, c.pmass_mean);
  EXPECT_EQ(c.logp_y1, c.ln_nll);
}

TEST(AggregateScores, MissingTokenFloorsOrThrows) {
  auto r = scored({0.3, 0.3}, {0.6, 0.6});
  r.generated_token_ids[1] = 77;
  const auto a = sm::aggregate_scores(r, gold());
  ASSERT_EQ(a.floored_steps, std::vector<int>{2});
  EXPECT_NEAR(a.ln_nll, (std::log(0.6) + std::log(0.3)) / 2.0, 1e-15);
  EXPECT_THROW(sm::aggregate_scores(r, gold(), true), sm::DomainError);
}

TEST(AggregateScores, DilutionAndPermutation) {
  sm::detail::Rng rng(99);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto len = static_cast<std::size_t>(rng.between(1, 10));
    std::vector<double> ms(len), ps(len);
    for (std::size_t i = 0; i < len; ++i) {
      ps[i] = rng.uniform(0.05, 0.9);
      ms[i] = rng.bernoulli(0.2) ? 0.0 : rng.uniform(0.0, 1.0 - ps[i]);
    }
    ms[0] = std::max(ms[0], 0.01 * (1.0 - ps[0]));
    const auto base = sm::aggregate_scores(scored(ms, ps), gold());
    EXPECT_LE(base.pmass_mean, *std::max_element(ms.begin(), ms.end()) + 1e-15);
    EXPECT_LE(base.logp_y1, 0.0);
    EXPECT_LE(base.ln_nll, 0.0);

    auto ms2 = ms, ps2 = ps;
    ms2.push_back(0.0);
    ps2.push_back(rng.uniform(0.05, 0.9));
    const auto diluted = sm::aggregate_scores(scored(ms2, ps2), gold());
    EXPECT_LT(diluted.pmass_mean, base.pmass_mean);
    EXPECT_EQ(diluted.pmass_t1, base.pmass_t1);

    // Reversing step order keeps the mean log-probability.
    std::vector<double> mr(ms.rbegin(), ms.rend()), pr(ps.rbegin(), ps.rend());
    const auto reversed = sm::aggregate_scores(scored(mr, pr), gold());
    EXPECT_NEAR(reversed.ln_nll, base.ln_nll, 1e-12);
    if (len > 1 && ms.front() != ms.back()) {
      EXPECT_NE(reversed.pmass_t1, base.pmass_t1);
    }
  }
}

TEST(ProposeTc, Examples) {
  EXPECT_EQ(sm::propose_tc(scored({0.7}, {0.2}), gold()), 1);
  EXPECT_EQ(sm::propose_tc(scored({0.0, 0.0}, {0.5, 0.5}), gold()), std::nullopt);
  EXPECT_EQ(sm::propose_tc(scored({0.0, 0.05, 0.0, 0.15, 0.3}, {0.9, 0.9, 0.9, 0.8, 0.7}), gold()), 4);
}
