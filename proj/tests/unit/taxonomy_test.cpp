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


#include <algorithm>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "semmass/error.hpp"
#include "semmass/taxonomy.hpp"

namespace sm = semmass;
using sm::SampleCategory;
using sm::testing::Fragmentation;
using sm::testing::make_record;
using sm::testing::make_set;
using sm::testing::make_step;

namespace {

constexpr sm::TokenId kGold = 1, kGoldAlt = 2, kGoldNext = 3, kWrong = 7, kWrongNext = 8;

// Gold concept with a two-token alias (1, 3) and a single-token alias 2.
sm::ConceptTokenSet gold_set() { return make_set("s#gold", {kGold, kGoldAlt}, {{kGold, kGoldNext}, {kGoldAlt}}); }

// One sample with the requested verdict, mass on the gold concept, and a
// chosen first/second emitted token.
sm::SampleRecord sample(const std::string& id, bool correct, double mass, sm::TokenId first, sm::TokenId second,
                        const std::string& model = "m") {
  const double rest = 1.0 - mass;
  std::vector<std::pair<sm::TokenId, double>> es{{kGold, mass * 0.75}, {kGoldAlt, mass * 0.25}};
  es.emplace_back(kWrong, rest * 0.9);
  es.emplace_back(9, rest * 0.1);
  if (first != kGold && first != kGoldAlt && first != kWrong && first != 9) es.back().first = first;
  auto r = make_record(id, {"Gold Answer"}, correct ? "it is gold answer" : "it is something else", {first, second},
                       {make_step(1, es), make_step(2, {{second, 0.8}, {50, 0.2}})}, model);
  return r;
}

std::vector<sm::ClassifiedSample> ten_sample_fixture() {
  const auto g = gold_set();
  std::vector<sm::ClassifiedSample> out;
  for (int i = 0; i < 4; ++i) out.push_back(sm::classify(sample("c" + std::to_string(i), true, 0.6, kGold, kGoldNext), g, 0.2));
  for (int i = 0; i < 3; ++i) out.push_back(sm::classify(sample("n" + std::to_string(i), false, 0.05, kWrong, kWrongNext), g, 0.2));
  out.push_back(sm::classify(sample("sf", false, 0.4, kWrong, kWrongNext), g, 0.2));
  out.push_back(sm::classify(sample("a", false, 0.5, kGold, kGoldNext), g, 0.2));
  out.push_back(sm::classify(sample("b", false, 0.5, kGold, kWrongNext), g, 0.2));
  return out;
}

}  // namespace

TEST(JudgeCorrectness, CaseInsensitiveSubstring) {
  auto r = make_record("q", {"Paris"}, "The capital is paris.", {1}, {make_step(1, {{1, 1.0}})});
  EXPECT_TRUE(sm::judge_correctness(r));
}

TEST(JudgeCorrectness, SharedFirstNameIsNotAMatch) {
  auto r = make_record("q", {"Adam Smith"}, "Adam Lambert", {1}, {make_step(1, {{1, 1.0}})});
  EXPECT_FALSE(sm::judge_correctness(r));
}

TEST(JudgeCorrectness, WhitespaceIsCollapsed) {
  auto r = make_record("q", {"New   York"}, "in new\n\tyork city", {1}, {make_step(1, {{1, 1.0}})});
  EXPECT_TRUE(sm::judge_correctness(r));
}

TEST(JudgeCorrectness, MultipleChoiceUsesIndices) {
  auto r = make_record("q", {}, "B", {1}, {make_step(1, {{1, 1.0}})});
  r.task = sm::Task::mcqa;
  r.mcqa_info = sm::McqaInfo{4, 1, 1};
  EXPECT_TRUE(sm::judge_correctness(r));
  r.mcqa_info->selected_index = 2;
  EXPECT_FALSE(sm::judge_correctness(r));
  r.mcqa_info.reset();
  EXPECT_THROW(sm::judge_correctness(r), sm::ValidationError);
}

TEST(Classify, FragmentationExampleIsSelectionFailure) {
  const Fragmentation f;
  const auto c = sm::classify(f.record(), f.gold, 0.2);
  EXPECT_FALSE(c.verdict);
  EXPECT_EQ(c.category, SampleCategory::cf_selection_failure);
  EXPECT_NEAR(c.diagnostics.p_mass, 0.490, 1e-12);
  EXPECT_FALSE(c.h_t2.has_value());
  EXPECT_FALSE(c.bigram_on_alias.has_value());
}

TEST(Classify, SharedBigramIsTypeA) {
  // The gold alias extends the emitted bigram, so the first two tokens agree
  // and the answer still fails the substring match.
  const sm::testing::VocabTokenizer tok({" George", " Washington", " Carver", "George", "Washington", "Carver"});
  const auto gold = sm::build_concept_set("q#gold", std::vector<std::string>{"George Washington Carver"}, tok);
  const auto g = tok.id_of(" George"), w = tok.id_of(" Washington");
  auto r = make_record("q", {"George Washington Carver"}, " George Washington", {g, w},
                       {make_step(1, {{g, 0.6}, {tok.id_of(" Carver"), 0.1}}), make_step(2, {{w, 0.9}, {5, 0.05}})});
  const auto c = sm::classify(r, gold, 0.2);
  EXPECT_FALSE(c.verdict);
  EXPECT_EQ(c.category, SampleCategory::cf_divergence_type_a);
  ASSERT_TRUE(c.bigram_on_alias.has_value());
  EXPECT_TRUE(*c.bigram_on_alias);
  ASSERT_TRUE(c.h_t2.has_value());
  EXPECT_NEAR(*c.h_t2, sm::step_entropy(r.steps[1]), 1e-15);
}

TEST(Classify, VerdictTakesPrecedence) {
  const auto g = gold_set();
  for (double mass : {0.0, 0.1, 0.5, 1.0}) {
    const auto c = sm::classify(sample("c", true, mass, kWrong, kWrongNext), g, 0.2);
    EXPECT_EQ(c.category, SampleCategory::correct) << mass;
  }
}

TEST(Classify, Categories) {
  const auto g = gold_set();
  EXPECT_EQ(sm::classify(sample("x", false, 0.1, kGold, kGoldNext), g, 0.2).category, SampleCategory::halluc_no_cf);
  EXPECT_EQ(sm::classify(sample("x", false, 0.2, kWrong, kGoldNext), g, 0.2).category,
            SampleCategory::cf_selection_failure);
  EXPECT_EQ(sm::classify(sample("x", false, 0.5, kGold, kWrongNext), g, 0.2).category,
            SampleCategory::cf_divergence_type_b);
  // A single-token alias has no bigram to share.
  EXPECT_EQ(sm::classify(sample("x", false, 0.5, kGoldAlt, kGoldNext), g, 0.2).category,
            SampleCategory::cf_divergence_type_b);
}

TEST(Classify, DivergenceWithoutNextStepIsFlaggedTypeB) {
  const auto g = gold_set();
  auto r = sample("x", false, 0.5, kGold, kGoldNext);
  r.steps.pop_back();
  r.generated_token_ids.pop_back();
  const auto c = sm::classify(r, g, 0.2);
  EXPECT_EQ(c.category, SampleCategory::cf_divergence_type_b);
  EXPECT_TRUE(c.no_next_token);
  EXPECT_FALSE(c.h_t2.has_value());
}

TEST(Classify, MissingCommitmentStepIsAnError) {
  const auto g = gold_set();
  auto r = sample("x", false, 0.5, kGold, kGoldNext);
  r.t_c = 5;
  EXPECT_THROW(sm::classify(r, g, 0.2), sm::DomainError);
  r.t_c.reset();
  r.task = sm::Task::long_form;
  EXPECT_THROW(sm::classify(r, g, 0.2), sm::DomainError);
}

TEST(Classify, ExactMassDecidesTheThreshold) {
  const auto g = gold_set();
  auto r = sample("x", false, 0.1, kWrong, kWrongNext);
  EXPECT_EQ(sm::classify(r, g, 0.2).category, SampleCategory::halluc_no_cf);
  r.steps[0].exact_fields[std::string(sm::kExactPmassCorrect)] = 0.3;
  const auto c = sm::classify(r, g, 0.2);
  EXPECT_EQ(c.category, SampleCategory::cf_selection_failure);
  EXPECT_TRUE(c.diagnostics.p_mass_exact);
}

TEST(CfTable, TenSampleFixture) {
  const auto s = sm::cf_table(ten_sample_fixture());
  EXPECT_EQ(s.n_samples, 10u);
  EXPECT_EQ(s.n_correct, 4u);
  EXPECT_EQ(s.n_halluc, 6u);
  EXPECT_EQ(s.n_no_cf, 3u);
  EXPECT_EQ(s.n_cf, 3u);
  EXPECT_EQ(s.n_sf, 1u);
  EXPECT_EQ(s.n_div(), 2u);
  EXPECT_DOUBLE_EQ(*s.cf_pct, 50.0);
  EXPECT_NEAR(*s.sf_pct, 16.7, 0.05);
  EXPECT_DOUBLE_EQ(*s.type_a_frac, 0.5);
}

TEST(CfTable, EmptyAndAllCorrect) {
  const auto e = sm::cf_table(std::vector<sm::ClassifiedSample>{});
  EXPECT_EQ(e.n_samples, 0u);
  EXPECT_FALSE(e.cf_pct || e.sf_pct || e.type_a_frac);
  auto ten = ten_sample_fixture();
  ten.resize(4);
  const auto s = sm::cf_table(ten);
  EXPECT_EQ(s.n_halluc, 0u);
  EXPECT_FALSE(s.cf_pct.has_value());
}

TEST(ThresholdSweep, AllHallucinationsAboveTopThreshold) {
  const auto g = gold_set();
  std::vector<sm::SampleRecord> rs{sample("a", false, 0.5, kWrong, kWrongNext), sample("b", false, 0.45, kGold, kGoldNext),
                                   sample("c", true, 0.1, kWrong, kWrongNext)};
  const std::vector<sm::ConceptTokenSet> cs(rs.size(), g);
  const auto rows = sm::threshold_sweep(rs, cs, {0.1, 0.2, 0.3, 0.4});
  ASSERT_EQ(rows.size(), 4u);
  for (const auto& row : rows) EXPECT_DOUBLE_EQ(*row.summary.cf_pct, 100.0);
}

TEST(ThresholdSweep, RejectsUnsortedThresholds) {
  const std::vector<sm::SampleRecord> rs;
  const std::vector<sm::ConceptTokenSet> cs;
  EXPECT_THROW(sm::threshold_sweep(rs, cs, {0.3, 0.1}), sm::DomainError);
}

// Hallucination mass histogram built so the CF% column lands on
// 41.7 / 31.5 / 26.0 / 22.5 at thresholds 0.1 .. 0.4.
TEST(ThresholdSweep, CalibratedHistogram) {
  const auto g = gold_set();
  const std::vector<std::pair<int, double>> histogram{{583, 0.05}, {102, 0.15}, {55, 0.25}, {35, 0.35}, {225, 0.5}};
  std::vector<sm::SampleRecord> rs;
  for (const auto& [count, mass] : histogram)
    for (int i = 0; i < count; ++i) rs.push_back(sample("h" + std::to_string(rs.size()), false, mass, kWrong, kWrongNext));
  for (int i = 0; i < 300; ++i) rs.push_back(sample("c" + std::to_string(i), true, 0.9, kGold, kGoldNext));
  const std::vector<sm::ConceptTokenSet> cs(rs.size(), g);
  const auto rows = sm::threshold_sweep(rs, cs, {0.1, 0.2, 0.3, 0.4});
  const double expected[] = {41.7, 31.5, 26.0, 22.5};
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(rows[i].summary.n_halluc, 1000u);
    EXPECT_NEAR(*rows[i].summary.cf_pct, expected[i], 1e-9);
  }
}

TEST(TaxonomyProperties, RandomCorpora) {
  const auto g = gold_set();
  sm::detail::Rng rng(2024);
  const std::vector<double> thetas{0.1, 0.2, 0.3, 0.4};
  for (int corpus = 0; corpus < 200; ++corpus) {
    const auto n = static_cast<std::size_t>(rng.between(1, 40));
    std::vector<sm::SampleRecord> rs;
    for (std::size_t i = 0; i < n; ++i) {
      const sm::TokenId firsts[] = {kGold, kGoldAlt, kWrong};
      const sm::TokenId seconds[] = {kGoldNext, kWrongNext};
      rs.push_back(sample("s" + std::to_string(i), rng.bernoulli(0.4), rng.uniform(), firsts[rng.below(3)],
                          seconds[rng.below(2)]));
    }
    const std::vector<sm::ConceptTokenSet> cs(n, g);
    const auto rows = sm::threshold_sweep(rs, cs, thetas);
    std::set<std::string> previous_cf;
    for (std::size_t t = 0; t < thetas.size(); ++t) {
      const auto& s = rows[t].summary;
      EXPECT_EQ(s.n_correct + s.n_no_cf + s.n_sf + s.n_type_a + s.n_type_b, n);
      if (t > 0 && s.cf_pct && rows[t - 1].summary.cf_pct) {
        EXPECT_LE(*s.cf_pct, *rows[t - 1].summary.cf_pct);
      }
      std::set<std::string> cf;
      for (std::size_t i = 0; i < n; ++i) {
        const auto c = sm::classify(rs[i], g, thetas[t]);
        if (c.verdict) {
          EXPECT_EQ(c.category, SampleCategory::correct);
        }
        if (sm::is_commitment_failure(c.category)) {
          cf.insert(c.sample_id);
          EXPECT_GE(c.diagnostics.p_mass, thetas[t]);
          EXPECT_FALSE(c.verdict);
        }
        if (c.category == SampleCategory::cf_selection_failure) {
          EXPECT_FALSE(g.contains(c.emitted));
        }
        if (c.category == SampleCategory::cf_divergence_type_a) {
          EXPECT_TRUE(g.contains(c.emitted));
        }
        EXPECT_EQ(c.h_t2.has_value(), sm::is_divergence(c.category) && rs[i].step(c.t_c + 1) != nullptr);
      }
      if (t > 0) {
        EXPECT_TRUE(std::includes(previous_cf.begin(), previous_cf.end(), cf.begin(), cf.end()));
      }
      previous_cf = std::move(cf);
    }
  }
}

TEST(MatchedGroups, CorrectGroupRequiresThresholdMass) {
  const auto g = gold_set();
  std::vector<sm::ClassifiedSample> cs{
      sm::classify(sample("c1", true, 0.6, kGold, kGoldNext), g, 0.2),
      sm::classify(sample("c2", true, 0.1, kGold, kGoldNext), g, 0.2),
      sm::classify(sample("sf", false, 0.4, kWrong, kWrongNext), g, 0.2),
  };
  const auto m = sm::matched_groups(cs);
  ASSERT_EQ(m.corr_top1.size(), 1u);
  EXPECT_DOUBLE_EQ(m.corr_top1[0], 0.45);
  ASSERT_EQ(m.sf_top1.size(), 1u);
  EXPECT_DOUBLE_EQ(m.sf_top1[0], 0.3);
  EXPECT_DOUBLE_EQ(m.sf_wrong_token_prob[0], 0.6 * 0.9);
}

TEST(ClassificationJson, FieldsAndNulls) {
  const Fragmentation f;
  const auto line = sm::to_json_line(sm::classify(f.record(), f.gold, 0.2));
  EXPECT_NE(line.find("\"category\":\"cf_selection_failure\""), std::string::npos);
  EXPECT_NE(line.find("\"p_mass\":0.49"), std::string::npos);
  EXPECT_NE(line.find("\"h_t2\":null"), std::string::npos);
  EXPECT_NE(line.find("\"bigram_on_alias\":null"), std::string::npos);
  EXPECT_EQ(line.find('\n'), std::string::npos);
}
