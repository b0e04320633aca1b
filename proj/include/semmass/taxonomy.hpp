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

#include <algorithm>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "semmass/concept_sets.hpp"
#include "semmass/data_model.hpp"
#include "semmass/detail/format.hpp"
#include "semmass/error.hpp"
#include "semmass/semantic_mass.hpp"

namespace semmass {

inline constexpr double kDefaultTheta = 0.2;

enum class SampleCategory { correct, halluc_no_cf, cf_selection_failure, cf_divergence_type_a, cf_divergence_type_b };

inline std::string_view to_string(SampleCategory c) {
  switch (c) {
    case SampleCategory::correct: return "correct";
    case SampleCategory::halluc_no_cf: return "halluc_no_cf";
    case SampleCategory::cf_selection_failure: return "cf_selection_failure";
    case SampleCategory::cf_divergence_type_a: return "cf_divergence_type_a";
    case SampleCategory::cf_divergence_type_b: return "cf_divergence_type_b";
  }
  return "?";
}

inline bool is_commitment_failure(SampleCategory c) {
  return c == SampleCategory::cf_selection_failure || c == SampleCategory::cf_divergence_type_a ||
         c == SampleCategory::cf_divergence_type_b;
}

inline bool is_divergence(SampleCategory c) {
  return c == SampleCategory::cf_divergence_type_a || c == SampleCategory::cf_divergence_type_b;
}

// Case- and whitespace-insensitive substring match against the aliases, or
// option agreement for multiple choice.
inline bool judge_correctness(const SampleRecord& r) {
  if (r.task == Task::mcqa) {
    if (!r.mcqa_info) throw ValidationError(std::string(invariant::kMissingMcqa), r.sample_id);
    return r.mcqa_info->selected_index == r.mcqa_info->correct_index;
  }
  const std::string text = detail::collapse_ws_lower(r.generated_text);
  return std::any_of(r.gold_aliases.begin(), r.gold_aliases.end(), [&](const std::string& a) {
    const std::string needle = detail::collapse_ws_lower(a);
    return !needle.empty() && text.find(needle) != std::string::npos;
  });
}

struct ClassifiedSample {
  std::string sample_id;
  std::string model_id;
  Task task = Task::short_qa;
  bool verdict = false;
  SampleCategory category = SampleCategory::correct;
  double theta = kDefaultTheta;
  int t_c = 1;
  TokenId emitted = 0;
  MassDiagnostics diagnostics;
  std::optional<double> h_t2;            // entropy at t_c + 1, divergences only
  std::optional<bool> bigram_on_alias;   // divergences with a next token only
  bool no_next_token = false;            // divergence forced to Type B
};

// Labels one record against its gold concept set. The gold exact mass is
// used for the threshold test when the dump provides it.
inline ClassifiedSample classify(const SampleRecord& r, const ConceptTokenSet& gold, double theta) {
  const auto tc = resolved_tc(r);
  if (!tc) throw DomainError("sample " + r.sample_id + ": no commitment step");
  const StepDistribution* step = r.step(*tc);
  if (!step) throw DomainError("sample " + r.sample_id + ": no step at t_c=" + std::to_string(*tc));
  const auto y = r.emitted(*tc);
  if (!y) throw DomainError("sample " + r.sample_id + ": no emitted token at t_c=" + std::to_string(*tc));

  ClassifiedSample c;
  c.sample_id = r.sample_id;
  c.model_id = r.model_id;
  c.task = r.task;
  c.theta = theta;
  c.t_c = *tc;
  c.emitted = *y;
  c.diagnostics = mass_diagnostics(*step, gold, *y, true);
  c.verdict = judge_correctness(r);

  if (c.verdict) {
    c.category = SampleCategory::correct;
  } else if (c.diagnostics.p_mass < theta) {
    c.category = SampleCategory::halluc_no_cf;
  } else if (!gold.contains(*y)) {
    c.category = SampleCategory::cf_selection_failure;
  } else {
    if (auto next = r.emitted(*tc + 1)) {
      c.bigram_on_alias = is_alias_prefix({*y, *next}, gold);
      c.category = *c.bigram_on_alias ? SampleCategory::cf_divergence_type_a : SampleCategory::cf_divergence_type_b;
    } else {
      c.no_next_token = true;
      c.category = SampleCategory::cf_divergence_type_b;
    }
    if (const auto* s2 = r.step(*tc + 1); s2 && s2->total_mass() > 0.0) c.h_t2 = step_entropy(*s2);
  }
  return c;
}

struct CfSummary {
  std::size_t n_samples = 0;
  std::size_t n_correct = 0;
  std::size_t n_halluc = 0;
  std::size_t n_no_cf = 0;
  std::size_t n_cf = 0;
  std::size_t n_sf = 0;
  std::size_t n_type_a = 0;
  std::size_t n_type_b = 0;
  std::size_t n_div() const { return n_type_a + n_type_b; }
  std::optional<double> cf_pct;       // percent of hallucinations
  std::optional<double> sf_pct;       // percent of hallucinations
  std::optional<double> type_a_frac;  // fraction of divergences
};

inline CfSummary cf_table(std::span<const ClassifiedSample> samples) {
  CfSummary s;
  s.n_samples = samples.size();
  for (const auto& c : samples) {
    switch (c.category) {
      case SampleCategory::correct: ++s.n_correct; break;
      case SampleCategory::halluc_no_cf: ++s.n_no_cf; break;
      case SampleCategory::cf_selection_failure: ++s.n_sf; break;
      case SampleCategory::cf_divergence_type_a: ++s.n_type_a; break;
      case SampleCategory::cf_divergence_type_b: ++s.n_type_b; break;
    }
  }
  s.n_cf = s.n_sf + s.n_div();
  s.n_halluc = s.n_no_cf + s.n_cf;
  if (s.n_halluc > 0) {
    s.cf_pct = 100.0 * static_cast<double>(s.n_cf) / static_cast<double>(s.n_halluc);
    s.sf_pct = 100.0 * static_cast<double>(s.n_sf) / static_cast<double>(s.n_halluc);
  }
  if (s.n_div() > 0) s.type_a_frac = static_cast<double>(s.n_type_a) / static_cast<double>(s.n_div());
  return s;
}

inline CfSummary cf_table(const std::vector<ClassifiedSample>& samples) {
  return cf_table(std::span<const ClassifiedSample>(samples));
}

struct SweepRow {
  double theta = 0.0;
  CfSummary summary;
};

// CF counts at each threshold. records[i] is judged against csets[i].
inline std::vector<SweepRow> threshold_sweep(std::span<const SampleRecord> records,
                                             std::span<const ConceptTokenSet> csets, std::span<const double> thetas) {
  if (records.size() != csets.size()) throw DomainError("threshold_sweep: records and concept sets differ in length");
  if (!std::is_sorted(thetas.begin(), thetas.end())) throw DomainError("threshold_sweep: thetas not ascending");
  std::vector<SweepRow> out;
  out.reserve(thetas.size());
  for (double theta : thetas) {
    std::vector<ClassifiedSample> cls;
    cls.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) cls.push_back(classify(records[i], csets[i], theta));
    out.push_back({theta, cf_table(cls)});
  }
  return out;
}

inline std::vector<SweepRow> threshold_sweep(const std::vector<SampleRecord>& records,
                                             const std::vector<ConceptTokenSet>& csets,
                                             const std::vector<double>& thetas) {
  return threshold_sweep(std::span<const SampleRecord>(records), std::span<const ConceptTokenSet>(csets),
                         std::span<const double>(thetas));
}

// Top-1 alias probability of selection failures and of correct samples in
// the same mass range (p_mass at or above the threshold).
struct MatchedGroups {
  std::vector<double> sf_top1;
  std::vector<double> corr_top1;
  std::vector<double> sf_wrong_token_prob;
};

inline MatchedGroups matched_groups(std::span<const ClassifiedSample> samples) {
  MatchedGroups g;
  for (const auto& c : samples) {
    if (c.category == SampleCategory::cf_selection_failure) {
      g.sf_top1.push_back(c.diagnostics.top1_alias_prob);
      g.sf_wrong_token_prob.push_back(c.diagnostics.greedy_prob);
    } else if (c.category == SampleCategory::correct && c.diagnostics.p_mass >= c.theta) {
      g.corr_top1.push_back(c.diagnostics.top1_alias_prob);
    }
  }
  return g;
}

// One line of the classification output.
inline std::string to_json_line(const ClassifiedSample& c) {
  const auto& d = c.diagnostics;
  constexpr int kDigits = 6;
  detail::JsonObjectWriter w;
  w.str("sample_id", c.sample_id)
      .str("model_id", c.model_id)
      .str("task", to_string(c.task))
      .boolean("correct", c.verdict)
      .str("category", to_string(c.category))
      .number("theta", c.theta, kDigits)
      .integer("t_c", c.t_c)
      .integer("emitted_token", c.emitted)
      .number("p_mass", d.p_mass, kDigits)
      .boolean("p_mass_exact", d.p_mass_exact)
      .number("top1_alias_prob", d.top1_alias_prob, kDigits)
      .number("spread", d.spread, kDigits)
      .number("d2", d.d2, kDigits)
      .number("d3", d.d3, kDigits)
      .number("entropy", d.entropy, kDigits)
      .number("greedy_prob", d.greedy_prob, kDigits)
      .boolean("greedy_in_set", d.greedy_in_set)
      .boolean("greedy_missing", d.greedy_missing)
      .number("h_t2", c.h_t2, kDigits);
  if (c.bigram_on_alias) {
    w.boolean("bigram_on_alias", *c.bigram_on_alias);
  } else {
    w.raw("bigram_on_alias", "null");
  }
  w.boolean("no_next_token", c.no_next_token);
  return w.finish();
}

}  // namespace semmass
