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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "semmass/concept_sets.hpp"
#include "semmass/data_model.hpp"
#include "semmass/error.hpp"
#include "semmass/semantic_mass.hpp"
#include "semmass/stats.hpp"
#include "semmass/taxonomy.hpp"

namespace semmass {

inline constexpr int kDefaultWindow = 5;

struct TokenProbLookup {
  double prob = 0.0;
  bool floored = false;  // y_t absent from top-k; prob is the smallest stored value
};

// P(y_t) from a step. A token outside the stored top-k is assigned the
// smallest stored probability, an upper bound on its true value.
inline TokenProbLookup token_prob(const StepDistribution& step, TokenId y) {
  if (auto p = step.prob_of(y)) return {*p, false};
  return {step.entries.empty() ? 0.0 : step.entries.back().prob, true};
}

enum class Group { correct, halluc };

inline std::string_view to_string(Group g) { return g == Group::correct ? "correct" : "halluc"; }

struct CurvePoint {
  int offset = 0;
  Group group = Group::correct;
  std::string metric;  // entropy | p_mass | token_prob
  double mean = 0.0;
  std::size_t n = 0;
};

struct AlignedCurves {
  int window = kDefaultWindow;
  std::vector<CurvePoint> points;       // sorted by (offset, group, metric)
  std::vector<std::string> skipped;     // sample_ids without a commitment step
  std::vector<std::string> floored;     // sample_ids with some y_t outside top-k

  std::optional<CurvePoint> at(int offset, Group g, std::string_view metric) const {
    for (const auto& p : points)
      if (p.offset == offset && p.group == g && p.metric == metric) return p;
    return std::nullopt;
  }
};

namespace trajectory_detail {

struct StepValues {
  double entropy = 0.0;
  bool has_entropy = false;
  double p_mass = 0.0;
  double token_prob = 0.0;
  bool floored = false;
};

inline StepValues step_values(const SampleRecord& r, const ConceptTokenSet& gold, int t) {
  StepValues v;
  const auto* s = r.step(t);
  if (s->total_mass() > 0.0) {
    v.entropy = step_entropy(*s);
    v.has_entropy = true;
  }
  v.p_mass = gold_p_mass(*s, gold).value;
  if (auto y = r.emitted(t)) {
    const auto tp = token_prob(*s, *y);
    v.token_prob = tp.prob;
    v.floored = tp.floored;
  }
  return v;
}

inline void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) throw DomainError("records and concept sets differ in length");
}

}  // namespace trajectory_detail

// Group means of entropy, gold mass and P(y_t) at offsets −window..+window
// from each record's commitment step.
inline AlignedCurves align_to_commitment(std::span<const SampleRecord> records, std::span<const ConceptTokenSet> csets,
                                         int window = kDefaultWindow) {
  trajectory_detail::check_lengths(records.size(), csets.size());
  if (window < 0) throw DomainError("window must be >= 0");
  struct Acc {
    double sum = 0.0;
    std::size_t n = 0;
  };
  std::map<std::tuple<int, int, std::string>, Acc> acc;
  AlignedCurves out;
  out.window = window;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const auto tc = resolved_tc(r);
    if (!tc || !r.step(*tc)) {
      out.skipped.push_back(r.sample_id);
      continue;
    }
    const int g = judge_correctness(r) ? 0 : 1;
    bool any_floor = false;
    for (int off = -window; off <= window; ++off) {
      const int t = *tc + off;
      if (!r.step(t)) continue;
      const auto v = trajectory_detail::step_values(r, csets[i], t);
      any_floor = any_floor || v.floored;
      if (v.has_entropy) {
        auto& a = acc[{off, g, "entropy"}];
        a.sum += v.entropy;
        ++a.n;
      }
      auto& m = acc[{off, g, "p_mass"}];
      m.sum += v.p_mass;
      ++m.n;
      auto& p = acc[{off, g, "token_prob"}];
      p.sum += v.token_prob;
      ++p.n;
    }
    if (any_floor) out.floored.push_back(r.sample_id);
  }
  for (const auto& [key, a] : acc) {
    const auto& [off, g, metric] = key;
    out.points.push_back({off, g == 0 ? Group::correct : Group::halluc, metric, a.sum / static_cast<double>(a.n), a.n});
  }
  return out;
}

inline AlignedCurves align_to_commitment(const std::vector<SampleRecord>& records,
                                         const std::vector<ConceptTokenSet>& csets, int window = kDefaultWindow) {
  return align_to_commitment(std::span<const SampleRecord>(records), std::span<const ConceptTokenSet>(csets), window);
}

struct Localization {
  std::size_t n = 0;
  std::optional<double> exact_frac;
  std::optional<double> within1_frac;
};

// How often the highest-entropy step (earliest on ties) is the commitment
// step, or within one step of it. Records with fewer than two steps or no
// commitment step are ignored.
inline Localization entropy_localization(std::span<const SampleRecord> records) {
  Localization loc;
  std::size_t exact = 0, near = 0;
  for (const auto& r : records) {
    const auto tc = resolved_tc(r);
    if (!tc || r.steps.size() < 2) continue;
    int best_t = 0;
    double best = -1.0;
    for (const auto& s : r.steps) {
      const double h = s.total_mass() > 0.0 ? step_entropy(s) : 0.0;
      if (h > best) {
        best = h;
        best_t = s.position;
      }
    }
    ++loc.n;
    exact += best_t == *tc;
    near += std::abs(best_t - *tc) <= 1;
  }
  if (loc.n) {
    loc.exact_frac = static_cast<double>(exact) / static_cast<double>(loc.n);
    loc.within1_frac = static_cast<double>(near) / static_cast<double>(loc.n);
  }
  return loc;
}

inline Localization entropy_localization(const std::vector<SampleRecord>& records) {
  return entropy_localization(std::span<const SampleRecord>(records));
}

struct OffsetAuroc {
  int offset = 0;
  std::size_t n_halluc = 0;
  std::size_t n_correct = 0;
  double pmass_auroc = 0.5;       // score −p_mass, hallucination positive
  double token_prob_auroc = 0.5;  // score −P(y_t)
};

// Detection AUROC per offset; offsets where only one class has a step are
// left out.
inline std::vector<OffsetAuroc> per_step_auroc(std::span<const SampleRecord> records,
                                               std::span<const ConceptTokenSet> csets, int window = kDefaultWindow) {
  trajectory_detail::check_lengths(records.size(), csets.size());
  std::vector<OffsetAuroc> out;
  std::vector<bool> verdict(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) verdict[i] = judge_correctness(records[i]);
  for (int off = -window; off <= window; ++off) {
    std::vector<double> pm, tp;
    std::vector<bool> halluc;
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto tc = resolved_tc(records[i]);
      if (!tc || !records[i].step(*tc) || !records[i].step(*tc + off)) continue;
      const auto v = trajectory_detail::step_values(records[i], csets[i], *tc + off);
      pm.push_back(-v.p_mass);
      tp.push_back(-v.token_prob);
      halluc.push_back(!verdict[i]);
    }
    OffsetAuroc row;
    row.offset = off;
    for (bool h : halluc) (h ? row.n_halluc : row.n_correct)++;
    if (row.n_halluc == 0 || row.n_correct == 0) continue;
    row.pmass_auroc = stats::auroc(pm, halluc);
    row.token_prob_auroc = stats::auroc(tp, halluc);
    out.push_back(row);
  }
  return out;
}

inline std::vector<OffsetAuroc> per_step_auroc(const std::vector<SampleRecord>& records,
                                               const std::vector<ConceptTokenSet>& csets, int window = kDefaultWindow) {
  return per_step_auroc(std::span<const SampleRecord>(records), std::span<const ConceptTokenSet>(csets), window);
}

struct AggregationScores {
  double pmass_t1 = 0.0;
  double pmass_mean = 0.0;
  double logp_y1 = 0.0;
  double ln_nll = 0.0;  // mean of ln P(y_t), so <= 0 despite the name
  std::vector<int> floored_steps;
};

// Whole-sequence scores compared against the single commitment-step mass.
// With strict set, a y_t outside the stored top-k is an error; otherwise it
// takes the smallest stored probability and the step is listed.
inline AggregationScores aggregate_scores(const SampleRecord& r, const ConceptTokenSet& gold, bool strict = false) {
  if (r.steps.empty()) throw DomainError("sample " + r.sample_id + ": no steps");
  AggregationScores a;
  double mass_sum = 0.0, log_sum = 0.0;
  for (const auto& s : r.steps) {
    const double m = gold_p_mass(s, gold).value;
    const auto y = r.emitted(s.position);
    if (!y) throw DomainError("sample " + r.sample_id + ": no token at step " + std::to_string(s.position));
    const auto tp = token_prob(s, *y);
    if (tp.floored) {
      if (strict)
        throw DomainError("sample " + r.sample_id + ": y_t not in top-k at step " + std::to_string(s.position));
      a.floored_steps.push_back(s.position);
    }
    const double lp = std::log(tp.prob);
    if (s.position == 1) {
      a.pmass_t1 = m;
      a.logp_y1 = lp;
    }
    mass_sum += m;
    log_sum += lp;
  }
  const double t = static_cast<double>(r.steps.size());
  a.pmass_mean = mass_sum / t;
  a.ln_nll = log_sum / t;
  return a;
}

inline constexpr double kProposeMassThreshold = 0.1;

// Heuristic commitment step for unannotated long-form records: first step
// whose top-1 token starts the concept, else first step with gold mass of
// at least 0.1. Never used in place of an annotation.
inline std::optional<int> propose_tc(const SampleRecord& r, const ConceptTokenSet& gold) {
  for (const auto& s : r.steps)
    if (s.top() && gold.contains(s.top()->token_id)) return s.position;
  for (const auto& s : r.steps)
    if (gold_p_mass(s, gold).value >= kProposeMassThreshold) return s.position;
  return std::nullopt;
}

}  // namespace semmass
