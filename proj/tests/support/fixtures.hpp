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

// Builders shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "semmass/concept_sets.hpp"
#include "semmass/data_model.hpp"
#include "semmass/detail/random.hpp"
#include "semmass/tokenizer.hpp"

namespace semmass::testing {

// Entries are sorted into canonical order (prob descending, id ascending).
inline StepDistribution make_step(int position, std::vector<std::pair<TokenId, double>> entries, int k = 50) {
  StepDistribution s;
  s.position = position;
  s.k = std::max<int>(k, static_cast<int>(entries.size()));
  for (auto [id, p] : entries) s.entries.push_back({id, p});
  std::sort(s.entries.begin(), s.entries.end(), [](const TokenProb& a, const TokenProb& b) {
    return a.prob != b.prob ? a.prob > b.prob : a.token_id < b.token_id;
  });
  return s;
}

inline ConceptTokenSet make_set(std::string id, std::vector<TokenId> first, std::vector<std::vector<TokenId>> seqs = {}) {
  ConceptTokenSet cs;
  cs.concept_id = std::move(id);
  cs.first_token_ids.insert(first.begin(), first.end());
  for (auto& s : seqs) cs.alias_sequences.push_back({"", std::move(s)});
  return cs;
}

inline SampleRecord make_record(std::string sample_id, std::vector<std::string> aliases, std::string text,
                                std::vector<TokenId> ids, std::vector<StepDistribution> steps,
                                std::string model = "m") {
  SampleRecord r;
  r.sample_id = std::move(sample_id);
  r.task = Task::short_qa;
  r.dataset = "fixture";
  r.model_id = std::move(model);
  r.question = "q";
  r.gold_aliases = std::move(aliases);
  r.generated_text = std::move(text);
  r.generated_token_ids = std::move(ids);
  r.steps = std::move(steps);
  r.t_c = 1;
  return r;
}

// Greedy longest-match tokenizer over a fixed vocabulary. Vocabulary entry i
// has ID 1000 + i; bytes not covered by any entry map to their byte value.
class VocabTokenizer final : public Tokenizer {
 public:
  explicit VocabTokenizer(std::vector<std::string> vocab) : vocab_(std::move(vocab)) {}

  TokenId id_of(const std::string& piece) const {
    for (std::size_t i = 0; i < vocab_.size(); ++i)
      if (vocab_[i] == piece) return 1000 + static_cast<TokenId>(i);
    return -1;
  }

  std::vector<TokenId> encode(std::string_view text, bool = false) const override {
    std::vector<TokenId> out;
    std::size_t i = 0;
    while (i < text.size()) {
      std::size_t best_len = 0;
      TokenId best = static_cast<unsigned char>(text[i]);
      for (std::size_t v = 0; v < vocab_.size(); ++v) {
        const auto& w = vocab_[v];
        if (w.size() > best_len && text.substr(i, w.size()) == w) {
          best_len = w.size();
          best = 1000 + static_cast<TokenId>(v);
        }
      }
      out.push_back(best);
      i += best_len ? best_len : 1;
    }
    return out;
  }
  std::size_t vocab_size() const override { return 1000 + vocab_.size(); }
  std::string identity() const override { return "vocab:" + std::to_string(vocab_.size()); }

 private:
  std::vector<std::string> vocab_;
};

// The fragmentation example: the gold concept's mass is split over three
// alias tokens while a competitor's token is the single most probable one.
struct Fragmentation {
  static constexpr TokenId kSaint = 11, kSt = 12, kC = 13, kMos = 14;
  StepDistribution step = make_step(1, {{kSaint, 0.244}, {kSt, 0.115}, {kC, 0.131}, {kMos, 0.312}});
  ConceptTokenSet gold = make_set("q#gold", {kSaint, kSt, kC});
  SampleRecord record() const {
    // y_1 = Mos, y_2 continues the wrong city.
    return make_record("q", {"Saint Petersburg"}, "Moscow", {kMos, 99}, {step, make_step(2, {{99, 0.97}})});
  }
};

// Unique scratch directory under the system temp path.
// Two equal-size groups with exact means m1, m2 and a pooled sample sd that
// puts Cohen's d at `d`. Values alternate ±1 before rescaling, so they stay
// within one pooled sd of each mean.
inline std::pair<std::vector<double>, std::vector<double>> effect_groups(double m1, double m2, double d,
                                                                         std::size_t n) {
  const double pooled = (m1 - m2) / d;
  const double nd = static_cast<double>(n);
  // Sample sd of n alternating ±1 values (n even) is sqrt(n/(n-1)).
  const double unit = std::sqrt(nd / (nd - 1.0));
  std::vector<double> a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = (i % 2 ? 1.0 : -1.0) / unit;
    a[i] = m1 + pooled * z;
    b[i] = m2 + pooled * z;
  }
  return {a, b};
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("semmass_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace semmass::testing
