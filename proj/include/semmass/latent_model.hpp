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

// Latent-concept generation model: a prior over K concepts, one emission
// row per concept, and a token set per concept. Used to check the
// P_mass/belief gap bound and the posterior concentration bound exactly.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "semmass/detail/format.hpp"
#include "semmass/detail/random.hpp"
#include "semmass/error.hpp"

namespace semmass::latent {

inline constexpr double kNormTolerance = 1e-12;
inline constexpr double kBoundSlack = 1e-12;

struct LatentConceptModel {
  std::vector<double> prior;                  // K
  std::vector<std::vector<double>> emission;  // K × V
  std::vector<std::set<std::size_t>> sets;    // K token sets

  std::size_t concepts() const { return prior.size(); }
  std::size_t vocab() const { return emission.empty() ? 0 : emission.front().size(); }

  // Mass that concept `from` places on the token set of concept `into`.
  double set_mass(std::size_t from, std::size_t into) const {
    double s = 0.0;
    for (auto v : sets[into]) s += emission[from][v];
    return s;
  }

  double gamma(std::size_t c) const { return set_mass(c, c); }

  double epsilon(std::size_t target) const {
    double e = 0.0;
    for (std::size_t c = 0; c < concepts(); ++c)
      if (c != target) e = std::max(e, set_mass(c, target));
    return e;
  }

  void validate() const {
    const std::size_t k = concepts();
    if (k == 0) throw ValidationError("concept count", "model has no concepts");
    if (emission.size() != k || sets.size() != k) throw ValidationError("shape", "prior, emission and sets differ in K");
    const std::size_t v = vocab();
    auto check_row = [](const std::vector<double>& row, const char* what) {
      double s = 0.0;
      for (double p : row) {
        if (!(p >= 0.0 && p <= 1.0)) throw ValidationError(what, "probability outside [0,1]");
        s += p;
      }
      if (std::abs(s - 1.0) > kNormTolerance) throw ValidationError(what, "row does not sum to 1");
    };
    check_row(prior, "prior");
    for (const auto& row : emission) {
      if (row.size() != v) throw ValidationError("shape", "emission rows differ in length");
      check_row(row, "emission");
    }
    for (const auto& s : sets)
      for (auto t : s)
        if (t >= v) throw ValidationError("sets", "token outside vocabulary");
  }

  std::string to_json() const {
    std::string out = "{\"prior\":[";
    for (std::size_t c = 0; c < prior.size(); ++c) out += (c ? "," : "") + detail::format_sig(prior[c], 17);
    out += "],\"emission\":[";
    for (std::size_t c = 0; c < emission.size(); ++c) {
      out += c ? ",[" : "[";
      for (std::size_t v = 0; v < emission[c].size(); ++v) out += (v ? "," : "") + detail::format_sig(emission[c][v], 17);
      out += "]";
    }
    out += "],\"sets\":[";
    for (std::size_t c = 0; c < sets.size(); ++c) {
      out += c ? ",[" : "[";
      bool first = true;
      for (auto t : sets[c]) {
        out += (first ? "" : ",") + std::to_string(t);
        first = false;
      }
      out += "]";
    }
    return out + "]}";
  }
};

inline std::vector<double> marginal_distribution(const LatentConceptModel& m) {
  m.validate();
  std::vector<double> out(m.vocab(), 0.0);
  for (std::size_t c = 0; c < m.concepts(); ++c)
    for (std::size_t v = 0; v < m.vocab(); ++v) out[v] += m.prior[c] * m.emission[c][v];
  return out;
}

struct BoundCheckResult {
  double measured = 0.0;
  double bound = 0.0;
  double slack = 0.0;  // distance to the bound; negative means violated
  bool holds = true;
  std::string witness;  // model JSON when violated
};

// |P_mass − belief| against (1 − γ) + (K − 1)ε for the target concept.
inline BoundCheckResult check_prop1(const LatentConceptModel& m, std::size_t target) {
  if (target >= m.concepts()) throw DomainError("target concept out of range");
  const auto marg = marginal_distribution(m);
  double mass = 0.0;
  for (auto v : m.sets[target]) mass += marg[v];
  BoundCheckResult r;
  r.measured = std::abs(mass - m.prior[target]);
  r.bound = (1.0 - m.gamma(target)) + static_cast<double>(m.concepts() - 1) * m.epsilon(target);
  r.slack = r.bound - r.measured;
  r.holds = r.slack >= -kBoundSlack;
  if (!r.holds) r.witness = m.to_json();
  return r;
}

inline std::vector<double> posterior_update(const LatentConceptModel& m, std::size_t observed) {
  m.validate();
  if (observed >= m.vocab()) throw DomainError("observed token outside vocabulary");
  std::vector<double> post(m.concepts());
  double z = 0.0;
  for (std::size_t c = 0; c < m.concepts(); ++c) {
    post[c] = m.prior[c] * m.emission[c][observed];
    z += post[c];
  }
  if (!(z > 0.0)) throw DomainError("observed token has zero marginal probability");
  for (auto& p : post) p /= z;
  return post;
}

struct Prop2Result : BoundCheckResult {
  double token_posterior = 0.0;  // P(target | y = observed), for reference
};

// Posterior concentration when the emitted token lies in S_target. The
// bound γπ / (γπ + (K − 1)ε) is checked on P(target | y ∈ S_target); the
// single-token posterior can fall below it when S_target holds many tokens.
inline Prop2Result check_prop2(const LatentConceptModel& m, std::size_t target, std::size_t observed) {
  if (target >= m.concepts()) throw DomainError("target concept out of range");
  if (!m.sets[target].count(observed)) throw DomainError("observed token not in the target set");
  Prop2Result r;
  r.token_posterior = posterior_update(m, observed)[target];
  double evidence = 0.0;
  for (std::size_t c = 0; c < m.concepts(); ++c) evidence += m.prior[c] * m.set_mass(c, target);
  const double signal = m.gamma(target) * m.prior[target];
  r.measured = signal / evidence;
  const double leak = static_cast<double>(m.concepts() - 1) * m.epsilon(target);
  r.bound = leak == 0.0 ? 1.0 : signal / (signal + leak);
  r.slack = r.measured - r.bound;
  r.holds = r.slack >= -kBoundSlack;
  if (!r.holds) r.witness = m.to_json();
  return r;
}

namespace latent_detail {

// Spreads `mass` over `tokens` with random positive weights.
inline void scatter(std::vector<double>& row, const std::vector<std::size_t>& tokens, double mass, detail::Rng& rng) {
  if (tokens.empty() || mass <= 0.0) return;
  std::vector<double> w(tokens.size());
  double z = 0.0;
  for (auto& x : w) z += (x = rng.exponential() + 1e-3);
  for (std::size_t i = 0; i < tokens.size(); ++i) row[tokens[i]] += mass * w[i] / z;
}

}  // namespace latent_detail

// Seeded random model with every γ_c ≥ gamma_min and every ε ≤ eps_max.
// Each concept owns at least one private token; with eps_max > 0 a concept
// may also borrow a token from another concept's set. Per row, the mass
// that can land in other concepts' sets (on shared or foreign tokens) is
// drawn from a budget below eps_max.
inline LatentConceptModel random_model(std::uint64_t seed, std::size_t k, std::size_t v, double gamma_min,
                                       double eps_max) {
  if (k < 1) throw DomainError("random_model: need K >= 1");
  if (v < k) throw DomainError("random_model: need V >= K so every concept owns a token");
  if (!(gamma_min >= 0.0 && gamma_min <= 1.0)) throw DomainError("random_model: gamma_min outside [0,1]");
  if (!(eps_max >= 0.0 && eps_max <= 1.0)) throw DomainError("random_model: eps_max outside [0,1]");
  detail::Rng rng(seed);
  LatentConceptModel m;
  m.sets.assign(k, {});

  std::vector<std::size_t> perm(v);
  for (std::size_t i = 0; i < v; ++i) perm[i] = i;
  rng.shuffle(perm);
  std::vector<std::size_t> owner(v, k);  // k = unowned
  for (std::size_t c = 0; c < k; ++c) {
    m.sets[c].insert(perm[c]);
    owner[perm[c]] = c;
  }
  for (std::size_t i = k; i < v; ++i) {
    const auto c = static_cast<std::size_t>(rng.below(k + 1));
    if (c < k) {
      m.sets[c].insert(perm[i]);
      owner[perm[i]] = c;
    }
  }
  // The first k tokens of perm are private and never borrowed.
  if (eps_max > 0.0 && k > 1) {
    for (std::size_t c = 0; c < k; ++c) {
      if (!rng.bernoulli(0.5)) continue;
      std::vector<std::size_t> candidates;
      for (std::size_t i = k; i < v; ++i)
        if (owner[perm[i]] < k && owner[perm[i]] != c) candidates.push_back(perm[i]);
      if (!candidates.empty()) m.sets[c].insert(candidates[rng.below(candidates.size())]);
    }
  }

  m.emission.assign(k, std::vector<double>(v, 0.0));
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<std::size_t> priv, shared, foreign, free_tokens;
    for (std::size_t t = 0; t < v; ++t) {
      bool mine = m.sets[c].count(t) != 0, theirs = false;
      for (std::size_t d = 0; d < k; ++d)
        if (d != c && m.sets[d].count(t)) theirs = true;
      if (mine) (theirs ? shared : priv).push_back(t);
      else (theirs ? foreign : free_tokens).push_back(t);
    }
    const double budget = eps_max * rng.uniform();
    const double budget_in = shared.empty() ? 0.0 : budget * rng.uniform();
    const double budget_out = foreign.empty() ? 0.0 : budget - budget_in;
    double gamma = rng.uniform(gamma_min, 1.0);
    double outside = 1.0 - gamma;
    if (free_tokens.empty()) outside = std::min(outside, budget_out);
    const double foreign_mass = std::min(outside, budget_out * rng.uniform());
    gamma = 1.0 - outside;
    const double shared_mass = std::min(budget_in, gamma);
    auto& row = m.emission[c];
    latent_detail::scatter(row, priv, gamma - shared_mass, rng);
    latent_detail::scatter(row, shared, shared_mass, rng);
    latent_detail::scatter(row, foreign, free_tokens.empty() ? outside : foreign_mass, rng);
    latent_detail::scatter(row, free_tokens, outside - foreign_mass, rng);
  }

  m.prior.assign(k, 0.0);
  double z = 0.0;
  for (auto& p : m.prior) z += (p = rng.exponential() + 1e-3);
  for (auto& p : m.prior) p /= z;
  return m;
}

struct SimulationReport {
  std::size_t models = 0;
  std::size_t checks = 0;
  std::size_t prop1_violations = 0;
  std::size_t prop2_violations = 0;
  std::size_t token_level_shortfalls = 0;  // token posterior below the set-level bound
  double min_prop1_slack = INFINITY;
  double min_prop2_slack = INFINITY;
  std::vector<std::string> witnesses;
};

struct SimulationConfig {
  std::size_t models = 10000;
  std::uint64_t seed = 0;
  std::size_t max_k = 6;
  std::size_t max_v = 30;
};

// Randomized search for bound violations over every target concept of
// every generated model.
inline SimulationReport simulate(const SimulationConfig& cfg) {
  SimulationReport rep;
  detail::Rng meta(cfg.seed);
  for (std::size_t i = 0; i < cfg.models; ++i) {
    const auto k = static_cast<std::size_t>(meta.between(2, static_cast<std::int64_t>(cfg.max_k)));
    const auto v = static_cast<std::size_t>(meta.between(static_cast<std::int64_t>(k), static_cast<std::int64_t>(cfg.max_v)));
    const double gamma_min = meta.uniform();
    const double eps_max = meta.bernoulli(0.2) ? 0.0 : 0.3 * meta.uniform();
    const auto m = random_model(meta.next(), k, v, gamma_min, eps_max);
    ++rep.models;
    for (std::size_t t = 0; t < k; ++t) {
      ++rep.checks;
      const auto p1 = check_prop1(m, t);
      rep.min_prop1_slack = std::min(rep.min_prop1_slack, p1.slack);
      if (!p1.holds) {
        ++rep.prop1_violations;
        rep.witnesses.push_back(p1.witness);
      }
      const auto marg = marginal_distribution(m);
      bool counted = false;
      for (auto obs : m.sets[t]) {
        if (!(marg[obs] > 0.0)) continue;
        const auto p2 = check_prop2(m, t, obs);
        if (!counted) {
          rep.min_prop2_slack = std::min(rep.min_prop2_slack, p2.slack);
          if (!p2.holds) {
            ++rep.prop2_violations;
            rep.witnesses.push_back(p2.witness);
          }
          counted = true;
        }
        if (p2.token_posterior < p2.bound - kBoundSlack) ++rep.token_level_shortfalls;
      }
    }
  }
  return rep;
}

}  // namespace semmass::latent
