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
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <ranges>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "semmass/error.hpp"

namespace semmass::stats {

// Any sized range of values convertible to bool, std::vector<bool> included.
template <class R>
concept BoolRange = std::ranges::random_access_range<R> && std::ranges::sized_range<R> &&
                    std::convertible_to<std::ranges::range_reference_t<R>, bool>;

namespace detail {

template <BoolRange R>
std::vector<char> flags(const R& r) {
  std::vector<char> out;
  out.reserve(std::ranges::size(r));
  for (bool b : r) out.push_back(b ? 1 : 0);
  return out;
}

inline void require_same_size(std::size_t a, std::size_t b, const char* op) {
  if (a != b) throw DomainError(std::string(op) + ": input lengths differ");
}

// 1-based midranks of `xs` in the original order, plus Σ(t³−t) over tie groups.
struct Ranks {
  std::vector<double> rank;
  double tie_term = 0.0;
};

inline Ranks midranks(std::span<const double> xs) {
  const std::size_t n = xs.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  Ranks r;
  r.rank.assign(n, 0.0);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && xs[idx[j + 1]] == xs[idx[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r.rank[idx[k]] = mid;
    const double t = static_cast<double>(j - i + 1);
    r.tie_term += t * t * t - t;
    i = j + 1;
  }
  return r;
}

inline double mean(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

inline double variance(std::span<const double> xs, double mu) {
  double s = 0.0;
  for (double x : xs) s += (x - mu) * (x - mu);
  return s / static_cast<double>(xs.size() - 1);
}

}  // namespace detail

struct GroupSummary {
  std::size_t n = 0;
  double mean = 0.0;
  std::optional<double> sd;  // n − 1 denominator; needs n ≥ 2
};

inline GroupSummary summarize(std::span<const double> xs) {
  if (xs.empty()) throw DomainError("summarize: empty group");
  GroupSummary g;
  g.n = xs.size();
  g.mean = detail::mean(xs);
  if (g.n >= 2) g.sd = std::sqrt(detail::variance(xs, g.mean));
  return g;
}

// P(score_pos > score_neg) + ½P(tie), by midranks.
template <BoolRange L>
double auroc(std::span<const double> scores, const L& label_range) {
  const auto labels = detail::flags(label_range);
  detail::require_same_size(scores.size(), labels.size(), "auroc");
  const auto r = detail::midranks(scores);
  double rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i]) {
      rank_sum += r.rank[i];
      ++n_pos;
    }
  }
  const std::size_t n_neg = scores.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw DomainError("auroc: both classes must be present");
  const double np = static_cast<double>(n_pos);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

struct CalibrationBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t n = 0;
  std::optional<double> mean_confidence;
  std::optional<double> accuracy;
};

// Equal-width bins over [0,1]; the last bin includes 1.0.
template <BoolRange L>
std::vector<CalibrationBin> calibration_bins(std::span<const double> conf, const L& outcome_range, std::size_t n_bins) {
  const auto outcome = detail::flags(outcome_range);
  detail::require_same_size(conf.size(), outcome.size(), "calibration_bins");
  if (n_bins == 0) throw DomainError("calibration_bins: need at least one bin");
  std::vector<double> sum_conf(n_bins, 0.0), sum_hit(n_bins, 0.0);
  std::vector<std::size_t> count(n_bins, 0);
  for (std::size_t i = 0; i < conf.size(); ++i) {
    const double c = conf[i];
    if (!(c >= 0.0 && c <= 1.0)) throw DomainError("calibration_bins: confidence outside [0,1]");
    const auto b = std::min(static_cast<std::size_t>(c * static_cast<double>(n_bins)), n_bins - 1);
    sum_conf[b] += c;
    sum_hit[b] += outcome[i] ? 1.0 : 0.0;
    ++count[b];
  }
  std::vector<CalibrationBin> bins(n_bins);
  for (std::size_t b = 0; b < n_bins; ++b) {
    bins[b].lo = static_cast<double>(b) / static_cast<double>(n_bins);
    bins[b].hi = static_cast<double>(b + 1) / static_cast<double>(n_bins);
    bins[b].n = count[b];
    if (count[b]) {
      bins[b].mean_confidence = sum_conf[b] / static_cast<double>(count[b]);
      bins[b].accuracy = sum_hit[b] / static_cast<double>(count[b]);
    }
  }
  return bins;
}

template <BoolRange L>
double ece(std::span<const double> conf, const L& outcome, std::size_t n_bins = 10) {
  if (conf.empty()) throw DomainError("ece: empty input");
  double total = 0.0;
  const double n = static_cast<double>(conf.size());
  for (const auto& b : calibration_bins(conf, outcome, n_bins))
    if (b.n) total += (static_cast<double>(b.n) / n) * std::abs(*b.accuracy - *b.mean_confidence);
  return total;
}

template <BoolRange L>
double brier(std::span<const double> conf, const L& outcome_range) {
  const auto outcome = detail::flags(outcome_range);
  detail::require_same_size(conf.size(), outcome.size(), "brier");
  if (conf.empty()) throw DomainError("brier: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < conf.size(); ++i) {
    const double e = conf[i] - (outcome[i] ? 1.0 : 0.0);
    s += e * e;
  }
  return s / static_cast<double>(conf.size());
}

struct TTest {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
};

// Welch's unequal-variance t test, two-sided.
inline TTest welch_t(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw DomainError("welch_t: need n >= 2 in each group");
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double ma = detail::mean(a), mb = detail::mean(b);
  const double va = detail::variance(a, ma) / na, vb = detail::variance(b, mb) / nb;
  TTest r;
  const double se2 = va + vb;
  if (se2 == 0.0) {
    if (ma == mb) return r;
    r.t = ma > mb ? INFINITY : -INFINITY;
    r.df = na + nb - 2.0;
    r.p = 0.0;
    return r;
  }
  r.t = (ma - mb) / std::sqrt(se2);
  r.df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  const boost::math::students_t dist(r.df);
  r.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
  r.p = std::min(r.p, 1.0);
  return r;
}

// Standardized mean difference with the pooled standard deviation.
inline double cohen_d(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw DomainError("cohen_d: need n >= 2 in each group");
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double ma = detail::mean(a), mb = detail::mean(b);
  const double pooled =
      ((na - 1.0) * detail::variance(a, ma) + (nb - 1.0) * detail::variance(b, mb)) / (na + nb - 2.0);
  if (pooled == 0.0) {
    if (ma == mb) return 0.0;
    throw DomainError("cohen_d: zero pooled standard deviation");
  }
  return (ma - mb) / std::sqrt(pooled);
}

struct MannWhitney {
  double u = 0.0;  // U of the first group
  double p = 1.0;
  bool exact = false;
};

inline constexpr std::size_t kMannWhitneyExactMax = 8;

// Rank-sum test. Pooled sizes up to kMannWhitneyExactMax use the exact
// permutation distribution of the midrank statistic; larger samples use the
// normal approximation with tie and continuity corrections.
inline MannWhitney mann_whitney(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw DomainError("mann_whitney: need n >= 1 in each group");
  const std::size_t na = a.size(), nb = b.size(), n = na + nb;
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const auto r = detail::midranks(pooled);
  const double base = static_cast<double>(na) * static_cast<double>(na + 1) / 2.0;
  double ra = 0.0;
  for (std::size_t i = 0; i < na; ++i) ra += r.rank[i];
  MannWhitney m;
  m.u = ra - base;
  const double mu = static_cast<double>(na) * static_cast<double>(nb) / 2.0;
  const double dev = std::abs(m.u - mu);

  if (n <= kMannWhitneyExactMax) {
    m.exact = true;
    std::size_t hits = 0, total = 0;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
      if (static_cast<std::size_t>(__builtin_popcount(mask)) != na) continue;
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        if (mask & (1u << i)) s += r.rank[i];
      ++total;
      if (std::abs(s - base - mu) >= dev - 1e-9) ++hits;
    }
    m.p = static_cast<double>(hits) / static_cast<double>(total);
    return m;
  }

  const double nd = static_cast<double>(n);
  const double var = static_cast<double>(na) * static_cast<double>(nb) / 12.0 *
                     ((nd + 1.0) - r.tie_term / (nd * (nd - 1.0)));
  if (var <= 0.0) {
    m.p = 1.0;
    return m;
  }
  const double z = std::max(0.0, dev - 0.5) / std::sqrt(var);
  m.p = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return m;
}

inline double pearson_r(std::span<const double> x, std::span<const double> y) {
  detail::require_same_size(x.size(), y.size(), "pearson_r");
  if (x.size() < 2) throw DomainError("pearson_r: need n >= 2");
  const double mx = detail::mean(x), my = detail::mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw DomainError("pearson_r: constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// Fisher's method: survival of χ²(2k) at −2Σ ln p, which is the regularized
// upper incomplete gamma Q(k, −Σ ln p).
inline double fisher_combined(std::span<const double> ps) {
  if (ps.empty()) throw DomainError("fisher_combined: empty input");
  double half_x = 0.0;
  for (double p : ps) {
    if (!(p > 0.0 && p <= 1.0)) throw DomainError("fisher_combined: p outside (0,1]");
    half_x -= std::log(p);
  }
  if (half_x == 0.0) return 1.0;
  return boost::math::gamma_q(static_cast<double>(ps.size()), half_x);
}

struct EffectReport {
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  double mean1 = 0.0;
  double mean2 = 0.0;
  double welch_t = 0.0;
  double welch_p = 1.0;
  double cohen_d = 0.0;
  double mw_u = 0.0;
  double mw_p = 1.0;
};

// Group 1 = selection failures, group 2 = matched correct samples; d < 0
// means the failures sit lower.
inline EffectReport compare_groups(std::span<const double> g1, std::span<const double> g2) {
  if (g1.size() < 2 || g2.size() < 2) throw DomainError("group comparison needs n >= 2 in each group");
  EffectReport e;
  e.n1 = g1.size();
  e.n2 = g2.size();
  e.mean1 = detail::mean(g1);
  e.mean2 = detail::mean(g2);
  const auto t = welch_t(g1, g2);
  e.welch_t = t.t;
  e.welch_p = t.p;
  e.cohen_d = cohen_d(g1, g2);
  const auto mw = mann_whitney(g1, g2);
  e.mw_u = mw.u;
  e.mw_p = mw.p;
  return e;
}

inline EffectReport within_population_compare(std::span<const double> sf_top1, std::span<const double> corr_top1) {
  return compare_groups(sf_top1, corr_top1);
}

template <BoolRange L>
double question_attention_fraction(std::span<const double> weights, const L& mask_range) {
  const auto question_mask = detail::flags(mask_range);
  detail::require_same_size(weights.size(), question_mask.size(), "question_attention_fraction");
  double total = 0.0, on_q = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] < 0.0) throw DomainError("question_attention_fraction: negative weight");
    total += weights[i];
    if (question_mask[i]) on_q += weights[i];
  }
  if (!(total > 0.0)) throw DomainError("question_attention_fraction: zero total weight");
  return on_q / total;
}

inline double median(std::vector<double> xs) {
  if (xs.empty()) throw DomainError("median: empty input");
  std::sort(xs.begin(), xs.end());
  const std::size_t m = xs.size() / 2;
  return xs.size() % 2 ? xs[m] : 0.5 * (xs[m - 1] + xs[m]);
}

}  // namespace semmass::stats
