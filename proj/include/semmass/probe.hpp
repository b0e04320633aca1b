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

// Cross-validated linear probe: L2-regularized logistic regression on
// per-fold standardized features, scored by pooled out-of-fold AUROC.

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "semmass/detail/random.hpp"
#include "semmass/error.hpp"
#include "semmass/stats.hpp"

namespace semmass::stats {

struct ProbeConfig {
  int folds = 5;
  std::uint64_t seed = 0;
  double l2 = 1.0;  // penalty per feature; the total is 0.5·l2·d·‖w‖²
  double tolerance = 1e-8;
  int max_iterations = 10000;
};

struct LogisticFit {
  Eigen::VectorXd weights;
  double intercept = 0.0;
  int iterations = 0;
  bool converged = false;
  double gradient_norm = 0.0;
};

namespace probe_detail {

inline double log1pexp(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace probe_detail

// Minimizes Σ logloss + 0.5·l2·d·‖w‖² (intercept unpenalized) by damped
// Newton steps. Scaling the penalty by d makes duplicated columns share
// weight without changing the fitted scores.
inline LogisticFit fit_logistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const ProbeConfig& cfg) {
  using probe_detail::log1pexp;
  const Eigen::Index n = x.rows(), d = x.cols();
  const double lambda = cfg.l2 * static_cast<double>(d);
  Eigen::MatrixXd xa(n, d + 1);
  xa.leftCols(d) = x;
  xa.col(d).setOnes();
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d + 1);
  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(d + 1, lambda);
  penalty(d) = 0.0;

  auto objective = [&](const Eigen::VectorXd& th) {
    const Eigen::VectorXd z = xa * th;
    double f = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) f += log1pexp(z(i)) - y(i) * z(i);
    return f + 0.5 * (penalty.array() * th.array().square()).sum();
  };

  LogisticFit fit;
  double f = objective(theta);
  for (int it = 0; it < cfg.max_iterations; ++it) {
    const Eigen::VectorXd z = xa * theta;
    Eigen::VectorXd p(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      p(i) = probe_detail::sigmoid(z(i));
      w(i) = p(i) * (1.0 - p(i));
    }
    const Eigen::VectorXd grad = xa.transpose() * (p - y) + penalty.cwiseProduct(theta);
    fit.gradient_norm = grad.norm();
    fit.iterations = it;
    if (fit.gradient_norm <= cfg.tolerance) {
      fit.converged = true;
      break;
    }
    Eigen::MatrixXd hess = xa.transpose() * w.asDiagonal() * xa;
    hess.diagonal() += penalty;
    // A tiny ridge keeps the intercept block solvable when every w_i underflows.
    hess.diagonal().array() += 1e-12;
    const Eigen::VectorXd step = hess.ldlt().solve(-grad);
    const double slope = grad.dot(step);
    double t = 1.0, f_new = objective(theta + step);
    while (f_new > f + 1e-4 * t * slope && t > 1e-12) {
      t *= 0.5;
      f_new = objective(theta + t * step);
    }
    if (!(f_new <= f)) break;  // no further progress possible in double precision
    theta += t * step;
    f = f_new;
    fit.iterations = it + 1;
  }
  fit.weights = theta.head(d);
  fit.intercept = theta(d);
  return fit;
}

// Stratified fold index per row: each class is shuffled with the seed and
// dealt round-robin across the folds.
template <BoolRange L>
std::vector<int> stratified_folds(const L& label_range, int folds, std::uint64_t seed) {
  const auto labels = detail::flags(label_range);
  if (folds < 2) throw DomainError("probe: folds must be >= 2");
  semmass::detail::Rng rng(seed);
  std::vector<int> fold(labels.size(), 0);
  for (char cls : {char{0}, char{1}}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == cls) idx.push_back(i);
    rng.shuffle(idx);
    for (std::size_t j = 0; j < idx.size(); ++j) fold[idx[j]] = static_cast<int>(j % static_cast<std::size_t>(folds));
  }
  return fold;
}

struct ProbeResult {
  double auroc = 0.5;
  std::vector<double> scores;  // out-of-fold decision values, row order
  std::vector<int> fold;
  int max_iterations_used = 0;
  bool all_converged = true;
};

template <BoolRange L>
ProbeResult probe_cv_auroc(const Eigen::MatrixXd& features, const L& label_range, const ProbeConfig& cfg = {}) {
  const auto labels = detail::flags(label_range);
  const Eigen::Index n = features.rows(), d = features.cols();
  if (static_cast<std::size_t>(n) != labels.size()) throw DomainError("probe: feature rows and labels differ");
  if (n < cfg.folds || cfg.folds < 2) throw DomainError("probe: need N >= folds >= 2");

  ProbeResult res;
  res.fold = stratified_folds(labels, cfg.folds, cfg.seed);
  res.scores.assign(static_cast<std::size_t>(n), 0.0);

  for (int f = 0; f < cfg.folds; ++f) {
    std::vector<Eigen::Index> train, test;
    for (Eigen::Index i = 0; i < n; ++i) (res.fold[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
    std::size_t pos = 0;
    for (auto i : train) pos += labels[static_cast<std::size_t>(i)] ? 1 : 0;
    if (pos == 0 || pos == train.size())
      throw DomainError("probe: fold " + std::to_string(f) + " training split lacks a class");
    if (test.empty()) continue;

    const Eigen::MatrixXd xtr = features(train, Eigen::all);
    const Eigen::RowVectorXd mu = xtr.colwise().mean();
    Eigen::RowVectorXd sd = ((xtr.rowwise() - mu).array().square().colwise().sum() /
                             static_cast<double>(train.size())).sqrt();
    Eigen::RowVectorXd inv(d);
    for (Eigen::Index j = 0; j < d; ++j) inv(j) = sd(j) > 0.0 ? 1.0 / sd(j) : 0.0;
    auto standardize = [&](const Eigen::MatrixXd& m) -> Eigen::MatrixXd {
      return (m.rowwise() - mu).array().rowwise() * inv.array();
    };

    Eigen::VectorXd y(static_cast<Eigen::Index>(train.size()));
    for (std::size_t k = 0; k < train.size(); ++k) y(static_cast<Eigen::Index>(k)) = labels[static_cast<std::size_t>(train[k])];
    const auto fit = fit_logistic(standardize(xtr), y, cfg);
    res.max_iterations_used = std::max(res.max_iterations_used, fit.iterations);
    res.all_converged = res.all_converged && fit.converged;

    const Eigen::VectorXd s = (standardize(features(test, Eigen::all)) * fit.weights).array() + fit.intercept;
    for (std::size_t k = 0; k < test.size(); ++k) res.scores[static_cast<std::size_t>(test[k])] = s(static_cast<Eigen::Index>(k));
  }
  res.auroc = auroc(std::span<const double>(res.scores), labels);
  return res;
}

}  // namespace semmass::stats
