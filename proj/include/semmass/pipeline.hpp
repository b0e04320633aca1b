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

// Batch driver: load and validate corpora, build gold concept sets, run the
// analyses and write the report files. Every table is a pure function of
// the sorted records and the configuration, so reruns are byte-identical.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "semmass/bpe_tokenizer.hpp"
#include "semmass/concept_sets.hpp"
#include "semmass/data_model.hpp"
#include "semmass/decode.hpp"
#include "semmass/detail/format.hpp"
#include "semmass/error.hpp"
#include "semmass/feature_sidecar.hpp"
#include "semmass/probe.hpp"
#include "semmass/semantic_mass.hpp"
#include "semmass/stats.hpp"
#include "semmass/taxonomy.hpp"
#include "semmass/tokenizer.hpp"
#include "semmass/trajectory.hpp"

namespace semmass {

// "byte" (or "test") selects the fixture tokenizer; anything else is read
// as a tokenizer definition file.
inline std::unique_ptr<Tokenizer> make_tokenizer(const std::string& spec) {
  if (spec == "byte" || spec == "test") return std::make_unique<ByteTokenizer>();
  return std::make_unique<BpeTokenizer>(BpeTokenizer::load(spec));
}

struct RunConfig {
  std::vector<std::filesystem::path> corpus;
  std::string tokenizer = "byte";
  double theta = kDefaultTheta;
  std::vector<double> sweep{0.1, 0.2, 0.3, 0.4};
  std::size_t bins = 10;
  int folds = 5;
  std::uint64_t seed = 0;
  int window = kDefaultWindow;
  std::filesystem::path out_dir = ".";
  std::optional<std::filesystem::path> concept_cache;
  std::optional<std::filesystem::path> features_index;
  std::optional<std::filesystem::path> features_payload;
  int layer = 0;
  Phase phase = Phase::pre;

  void validate() const {
    if (!(theta > 0.0 && theta < 1.0)) throw DomainError("theta must lie in (0,1)");
    if (!std::is_sorted(sweep.begin(), sweep.end())) throw DomainError("sweep thresholds must be ascending");
    for (double t : sweep)
      if (!(t > 0.0 && t < 1.0)) throw DomainError("sweep thresholds must lie in (0,1)");
    if (folds < 2) throw DomainError("folds must be >= 2");
    if (bins < 1) throw DomainError("bins must be >= 1");
    if (window < 0) throw DomainError("window must be >= 0");
    if (corpus.empty()) throw DomainError("no corpus given");
    if (features_index.has_value() != features_payload.has_value())
      throw DomainError("feature index and payload must be given together");
  }
};

// A plain TSV table held in memory until written.
struct Table {
  std::string file;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string render() const {
    std::ostringstream os;
    detail::TsvWriter w(os, header);
    for (const auto& r : rows) w.row(r);
    return os.str();
  }
};

struct Dataset {
  std::vector<SampleRecord> records;  // sorted by (model_id, sample_id)
  std::vector<ConceptTokenSet> gold;  // parallel to records
  std::vector<std::vector<std::string>> warnings;  // model, sample_id, code, detail
};

namespace pipeline_detail {

inline std::string fmt(double v) { return detail::fmt6(v); }
inline std::string fmt(const std::optional<double>& v) { return detail::fmt6(v); }
inline std::string num(std::size_t n) { return std::to_string(n); }

template <class T, class Key>
std::map<std::string, std::vector<std::size_t>> group_by_model(const std::vector<T>& xs, Key key) {
  std::map<std::string, std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < xs.size(); ++i) out[key(xs[i])].push_back(i);
  return out;
}

inline std::vector<double> pick(const std::vector<double>& xs, const std::vector<std::size_t>& idx) {
  std::vector<double> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(xs[i]);
  return out;
}

inline std::optional<double> median_or_none(std::vector<double> xs) {
  if (xs.empty()) return std::nullopt;
  return stats::median(std::move(xs));
}

inline std::vector<std::string> effect_row(const std::string& name, const std::vector<double>& g1,
                                           const std::vector<double>& g2) {
  if (g1.size() < 2 || g2.size() < 2) {
    auto mean_or_na = [](const std::vector<double>& g) {
      return g.empty() ? std::string("NA") : fmt(stats::summarize(g).mean);
    };
    return {name, num(g1.size()), num(g2.size()), mean_or_na(g1), mean_or_na(g2), "NA", "NA", "NA", "NA", "NA"};
  }
  const auto e = stats::compare_groups(g1, g2);
  return {name,         num(e.n1),     num(e.n2),         fmt(e.mean1), fmt(e.mean2),
          fmt(e.welch_t), fmt(e.welch_p), fmt(e.cohen_d), fmt(e.mw_u), fmt(e.mw_p)};
}

}  // namespace pipeline_detail

// Loads every corpus, sorts by (model_id, sample_id), rejects duplicates
// and builds each record's gold concept set. Multiple-choice records
// without aliases get an empty set, so their mass is zero.
inline Dataset load_dataset(const RunConfig& cfg) {
  cfg.validate();
  Dataset ds;
  for (const auto& path : cfg.corpus) {
    for (auto& cl : scan_corpus(path)) {
      if (!cl.record) throw StageError("load", "", path.string() + ": line " + std::to_string(cl.line) + ": " + cl.error);
      for (const auto& f : check_record(*cl.record))
        if (!f.is_error()) ds.warnings.push_back({cl.record->model_id, cl.record->sample_id, f.code, f.detail});
      ds.records.push_back(std::move(*cl.record));
    }
  }
  if (ds.records.empty()) throw StageError("load", "", "empty corpus");
  std::sort(ds.records.begin(), ds.records.end(), [](const SampleRecord& a, const SampleRecord& b) {
    return std::tie(a.model_id, a.sample_id) < std::tie(b.model_id, b.sample_id);
  });
  for (std::size_t i = 1; i < ds.records.size(); ++i) {
    const auto& a = ds.records[i - 1];
    const auto& b = ds.records[i];
    if (a.model_id == b.model_id && a.sample_id == b.sample_id)
      throw StageError("load", b.sample_id, "duplicate sample_id for model " + b.model_id);
  }
  std::sort(ds.warnings.begin(), ds.warnings.end());

  std::unique_ptr<Tokenizer> tok;
  try {
    tok = make_tokenizer(cfg.tokenizer);
  } catch (const Error& e) {
    throw StageError("tokenizer", "", e.what());
  }
  ConceptCache cache;
  if (cfg.concept_cache && std::filesystem::exists(*cfg.concept_cache)) cache = ConceptCache::load(*cfg.concept_cache);
  ds.gold.reserve(ds.records.size());
  for (const auto& r : ds.records) {
    try {
      if (r.task == Task::mcqa && r.gold_aliases.empty()) {
        ds.gold.push_back(ConceptTokenSet{gold_concept_id(r), {}, {}});
        continue;
      }
      ds.gold.push_back(cache.get_or_build(r.model_id, gold_concept_id(r), r.gold_aliases, *tok));
    } catch (const Error& e) {
      throw StageError("concepts", r.sample_id, e.what());
    }
  }
  if (cfg.concept_cache) cache.save(*cfg.concept_cache);
  return ds;
}

inline std::vector<ClassifiedSample> classify_all(const Dataset& ds, double theta) {
  std::vector<ClassifiedSample> out;
  out.reserve(ds.records.size());
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const auto& r = ds.records[i];
    if (!resolved_tc(r)) continue;  // unannotated long-form: see tc_proposals
    try {
      out.push_back(classify(r, ds.gold[i], theta));
    } catch (const Error& e) {
      throw StageError("classify", r.sample_id, e.what());
    }
  }
  return out;
}

inline std::string classification_jsonl(const std::vector<ClassifiedSample>& cls) {
  std::string out;
  for (const auto& c : cls) out += to_json_line(c) + '\n';
  return out;
}

inline std::vector<std::string> cf_row(const std::string& model, double theta, const CfSummary& s) {
  using namespace pipeline_detail;
  return {model,          fmt(theta),    num(s.n_halluc), num(s.n_cf),       fmt(s.cf_pct),
          num(s.n_sf),    num(s.n_div()), fmt(s.sf_pct),  fmt(s.type_a_frac)};
}

inline const std::vector<std::string> kCfHeader{"model", "theta", "n_halluc", "n_cf", "cf_pct",
                                                "n_sf",  "n_div", "sf_pct",   "type_a_frac"};

// Per-model commitment-failure table; an "ALL" row follows when the corpus
// holds several models.
inline Table cf_table_tsv(const std::vector<ClassifiedSample>& cls, double theta) {
  Table t{"cf_table.tsv", kCfHeader, {}};
  const auto groups = pipeline_detail::group_by_model(cls, [](const ClassifiedSample& c) { return c.model_id; });
  for (const auto& [model, idx] : groups) {
    std::vector<ClassifiedSample> sub;
    for (auto i : idx) sub.push_back(cls[i]);
    t.rows.push_back(cf_row(model, theta, cf_table(sub)));
  }
  if (groups.size() > 1) t.rows.push_back(cf_row("ALL", theta, cf_table(cls)));
  return t;
}

inline Table threshold_sweep_tsv(const Dataset& ds, const std::vector<double>& thetas) {
  Table t{"threshold_sweep.tsv", kCfHeader, {}};
  const auto groups = pipeline_detail::group_by_model(ds.records, [](const SampleRecord& r) { return r.model_id; });
  for (const auto& [model, idx] : groups) {
    std::vector<SampleRecord> recs;
    std::vector<ConceptTokenSet> sets;
    for (auto i : idx) {
      if (!resolved_tc(ds.records[i])) continue;
      recs.push_back(ds.records[i]);
      sets.push_back(ds.gold[i]);
    }
    for (const auto& row : threshold_sweep(recs, sets, thetas)) t.rows.push_back(cf_row(model, row.theta, row.summary));
  }
  return t;
}

inline const std::vector<std::string> kEffectHeader{"name", "n1", "n2", "mean1", "mean2", "t", "p_welch", "d", "u", "p_mw"};

// Selection failures against matched correct samples on top-1 alias
// probability, and hallucinated against correct samples on entropy at t_c,
// per model and pooled.
inline Table within_population_tsv(const std::vector<ClassifiedSample>& cls) {
  using namespace pipeline_detail;
  Table t{"within_population.tsv", kEffectHeader, {}};
  auto add_for = [&](const std::string& label, const std::vector<ClassifiedSample>& sub) {
    const auto g = matched_groups(sub);
    t.rows.push_back(effect_row("top1_sf_vs_matched_correct:" + label, g.sf_top1, g.corr_top1));
    std::vector<double> h_halluc, h_correct;
    for (const auto& c : sub) (c.verdict ? h_correct : h_halluc).push_back(c.diagnostics.entropy);
    t.rows.push_back(effect_row("entropy_tc_halluc_vs_correct:" + label, h_halluc, h_correct));
  };
  const auto groups = group_by_model(cls, [](const ClassifiedSample& c) { return c.model_id; });
  for (const auto& [model, idx] : groups) {
    std::vector<ClassifiedSample> sub;
    for (auto i : idx) sub.push_back(cls[i]);
    add_for(model, sub);
  }
  if (groups.size() > 1) add_for("ALL", cls);
  return t;
}

// Medians of the within-concept ratios and of Spread over selection failures.
inline Table d2_d3_tsv(const std::vector<ClassifiedSample>& cls) {
  using namespace pipeline_detail;
  Table t{"d2_d3.tsv", {"model", "n_sf", "d2_median", "d3_median", "spread_median", "wrong_token_prob_median"}, {}};
  auto add_for = [&](const std::string& label, const std::vector<std::size_t>& idx) {
    std::vector<double> d2, d3, sp, wt;
    for (auto i : idx) {
      const auto& c = cls[i];
      if (c.category != SampleCategory::cf_selection_failure) continue;
      if (c.diagnostics.d2) d2.push_back(*c.diagnostics.d2);
      if (c.diagnostics.d3) d3.push_back(*c.diagnostics.d3);
      if (c.diagnostics.spread) sp.push_back(*c.diagnostics.spread);
      wt.push_back(c.diagnostics.greedy_prob);
    }
    t.rows.push_back({label, num(wt.size()), fmt(median_or_none(d2)), fmt(median_or_none(d3)),
                      fmt(median_or_none(sp)), fmt(median_or_none(wt))});
  };
  const auto groups = group_by_model(cls, [](const ClassifiedSample& c) { return c.model_id; });
  for (const auto& [model, idx] : groups) add_for(model, idx);
  if (groups.size() > 1) {
    std::vector<std::size_t> all(cls.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    add_for("ALL", all);
  }
  return t;
}

// Entropy at t_c + 1 for Type A against Type B divergences; the last row
// combines the per-model rank-sum p values by Fisher's method.
inline Table ht2_tsv(const std::vector<ClassifiedSample>& cls) {
  using namespace pipeline_detail;
  Table t{"ht2.tsv", {"model", "n_type_a", "n_type_b", "mean_a", "mean_b", "u", "p_mw"}, {}};
  std::vector<double> ps;
  const auto groups = group_by_model(cls, [](const ClassifiedSample& c) { return c.model_id; });
  for (const auto& [model, idx] : groups) {
    std::vector<double> a, b;
    for (auto i : idx) {
      const auto& c = cls[i];
      if (!c.h_t2) continue;
      if (c.category == SampleCategory::cf_divergence_type_a) a.push_back(*c.h_t2);
      if (c.category == SampleCategory::cf_divergence_type_b) b.push_back(*c.h_t2);
    }
    std::vector<std::string> row{model, num(a.size()), num(b.size()),
                                 a.empty() ? "NA" : fmt(stats::summarize(a).mean),
                                 b.empty() ? "NA" : fmt(stats::summarize(b).mean), "NA", "NA"};
    if (!a.empty() && !b.empty()) {
      const auto mw = stats::mann_whitney(a, b);
      row[5] = fmt(mw.u);
      row[6] = fmt(mw.p);
      ps.push_back(mw.p);
    }
    t.rows.push_back(row);
  }
  t.rows.push_back({"fisher_combined", num(ps.size()), "NA", "NA", "NA", "NA",
                    ps.empty() ? "NA" : fmt(stats::fisher_combined(ps))});
  return t;
}

// Records with a commitment step and their gold sets.
struct Aligned {
  std::vector<SampleRecord> records;
  std::vector<ConceptTokenSet> gold;
};

inline Aligned with_commitment(const Dataset& ds) {
  Aligned a;
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    if (!resolved_tc(ds.records[i])) continue;
    a.records.push_back(ds.records[i]);
    a.gold.push_back(ds.gold[i]);
  }
  return a;
}

inline Table trajectory_tsv(const Dataset& ds, int window) {
  const auto a = with_commitment(ds);
  Table t{"trajectory.tsv", {"offset", "group", "metric", "mean", "n"}, {}};
  for (const auto& p : align_to_commitment(a.records, a.gold, window).points)
    t.rows.push_back({std::to_string(p.offset), std::string(to_string(p.group)), p.metric,
                      pipeline_detail::fmt(p.mean), pipeline_detail::num(p.n)});
  return t;
}

inline Table trajectory_auroc_tsv(const Dataset& ds, int window) {
  const auto a = with_commitment(ds);
  Table t{"trajectory_auroc.tsv", {"offset", "n_halluc", "n_correct", "auroc_pmass", "auroc_token_prob"}, {}};
  for (const auto& r : per_step_auroc(a.records, a.gold, window))
    t.rows.push_back({std::to_string(r.offset), pipeline_detail::num(r.n_halluc), pipeline_detail::num(r.n_correct),
                      pipeline_detail::fmt(r.pmass_auroc), pipeline_detail::fmt(r.token_prob_auroc)});
  return t;
}

inline Table localization_tsv(const Dataset& ds) {
  const auto loc = entropy_localization(ds.records);
  return {"localization.tsv",
          {"n", "exact_frac", "within1_frac"},
          {{pipeline_detail::num(loc.n), pipeline_detail::fmt(loc.exact_frac), pipeline_detail::fmt(loc.within1_frac)}}};
}

// Hallucination-detection AUROC of each sequence score (negated, so low
// confidence ranks high), per model.
inline Table aggregation_tsv(const Dataset& ds) {
  using namespace pipeline_detail;
  Table t{"aggregation.tsv", {"model", "score", "n", "n_halluc", "auroc"}, {}};
  const auto groups = group_by_model(ds.records, [](const SampleRecord& r) { return r.model_id; });
  for (const auto& [model, idx] : groups) {
    std::vector<double> t1, mean, y1, nll;
    std::vector<bool> halluc;
    for (auto i : idx) {
      const auto& r = ds.records[i];
      if (r.steps.empty()) continue;
      const auto s = aggregate_scores(r, ds.gold[i]);
      t1.push_back(-s.pmass_t1);
      mean.push_back(-s.pmass_mean);
      y1.push_back(-s.logp_y1);
      nll.push_back(-s.ln_nll);
      halluc.push_back(!judge_correctness(r));
    }
    const std::size_t nh = static_cast<std::size_t>(std::count(halluc.begin(), halluc.end(), true));
    const bool both = nh > 0 && nh < halluc.size();
    auto row = [&](const char* name, const std::vector<double>& xs) {
      t.rows.push_back({model, name, num(xs.size()), num(nh), both ? fmt(stats::auroc(xs, halluc)) : "NA"});
    };
    row("pmass_t1", t1);
    row("pmass_mean", mean);
    row("logp_y1", y1);
    row("ln_nll", nll);
  }
  return t;
}

// Reliability bins and summary metrics with gold mass at t_c as the
// confidence that the answer is correct.
inline std::pair<Table, Table> calibration_tsv(const std::vector<ClassifiedSample>& cls, std::size_t bins) {
  using namespace pipeline_detail;
  Table bt{"calibration_bins.tsv", {"model", "bin_lo", "bin_hi", "n", "mean_confidence", "accuracy"}, {}};
  Table st{"calibration.tsv", {"model", "n", "n_halluc", "auroc_pmass", "ece", "brier"}, {}};
  const auto groups = group_by_model(cls, [](const ClassifiedSample& c) { return c.model_id; });
  for (const auto& [model, idx] : groups) {
    std::vector<double> conf, neg;
    std::vector<bool> correct, halluc;
    for (auto i : idx) {
      const double p = std::clamp(cls[i].diagnostics.p_mass, 0.0, 1.0);
      conf.push_back(p);
      neg.push_back(-p);
      correct.push_back(cls[i].verdict);
      halluc.push_back(!cls[i].verdict);
    }
    for (const auto& b : stats::calibration_bins(conf, correct, bins))
      bt.rows.push_back({model, fmt(b.lo), fmt(b.hi), num(b.n), fmt(b.mean_confidence), fmt(b.accuracy)});
    const std::size_t nh = static_cast<std::size_t>(std::count(halluc.begin(), halluc.end(), true));
    const bool both = nh > 0 && nh < halluc.size();
    st.rows.push_back({model, num(conf.size()), num(nh), both ? fmt(stats::auroc(neg, halluc)) : "NA",
                       fmt(stats::ece(conf, correct, bins)), fmt(stats::brier(conf, correct))});
  }
  return {bt, st};
}

inline Table decode_recovery_tsv(const Dataset& ds, const std::vector<ClassifiedSample>& cls) {
  using namespace pipeline_detail;
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  for (std::size_t i = 0; i < ds.records.size(); ++i) index[{ds.records[i].model_id, ds.records[i].sample_id}] = i;
  Table t{"decode_recovery.tsv", {"model", "n_sf", "n_recovered", "rate"}, {}};
  const auto groups = group_by_model(cls, [](const ClassifiedSample& c) { return c.model_id; });
  for (const auto& [model, idx] : groups) {
    std::vector<std::pair<StepDistribution, ConceptTokenSet>> sf;
    for (auto i : idx) {
      const auto& c = cls[i];
      if (c.category != SampleCategory::cf_selection_failure) continue;
      const auto r = index.at({c.model_id, c.sample_id});
      sf.emplace_back(*ds.records[r].step(c.t_c), ds.gold[r]);
    }
    const auto rc = recovery_count(sf);
    t.rows.push_back({model, num(rc.n), num(rc.recovered), fmt(rc.rate)});
  }
  return t;
}

inline Table tc_proposals_tsv(const Dataset& ds) {
  Table t{"tc_proposals.tsv", {"model", "sample_id", "proposed_t_c", "source"}, {}};
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const auto& r = ds.records[i];
    if (resolved_tc(r)) continue;
    const auto p = propose_tc(r, ds.gold[i]);
    t.rows.push_back({r.model_id, r.sample_id, p ? std::to_string(*p) : "NA", "heuristic"});
  }
  return t;
}

inline Table warnings_tsv(const Dataset& ds) {
  Table t{"warnings.tsv", {"model", "sample_id", "code", "detail"}, ds.warnings};
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const auto& r = ds.records[i];
    if (!resolved_tc(r)) t.rows.push_back({r.model_id, r.sample_id, "no commitment step", "excluded from t_c analyses"});
  }
  return t;
}

// Hidden-state probe per model: hallucination labels against the sidecar
// vector at the configured layer and phase (lowest stored position).
inline Table probe_tsv(const Dataset& ds, const RunConfig& cfg) {
  using namespace pipeline_detail;
  if (!cfg.features_index) throw StageError("probe", "", "no feature sidecar given");
  const auto sidecar = FeatureSidecar::load(*cfg.features_index, *cfg.features_payload);
  Table t{"probe.tsv", {"model", "layer", "phase", "n", "n_halluc", "folds", "seed", "auroc", "note"}, {}};
  const auto groups = group_by_model(ds.records, [](const SampleRecord& r) { return r.model_id; });
  for (const auto& [model, idx] : groups) {
    std::vector<std::span<const float>> rows;
    std::vector<bool> halluc;
    for (auto i : idx) {
      const auto v = sidecar.find_any_position(ds.records[i].sample_id, cfg.layer, cfg.phase);
      if (v.empty()) continue;
      if (!rows.empty() && v.size() != rows.front().size())
        throw StageError("probe", ds.records[i].sample_id, "feature dimension differs within model " + model);
      rows.push_back(v);
      halluc.push_back(!judge_correctness(ds.records[i]));
    }
    std::vector<std::string> row{model, std::to_string(cfg.layer), std::string(to_string(cfg.phase)),
                                 num(rows.size()), num(static_cast<std::size_t>(std::count(halluc.begin(), halluc.end(), true))),
                                 std::to_string(cfg.folds), std::to_string(cfg.seed), "NA", ""};
    if (rows.empty()) {
      row[8] = "no features";
      t.rows.push_back(row);
      continue;
    }
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t c = 0; c < rows[r].size(); ++c)
        x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    try {
      stats::ProbeConfig pc;
      pc.folds = cfg.folds;
      pc.seed = cfg.seed;
      const auto res = stats::probe_cv_auroc(x, halluc, pc);
      row[7] = fmt(res.auroc);
      row[8] = res.all_converged ? "ok" : "not converged";
    } catch (const DomainError& e) {
      row[8] = e.what();
    }
    t.rows.push_back(row);
  }
  return t;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

inline void write_table(const std::filesystem::path& dir, const Table& t) { write_text(dir / t.file, t.render()); }

struct RunSummary {
  std::size_t records = 0;
  std::size_t classified = 0;
  std::vector<std::string> files;
};

// Full report set. The probe table is added when a feature sidecar is given.
inline RunSummary run_pipeline(const RunConfig& cfg) {
  const Dataset ds = load_dataset(cfg);
  const auto cls = classify_all(ds, cfg.theta);
  std::vector<Table> tables;
  auto stage = [&](const char* name, auto&& fn) {
    try {
      fn();
    } catch (const StageError&) {
      throw;
    } catch (const Error& e) {
      throw StageError(name, "", e.what());
    }
  };
  stage("cf_table", [&] { tables.push_back(cf_table_tsv(cls, cfg.theta)); });
  stage("sweep", [&] { tables.push_back(threshold_sweep_tsv(ds, cfg.sweep)); });
  stage("within_population", [&] { tables.push_back(within_population_tsv(cls)); });
  stage("d2_d3", [&] { tables.push_back(d2_d3_tsv(cls)); });
  stage("ht2", [&] { tables.push_back(ht2_tsv(cls)); });
  stage("trajectory", [&] {
    tables.push_back(trajectory_tsv(ds, cfg.window));
    tables.push_back(trajectory_auroc_tsv(ds, cfg.window));
    tables.push_back(localization_tsv(ds));
  });
  stage("aggregation", [&] { tables.push_back(aggregation_tsv(ds)); });
  stage("calibration", [&] {
    auto [bins, summary] = calibration_tsv(cls, cfg.bins);
    tables.push_back(std::move(bins));
    tables.push_back(std::move(summary));
  });
  stage("decode", [&] { tables.push_back(decode_recovery_tsv(ds, cls)); });
  stage("concepts", [&] { tables.push_back(tc_proposals_tsv(ds)); });
  tables.push_back(warnings_tsv(ds));
  if (cfg.features_index) stage("probe", [&] { tables.push_back(probe_tsv(ds, cfg)); });

  std::filesystem::create_directories(cfg.out_dir);
  RunSummary sum;
  sum.records = ds.records.size();
  sum.classified = cls.size();
  write_text(cfg.out_dir / "classification.jsonl", classification_jsonl(cls));
  sum.files.push_back("classification.jsonl");
  for (const auto& t : tables) {
    write_table(cfg.out_dir, t);
    sum.files.push_back(t.file);
  }
  return sum;
}

struct ValidateEntry {
  std::string path;
  std::size_t line = 0;
  bool error = false;
  std::string code;
  std::string detail;
};

struct ValidateReport {
  std::size_t records = 0;
  std::size_t errors = 0;
  std::size_t warnings = 0;
  std::vector<ValidateEntry> entries;
  bool ok() const { return errors == 0; }
};

// Per-line findings for one corpus file; warnings never fail validation.
inline ValidateReport validate_corpus(const std::filesystem::path& path) {
  ValidateReport rep;
  for (auto& cl : scan_corpus(path)) {
    if (!cl.record) {
      ++rep.errors;
      rep.entries.push_back({path.string(), cl.line, true, "error", cl.error});
      continue;
    }
    ++rep.records;
    for (const auto& f : check_record(*cl.record)) {
      if (f.is_error()) continue;  // parse_record already rejected errors
      ++rep.warnings;
      rep.entries.push_back({path.string(), cl.line, false, f.code, f.detail});
    }
  }
  return rep;
}

}  // namespace semmass
