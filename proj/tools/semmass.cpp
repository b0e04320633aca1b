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


// Command-line front end. Exit codes: 0 success, 1 data error, 2 usage error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "semmass/semmass.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitData = 1;
constexpr int kExitUsage = 2;

// Thrown for bad flag combinations detected after parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path default_out_dir() {
  if (const char* env = std::getenv("SEMMASS_OUT"); env && *env) return env;
  return ".";
}

struct Options {
  std::vector<std::string> corpus;
  std::string tokenizer = "byte";
  double theta = semmass::kDefaultTheta;
  std::vector<double> sweep{0.1, 0.2, 0.3, 0.4};
  std::size_t bins = 10;
  int window = semmass::kDefaultWindow;
  int folds = 5;
  std::uint64_t seed = 0;
  std::string out;
  std::string cache;
  std::string features;
  std::string payload;
  int layer = 0;
  std::string phase = "pre";
  std::size_t models = 10000;
  std::size_t max_k = 6;
  std::size_t max_v = 30;
};

semmass::RunConfig to_config(const Options& o) {
  semmass::RunConfig c;
  for (const auto& p : o.corpus) c.corpus.emplace_back(p);
  c.tokenizer = o.tokenizer;
  c.theta = o.theta;
  c.sweep = o.sweep;
  c.bins = o.bins;
  c.window = o.window;
  c.folds = o.folds;
  c.seed = o.seed;
  c.out_dir = o.out.empty() ? default_out_dir() : fs::path(o.out);
  if (!o.cache.empty()) c.concept_cache = o.cache;
  if (!o.features.empty()) c.features_index = o.features;
  if (!o.payload.empty()) c.features_payload = o.payload;
  c.layer = o.layer;
  const auto ph = semmass::parse_phase(o.phase);
  if (!ph) throw UsageError("--phase must be pre or post");
  c.phase = *ph;
  try {
    c.validate();
  } catch (const semmass::DomainError& e) {
    throw UsageError(e.what());
  }
  return c;
}

void write_tables(const fs::path& dir, const std::vector<semmass::Table>& tables) {
  fs::create_directories(dir);
  for (const auto& t : tables) {
    semmass::write_table(dir, t);
    std::cout << "wrote " << (dir / t.file).string() << '\n';
  }
}

int cmd_validate(const Options& o) {
  std::size_t errors = 0, warnings = 0, records = 0;
  for (const auto& p : o.corpus) {
    const auto rep = semmass::validate_corpus(p);
    for (const auto& e : rep.entries)
      std::cout << e.path << ':' << e.line << ": " << (e.error ? "error" : "warning") << ": "
                << (e.error ? e.detail : e.code + " (" + e.detail + ")") << '\n';
    errors += rep.errors;
    warnings += rep.warnings;
    records += rep.records;
  }
  std::cout << records << " records, " << errors << " errors, " << warnings << " warnings\n";
  return errors == 0 ? 0 : kExitData;
}

int cmd_concepts(const Options& o) {
  const auto cfg = to_config(o);
  const auto ds = semmass::load_dataset(cfg);
  const auto tok = semmass::make_tokenizer(cfg.tokenizer);
  std::string text;
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const auto h = semmass::ConceptCache::alias_hash(tok->identity(), ds.records[i].gold_aliases);
    text += semmass::ConceptCache::to_line(ds.records[i].model_id, h, ds.gold[i]) + '\n';
  }
  fs::create_directories(cfg.out_dir);
  semmass::write_text(cfg.out_dir / "concepts.jsonl", text);
  std::cout << "wrote " << (cfg.out_dir / "concepts.jsonl").string() << '\n';
  return 0;
}

int cmd_classify(const Options& o) {
  const auto cfg = to_config(o);
  const auto ds = semmass::load_dataset(cfg);
  const auto cls = semmass::classify_all(ds, cfg.theta);
  fs::create_directories(cfg.out_dir);
  semmass::write_text(cfg.out_dir / "classification.jsonl", semmass::classification_jsonl(cls));
  std::cout << "wrote " << (cfg.out_dir / "classification.jsonl").string() << '\n';
  write_tables(cfg.out_dir, {semmass::cf_table_tsv(cls, cfg.theta)});
  return 0;
}

int cmd_report(const Options& o) {
  const auto cfg = to_config(o);
  const auto sum = semmass::run_pipeline(cfg);
  for (const auto& f : sum.files) std::cout << "wrote " << (cfg.out_dir / f).string() << '\n';
  std::cout << sum.records << " records, " << sum.classified << " classified\n";
  return 0;
}

int cmd_sweep(const Options& o) {
  const auto cfg = to_config(o);
  write_tables(cfg.out_dir, {semmass::threshold_sweep_tsv(semmass::load_dataset(cfg), cfg.sweep)});
  return 0;
}

int cmd_trajectory(const Options& o) {
  const auto cfg = to_config(o);
  const auto ds = semmass::load_dataset(cfg);
  write_tables(cfg.out_dir, {semmass::trajectory_tsv(ds, cfg.window), semmass::trajectory_auroc_tsv(ds, cfg.window),
                             semmass::localization_tsv(ds), semmass::aggregation_tsv(ds)});
  return 0;
}

int cmd_decode(const Options& o) {
  const auto cfg = to_config(o);
  const auto ds = semmass::load_dataset(cfg);
  write_tables(cfg.out_dir, {semmass::decode_recovery_tsv(ds, semmass::classify_all(ds, cfg.theta))});
  return 0;
}

int cmd_probe(const Options& o) {
  if (o.features.empty() || o.payload.empty()) throw UsageError("probe needs --features and --payload");
  const auto cfg = to_config(o);
  write_tables(cfg.out_dir, {semmass::probe_tsv(semmass::load_dataset(cfg), cfg)});
  return 0;
}

int cmd_simulate(const Options& o) {
  if (o.max_k < 2 || o.max_v < o.max_k) throw UsageError("need 2 <= --max-k <= --max-v");
  semmass::latent::SimulationConfig sc;
  sc.models = o.models;
  sc.seed = o.seed;
  sc.max_k = o.max_k;
  sc.max_v = o.max_v;
  const auto rep = semmass::latent::simulate(sc);
  const fs::path dir = o.out.empty() ? default_out_dir() : fs::path(o.out);
  using semmass::detail::fmt6;
  semmass::Table t{"simulation.tsv",
                   {"models", "checks", "prop1_violations", "prop2_violations", "token_level_shortfalls",
                    "min_prop1_slack", "min_prop2_slack"},
                   {{std::to_string(rep.models), std::to_string(rep.checks), std::to_string(rep.prop1_violations),
                     std::to_string(rep.prop2_violations), std::to_string(rep.token_level_shortfalls),
                     fmt6(rep.min_prop1_slack), fmt6(rep.min_prop2_slack)}}};
  write_tables(dir, {t});
  if (!rep.witnesses.empty()) {
    std::string text;
    for (const auto& w : rep.witnesses) text += w + '\n';
    semmass::write_text(dir / "witnesses.jsonl", text);
    std::cout << "wrote " << (dir / "witnesses.jsonl").string() << '\n';
  }
  std::cout << rep.models << " models, " << rep.prop1_violations << " gap-bound violations, " << rep.prop2_violations
            << " posterior-bound violations\n";
  return rep.prop1_violations + rep.prop2_violations == 0 ? 0 : kExitData;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semantic probability mass analysis of saved token distributions"};
  app.require_subcommand(1);
  Options o;

  auto add_corpus = [&](CLI::App* sub) {
    sub->add_option("corpus", o.corpus, "corpus files (JSON lines)")->required()->check(CLI::ExistingFile);
  };
  auto add_common = [&](CLI::App* sub) {
    add_corpus(sub);
    sub->add_option("--tokenizer", o.tokenizer, "'byte' or a tokenizer definition file")->capture_default_str();
    sub->add_option("--theta", o.theta, "commitment-failure mass threshold")->capture_default_str();
    sub->add_option("--out", o.out, "output directory (default: $SEMMASS_OUT or .)");
    sub->add_option("--cache", o.cache, "concept-set cache file");
  };

  auto* validate = app.add_subcommand("validate", "check corpus files and list findings");
  add_corpus(validate);

  auto* concepts = app.add_subcommand("concepts", "build gold concept token sets");
  add_common(concepts);

  auto* classify = app.add_subcommand("classify", "label samples and write the CF table");
  add_common(classify);

  auto* report = app.add_subcommand("report", "run every analysis and write all reports");
  add_common(report);
  report->add_option("--sweep", o.sweep, "threshold sweep values")->delimiter(',');
  report->add_option("--bins", o.bins, "calibration bins")->capture_default_str();
  report->add_option("--window", o.window, "trajectory half-width")->capture_default_str();
  report->add_option("--folds", o.folds, "probe folds")->capture_default_str();
  report->add_option("--seed", o.seed, "probe seed")->capture_default_str();
  report->add_option("--features", o.features, "feature sidecar index");
  report->add_option("--payload", o.payload, "feature sidecar payload");
  report->add_option("--layer", o.layer, "probe layer")->capture_default_str();
  report->add_option("--phase", o.phase, "probe phase: pre or post")->capture_default_str();

  auto* sweep = app.add_subcommand("sweep", "CF rates across thresholds");
  add_common(sweep);
  sweep->add_option("--sweep", o.sweep, "threshold values")->delimiter(',');

  auto* trajectory = app.add_subcommand("trajectory", "commitment-aligned curves and sequence scores");
  add_common(trajectory);
  trajectory->add_option("--window", o.window, "half-width in steps")->capture_default_str();

  auto* decode = app.add_subcommand("decode", "cluster-argmax recovery of selection failures");
  add_common(decode);

  auto* probe = app.add_subcommand("probe", "cross-validated hidden-state probe");
  add_common(probe);
  probe->add_option("--features", o.features, "feature sidecar index")->required();
  probe->add_option("--payload", o.payload, "feature sidecar payload")->required();
  probe->add_option("--layer", o.layer, "layer")->capture_default_str();
  probe->add_option("--phase", o.phase, "pre or post")->capture_default_str();
  probe->add_option("--folds", o.folds, "folds")->capture_default_str();
  probe->add_option("--seed", o.seed, "fold seed")->capture_default_str();

  auto* simulate = app.add_subcommand("simulate", "search random latent-concept models for bound violations");
  simulate->add_option("--models", o.models, "number of models")->capture_default_str();
  simulate->add_option("--seed", o.seed, "seed")->capture_default_str();
  simulate->add_option("--max-k", o.max_k, "largest concept count")->capture_default_str();
  simulate->add_option("--max-v", o.max_v, "largest vocabulary")->capture_default_str();
  simulate->add_option("--out", o.out, "output directory (default: $SEMMASS_OUT or .)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*validate) return cmd_validate(o);
    if (*concepts) return cmd_concepts(o);
    if (*classify) return cmd_classify(o);
    if (*report) return cmd_report(o);
    if (*sweep) return cmd_sweep(o);
    if (*trajectory) return cmd_trajectory(o);
    if (*decode) return cmd_decode(o);
    if (*probe) return cmd_probe(o);
    if (*simulate) return cmd_simulate(o);
  } catch (const UsageError& e) {
    std::cerr << "semmass: usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const semmass::Error& e) {
    std::cerr << "semmass: error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "semmass: error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
