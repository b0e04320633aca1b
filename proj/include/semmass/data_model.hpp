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

// Record schema for saved generation episodes, the newline-delimited corpus
// format, and record validation.
//
// A corpus line is one JSON object:
//
//   {"sample_id":"q17","task":"short_qa","dataset":"triviaqa",
//    "model_id":"m","question":"...","gold_aliases":["Paris"],
//    "generated_text":"Paris","generated_token_ids":[48,493],
//    "steps":[{"position":1,"k":50,"topk":[[48,0.61],[604,0.2]],
//              "exact_fields":{"exact_pmass_correct":0.83}}],
//    "t_c":1}
//
// `t_c`, `mcqa_info`, `feature_refs` and per-step `exact_fields` are
// optional. Unknown fields are ignored. Probabilities are written with nine
// significant digits, so serialize(parse(line)) is the canonical form of a
// line and is a fixed point of parse/serialize.

#include <algorithm>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>
#include "semmass/detail/format.hpp"
#include "semmass/error.hpp"

namespace semmass {

using TokenId = std::int64_t;

inline constexpr double kMassTolerance = 1e-6;
inline constexpr int kProbDigits = 9;
inline constexpr std::string_view kExactPmassCorrect = "exact_pmass_correct";

struct TokenProb {
  TokenId token_id = 0;
  double prob = 0.0;
  friend bool operator==(const TokenProb&, const TokenProb&) = default;
};

struct StepDistribution {
  int position = 1;  // 1-based step index t
  int k = 0;         // truncation size used by the dump
  std::vector<TokenProb> entries;  // prob descending, ties by ascending id
  std::map<std::string, double, std::less<>> exact_fields;

  const TokenProb* top() const { return entries.empty() ? nullptr : &entries.front(); }

  std::optional<double> prob_of(TokenId id) const {
    for (const auto& e : entries)
      if (e.token_id == id) return e.prob;
    return std::nullopt;
  }

  std::optional<double> exact(std::string_view key) const {
    if (auto it = exact_fields.find(key); it != exact_fields.end()) return it->second;
    return std::nullopt;
  }

  double total_mass() const {
    double s = 0.0;
    for (const auto& e : entries) s += e.prob;
    return s;
  }

  friend bool operator==(const StepDistribution&, const StepDistribution&) = default;
};

enum class Task { short_qa, mcqa, long_form };
enum class Phase { pre, post };

inline std::string_view to_string(Task t) {
  switch (t) {
    case Task::short_qa: return "short_qa";
    case Task::mcqa: return "mcqa";
    case Task::long_form: return "long_form";
  }
  return "?";
}

inline std::string_view to_string(Phase p) { return p == Phase::pre ? "pre" : "post"; }

inline std::optional<Task> parse_task(std::string_view s) {
  if (s == "short_qa") return Task::short_qa;
  if (s == "mcqa") return Task::mcqa;
  if (s == "long_form") return Task::long_form;
  return std::nullopt;
}

inline std::optional<Phase> parse_phase(std::string_view s) {
  if (s == "pre") return Phase::pre;
  if (s == "post") return Phase::post;
  return std::nullopt;
}

struct McqaInfo {
  int option_count = 0;
  int correct_index = 0;
  int selected_index = 0;
  friend bool operator==(const McqaInfo&, const McqaInfo&) = default;
};

// Points into the hidden-state sidecar.
struct FeatureRef {
  int layer = 0;
  int position = 0;
  Phase phase = Phase::pre;
  friend auto operator<=>(const FeatureRef&, const FeatureRef&) = default;
};

struct SampleRecord {
  std::string sample_id;
  Task task = Task::short_qa;
  std::string dataset;
  std::string model_id;
  std::string question;
  std::vector<std::string> gold_aliases;
  std::string generated_text;
  std::vector<TokenId> generated_token_ids;
  std::vector<StepDistribution> steps;
  std::optional<int> t_c;
  std::optional<McqaInfo> mcqa_info;
  std::vector<FeatureRef> feature_refs;

  // Step t (1-based), or nullptr when the dump stops earlier.
  const StepDistribution* step(int t) const {
    if (t < 1 || static_cast<std::size_t>(t) > steps.size()) return nullptr;
    return &steps[static_cast<std::size_t>(t - 1)];
  }

  // y_t: the generated token at step t, falling back to the step's top-1
  // entry when generated_token_ids is shorter than the dump.
  std::optional<TokenId> emitted(int t) const {
    if (t >= 1 && static_cast<std::size_t>(t) <= generated_token_ids.size())
      return generated_token_ids[static_cast<std::size_t>(t - 1)];
    if (const auto* s = step(t); s && s->top()) return s->top()->token_id;
    return std::nullopt;
  }

  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

// Commitment step used by the analyses: the annotation when present,
// otherwise step 1 for short-form and multiple-choice QA. Long-form records
// without an annotation have no commitment step.
inline std::optional<int> resolved_tc(const SampleRecord& r) {
  if (r.t_c) return r.t_c;
  if (r.task == Task::short_qa || r.task == Task::mcqa) return 1;
  return std::nullopt;
}

struct Finding {
  enum class Severity { warning, error };
  Severity severity = Severity::error;
  std::string code;  // invariant name or warning name
  std::string detail;
  bool is_error() const { return severity == Severity::error; }
};

// Invariant names. They appear verbatim in ValidationError::invariant().
namespace invariant {
inline constexpr std::string_view kProbRange = "prob out of range";
inline constexpr std::string_view kMassExceeds = "prob mass exceeds 1";
inline constexpr std::string_view kUnsorted = "entries not sorted";
inline constexpr std::string_view kDuplicateToken = "duplicate token_id";
inline constexpr std::string_view kTopkExceedsK = "topk exceeds k";
inline constexpr std::string_view kPositions = "positions not consecutive";
inline constexpr std::string_view kMissingAliases = "missing gold_aliases";
inline constexpr std::string_view kMissingMcqa = "missing mcqa_info";
inline constexpr std::string_view kMcqaIndex = "mcqa index out of range";
inline constexpr std::string_view kGreedyMismatch = "top-1 differs from generated token";
}  // namespace invariant

// All findings for one record; errors first in field order, then warnings.
inline std::vector<Finding> check_record(const SampleRecord& r) {
  std::vector<Finding> out;
  auto error = [&](std::string_view code, std::string detail) {
    out.push_back({Finding::Severity::error, std::string(code), std::move(detail)});
  };
  auto warn = [&](std::string_view code, std::string detail) {
    out.push_back({Finding::Severity::warning, std::string(code), std::move(detail)});
  };

  for (std::size_t i = 0; i < r.steps.size(); ++i) {
    const auto& s = r.steps[i];
    const std::string where = "step " + std::to_string(i + 1);
    if (s.position != static_cast<int>(i) + 1)
      error(invariant::kPositions, where + " has position " + std::to_string(s.position));
    bool range_ok = true;
    for (const auto& e : s.entries)
      if (!(e.prob >= 0.0 && e.prob <= 1.0)) range_ok = false;
    if (!range_ok) error(invariant::kProbRange, where);
    if (range_ok && s.total_mass() > 1.0 + kMassTolerance)
      error(invariant::kMassExceeds, where + " sums to " + detail::format_sig(s.total_mass(), 9));
    bool sorted = true;
    for (std::size_t j = 1; j < s.entries.size(); ++j) {
      const auto& a = s.entries[j - 1];
      const auto& b = s.entries[j];
      if (a.prob < b.prob || (a.prob == b.prob && a.token_id > b.token_id)) sorted = false;
    }
    if (!sorted) error(invariant::kUnsorted, where);
    std::vector<TokenId> ids;
    ids.reserve(s.entries.size());
    for (const auto& e : s.entries) ids.push_back(e.token_id);
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) error(invariant::kDuplicateToken, where);
    if (s.entries.size() > static_cast<std::size_t>(std::max(s.k, 0)))
      error(invariant::kTopkExceedsK, where + " has " + std::to_string(s.entries.size()) + " entries, k=" +
                                          std::to_string(s.k));
  }

  if (r.task == Task::mcqa) {
    if (!r.mcqa_info) {
      error(invariant::kMissingMcqa, r.sample_id);
    } else {
      const auto& m = *r.mcqa_info;
      if (m.option_count < 1 || m.correct_index < 0 || m.correct_index >= m.option_count ||
          m.selected_index < 0 || m.selected_index >= m.option_count)
        error(invariant::kMcqaIndex, r.sample_id);
    }
  } else {
    const bool any = std::any_of(r.gold_aliases.begin(), r.gold_aliases.end(),
                                 [](const std::string& a) { return !a.empty(); });
    if (!any) error(invariant::kMissingAliases, r.sample_id);
  }

  const std::size_t n = std::min(r.steps.size(), r.generated_token_ids.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto* top = r.steps[i].top();
    if (top && top->token_id != r.generated_token_ids[i])
      warn(invariant::kGreedyMismatch, "step " + std::to_string(i + 1));
  }
  return out;
}

// Throws ValidationError for the first violated invariant.
inline void validate_record(const SampleRecord& r) {
  for (const auto& f : check_record(r))
    if (f.is_error()) throw ValidationError(f.code, f.detail);
}

namespace detail {

using nlohmann::json;

inline const json& require(const json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(path + key, "missing field");
  return *it;
}

inline std::string as_string(const json& v, const std::string& field) {
  if (!v.is_string()) throw ParseError(field, "expected string");
  return v.get<std::string>();
}

inline long long as_integer(const json& v, const std::string& field) {
  if (!v.is_number_integer()) throw ParseError(field, "expected integer");
  return v.get<long long>();
}

inline int as_int(const json& v, const std::string& field) {
  const long long x = as_integer(v, field);
  if (x < INT32_MIN || x > INT32_MAX) throw ParseError(field, "integer out of range");
  return static_cast<int>(x);
}

inline double as_number(const json& v, const std::string& field) {
  if (!v.is_number()) throw ParseError(field, "expected number");
  return v.get<double>();
}

inline TokenId as_token(const json& v, const std::string& field) {
  const long long x = as_integer(v, field);
  if (x < 0) throw ParseError(field, "token id must be non-negative");
  return x;
}

inline StepDistribution parse_step(const json& j, const std::string& path) {
  if (!j.is_object()) throw ParseError(path, "expected object");
  StepDistribution s;
  s.position = as_int(require(j, "position", path + "."), path + ".position");
  s.k = as_int(require(j, "k", path + "."), path + ".k");
  if (s.k < 0) throw ParseError(path + ".k", "must be non-negative");
  const auto& topk = require(j, "topk", path + ".");
  if (!topk.is_array()) throw ParseError(path + ".topk", "expected array");
  s.entries.reserve(topk.size());
  for (std::size_t i = 0; i < topk.size(); ++i) {
    const std::string f = path + ".topk[" + std::to_string(i) + "]";
    const auto& pair = topk[i];
    if (!pair.is_array() || pair.size() != 2) throw ParseError(f, "expected [token_id, prob]");
    s.entries.push_back({as_token(pair[0], f + "[0]"), as_number(pair[1], f + "[1]")});
  }
  if (auto it = j.find("exact_fields"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) throw ParseError(path + ".exact_fields", "expected object");
    for (const auto& [key, val] : it->items())
      s.exact_fields[key] = as_number(val, path + ".exact_fields." + key);
  }
  return s;
}

}  // namespace detail

// Parses and validates one corpus line. Short-form QA records without a
// `t_c` annotation get t_c = 1.
inline SampleRecord parse_record(std::string_view line) {
  using detail::json;
  json j;
  try {
    j = json::parse(line.begin(), line.end());
  } catch (const json::parse_error& e) {
    throw ParseError("", std::string("malformed record: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("", "record must be a JSON object");

  SampleRecord r;
  r.sample_id = detail::as_string(detail::require(j, "sample_id", ""), "sample_id");
  const std::string task = detail::as_string(detail::require(j, "task", ""), "task");
  const auto t = parse_task(task);
  if (!t) throw ParseError("task", "unknown task '" + task + "'");
  r.task = *t;
  r.dataset = detail::as_string(detail::require(j, "dataset", ""), "dataset");
  r.model_id = detail::as_string(detail::require(j, "model_id", ""), "model_id");
  r.question = detail::as_string(detail::require(j, "question", ""), "question");

  const auto& aliases = detail::require(j, "gold_aliases", "");
  if (!aliases.is_array()) throw ParseError("gold_aliases", "expected array");
  for (std::size_t i = 0; i < aliases.size(); ++i)
    r.gold_aliases.push_back(detail::as_string(aliases[i], "gold_aliases[" + std::to_string(i) + "]"));

  r.generated_text = detail::as_string(detail::require(j, "generated_text", ""), "generated_text");
  const auto& ids = detail::require(j, "generated_token_ids", "");
  if (!ids.is_array()) throw ParseError("generated_token_ids", "expected array");
  for (std::size_t i = 0; i < ids.size(); ++i)
    r.generated_token_ids.push_back(detail::as_token(ids[i], "generated_token_ids[" + std::to_string(i) + "]"));

  const auto& steps = detail::require(j, "steps", "");
  if (!steps.is_array()) throw ParseError("steps", "expected array");
  for (std::size_t i = 0; i < steps.size(); ++i)
    r.steps.push_back(detail::parse_step(steps[i], "steps[" + std::to_string(i) + "]"));

  if (auto it = j.find("t_c"); it != j.end() && !it->is_null()) {
    r.t_c = detail::as_int(*it, "t_c");
    if (*r.t_c < 1) throw ParseError("t_c", "must be a 1-based step index");
  }
  if (auto it = j.find("mcqa_info"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) throw ParseError("mcqa_info", "expected object");
    McqaInfo m;
    m.option_count = detail::as_int(detail::require(*it, "option_count", "mcqa_info."), "mcqa_info.option_count");
    m.correct_index = detail::as_int(detail::require(*it, "correct_index", "mcqa_info."), "mcqa_info.correct_index");
    m.selected_index = detail::as_int(detail::require(*it, "selected_index", "mcqa_info."), "mcqa_info.selected_index");
    r.mcqa_info = m;
  }
  if (auto it = j.find("feature_refs"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) throw ParseError("feature_refs", "expected array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string f = "feature_refs[" + std::to_string(i) + "]";
      const auto& o = (*it)[i];
      if (!o.is_object()) throw ParseError(f, "expected object");
      FeatureRef ref;
      ref.layer = detail::as_int(detail::require(o, "layer", f + "."), f + ".layer");
      ref.position = detail::as_int(detail::require(o, "position", f + "."), f + ".position");
      const std::string ph = detail::as_string(detail::require(o, "phase", f + "."), f + ".phase");
      const auto phase = parse_phase(ph);
      if (!phase) throw ParseError(f + ".phase", "expected pre or post");
      ref.phase = *phase;
      r.feature_refs.push_back(ref);
    }
  }

  if (r.task == Task::short_qa && !r.t_c) r.t_c = 1;
  validate_record(r);
  return r;
}

inline std::string format_prob(double p) { return detail::format_sig(p, kProbDigits); }

// Canonical single-line serialization (fixed key order, no whitespace).
inline std::string serialize_record(const SampleRecord& r) {
  detail::JsonObjectWriter w;
  w.str("sample_id", r.sample_id).str("task", to_string(r.task)).str("dataset", r.dataset);
  w.str("model_id", r.model_id).str("question", r.question);
  {
    std::string a = "[";
    for (std::size_t i = 0; i < r.gold_aliases.size(); ++i) {
      if (i) a += ',';
      a += detail::json_quote(r.gold_aliases[i]);
    }
    w.raw("gold_aliases", a + "]");
  }
  w.str("generated_text", r.generated_text);
  {
    std::string a = "[";
    for (std::size_t i = 0; i < r.generated_token_ids.size(); ++i) {
      if (i) a += ',';
      a += std::to_string(r.generated_token_ids[i]);
    }
    w.raw("generated_token_ids", a + "]");
  }
  {
    std::string a = "[";
    for (std::size_t i = 0; i < r.steps.size(); ++i) {
      const auto& s = r.steps[i];
      if (i) a += ',';
      detail::JsonObjectWriter sw;
      sw.integer("position", s.position).integer("k", s.k);
      std::string t = "[";
      for (std::size_t j = 0; j < s.entries.size(); ++j) {
        if (j) t += ',';
        t += '[' + std::to_string(s.entries[j].token_id) + ',' + format_prob(s.entries[j].prob) + ']';
      }
      sw.raw("topk", t + "]");
      if (!s.exact_fields.empty()) {
        detail::JsonObjectWriter ew;
        for (const auto& [key, val] : s.exact_fields) ew.raw(key, format_prob(val));
        sw.raw("exact_fields", ew.finish());
      }
      a += sw.finish();
    }
    w.raw("steps", a + "]");
  }
  if (r.t_c) w.integer("t_c", *r.t_c);
  if (r.mcqa_info) {
    detail::JsonObjectWriter mw;
    mw.integer("option_count", r.mcqa_info->option_count)
        .integer("correct_index", r.mcqa_info->correct_index)
        .integer("selected_index", r.mcqa_info->selected_index);
    w.raw("mcqa_info", mw.finish());
  }
  if (!r.feature_refs.empty()) {
    std::string a = "[";
    for (std::size_t i = 0; i < r.feature_refs.size(); ++i) {
      if (i) a += ',';
      detail::JsonObjectWriter fw;
      fw.integer("layer", r.feature_refs[i].layer)
          .integer("position", r.feature_refs[i].position)
          .str("phase", to_string(r.feature_refs[i].phase));
      a += fw.finish();
    }
    w.raw("feature_refs", a + "]");
  }
  return w.finish();
}

// Canonical form of a corpus line: serialize(parse(line)).
inline std::string canonicalize(std::string_view line) { return serialize_record(parse_record(line)); }

namespace detail {

inline bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return c == ' ' || c == '\t' || c == '\r'; });
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

}  // namespace detail

// One parsed line of a corpus, or the error it produced.
struct CorpusLine {
  std::size_t line = 0;  // 1-based physical line number
  std::optional<SampleRecord> record;
  std::string error;  // empty when record is set
};

// Reads every non-blank line, keeping per-line failures instead of throwing.
inline std::vector<CorpusLine> scan_corpus(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  std::vector<CorpusLine> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::blank(line)) continue;
    CorpusLine cl;
    cl.line = lineno;
    try {
      cl.record = parse_record(line);
    } catch (const Error& e) {
      cl.error = e.what();
    }
    out.push_back(std::move(cl));
  }
  return out;
}

// Records in file order. Throws CorpusError naming the first bad line.
inline std::vector<SampleRecord> load_corpus(const std::filesystem::path& path) {
  std::vector<SampleRecord> out;
  for (auto& cl : scan_corpus(path)) {
    if (!cl.record) throw CorpusError(cl.line, cl.error);
    out.push_back(std::move(*cl.record));
  }
  return out;
}

inline void write_corpus(const std::filesystem::path& path, const std::vector<SampleRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& r : records) out << serialize_record(r) << '\n';
}

}  // namespace semmass
