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

// Concept token sets: the first-token IDs of every lexical variant of a
// concept's aliases, plus the full token sequence of each variant for
// alias-prefix checks on emitted bigrams.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <unicode/locid.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <nlohmann/json.hpp>
#include "semmass/data_model.hpp"
#include "semmass/detail/format.hpp"
#include "semmass/error.hpp"
#include "semmass/tokenizer.hpp"

namespace semmass {

struct AliasSequence {
  std::string variant;
  std::vector<TokenId> token_ids;
  friend bool operator==(const AliasSequence&, const AliasSequence&) = default;
};

struct ConceptTokenSet {
  std::string concept_id;
  std::set<TokenId> first_token_ids;
  std::vector<AliasSequence> alias_sequences;

  bool contains(TokenId id) const { return first_token_ids.count(id) != 0; }
  friend bool operator==(const ConceptTokenSet&, const ConceptTokenSet&) = default;
};

namespace concept_detail {

inline bool all_whitespace(std::string_view s) {
  const auto* p = reinterpret_cast<const uint8_t*>(s.data());
  const int32_t n = static_cast<int32_t>(s.size());
  int32_t i = 0;
  while (i < n) {
    UChar32 c;
    U8_NEXT(p, i, n, c);
    if (c < 0 || !u_isUWhiteSpace(c)) return false;
  }
  return true;
}

inline std::string lowercase(std::string_view s) {
  icu::UnicodeString u = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  u.toLower(icu::Locale::getRoot());
  std::string out;
  u.toUTF8String(out);
  return out;
}

// Simple uppercase of the first scalar; the remainder is left untouched.
inline std::string capitalize_first(std::string_view s) {
  if (s.empty()) return {};
  const auto* p = reinterpret_cast<const uint8_t*>(s.data());
  const int32_t n = static_cast<int32_t>(s.size());
  int32_t i = 0;
  UChar32 c;
  U8_NEXT(p, i, n, c);
  if (c < 0) return std::string(s);
  const UChar32 up = u_toupper(c);
  char buf[4];
  int32_t len = 0;
  U8_APPEND_UNSAFE(reinterpret_cast<uint8_t*>(buf), len, up);
  std::string out(buf, static_cast<std::size_t>(len));
  out.append(s.substr(static_cast<std::size_t>(i)));
  return out;
}

}  // namespace concept_detail

// The six surface variants of an alias: original, lowercase, capitalized,
// then the same three with one leading space. Duplicates are kept; they
// collapse at the token level. Whitespace-only aliases yield no variants.
inline std::vector<std::string> lexical_variants(std::string_view alias) {
  if (concept_detail::all_whitespace(alias)) return {};
  std::string original(alias);
  std::string lower = concept_detail::lowercase(alias);
  std::string cap = concept_detail::capitalize_first(alias);
  return {original, lower, cap, " " + original, " " + lower, " " + cap};
}

// Builds S_c for one concept. Every variant is encoded without special
// tokens; its first ID joins the set and its full sequence is kept.
inline ConceptTokenSet build_concept_set(std::string concept_id, std::span<const std::string> aliases,
                                         const Tokenizer& tok) {
  ConceptTokenSet cs;
  cs.concept_id = std::move(concept_id);
  for (const auto& alias : aliases) {
    for (auto& v : lexical_variants(alias)) {
      auto ids = tok.encode(v, false);
      if (!ids.empty()) cs.first_token_ids.insert(ids.front());
      cs.alias_sequences.push_back({std::move(v), std::move(ids)});
    }
  }
  if (cs.first_token_ids.empty()) throw DomainError("no usable aliases for concept " + cs.concept_id);
  return cs;
}

inline ConceptTokenSet build_concept_set(std::string concept_id, const std::vector<std::string>& aliases,
                                         const Tokenizer& tok) {
  return build_concept_set(std::move(concept_id), std::span<const std::string>(aliases), tok);
}

// True iff some alias variant of at least two tokens starts with `bigram`.
inline bool is_alias_prefix(std::pair<TokenId, TokenId> bigram, const ConceptTokenSet& cs) {
  return std::any_of(cs.alias_sequences.begin(), cs.alias_sequences.end(), [&](const AliasSequence& a) {
    return a.token_ids.size() >= 2 && a.token_ids[0] == bigram.first && a.token_ids[1] == bigram.second;
  });
}

// Concept id used for a record's gold concept.
inline std::string gold_concept_id(const SampleRecord& r) { return r.sample_id + "#gold"; }

// Cache of built concept sets keyed by (model_id, tokenizer, alias list),
// persisted as JSON lines so repeated runs skip retokenization.
class ConceptCache {
 public:
  static std::uint64_t alias_hash(const std::string& tokenizer_identity, std::span<const std::string> aliases) {
    std::uint64_t h = detail::fnv1a64(tokenizer_identity);
    for (const auto& a : aliases) {
      h = detail::fnv1a64("\x1f", h);
      h = detail::fnv1a64(a, h);
    }
    return h;
  }

  const ConceptTokenSet* find(const std::string& model_id, std::uint64_t hash) const {
    auto it = entries_.find({model_id, hash});
    return it == entries_.end() ? nullptr : &it->second;
  }

  void insert(const std::string& model_id, std::uint64_t hash, ConceptTokenSet cs) {
    entries_[{model_id, hash}] = std::move(cs);
  }

  // Cached build; the returned set carries `concept_id`.
  ConceptTokenSet get_or_build(const std::string& model_id, std::string concept_id,
                               std::span<const std::string> aliases, const Tokenizer& tok) {
    const auto h = alias_hash(tok.identity(), aliases);
    if (const auto* hit = find(model_id, h)) {
      ConceptTokenSet cs = *hit;
      cs.concept_id = std::move(concept_id);
      return cs;
    }
    ConceptTokenSet cs = build_concept_set(std::move(concept_id), aliases, tok);
    insert(model_id, h, cs);
    return cs;
  }

  std::size_t size() const { return entries_.size(); }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& [key, cs] : entries_) out << to_line(key.first, key.second, cs) << '\n';
  }

  static ConceptCache load(const std::filesystem::path& path) {
    ConceptCache c;
    auto in = detail::open_input(path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (detail::blank(line)) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        ConceptTokenSet cs;
        cs.concept_id = j.at("concept_id").get<std::string>();
        for (const auto& id : j.at("first_token_ids")) cs.first_token_ids.insert(id.get<TokenId>());
        for (const auto& a : j.at("alias_sequences"))
          cs.alias_sequences.push_back({a.at(0).get<std::string>(), a.at(1).get<std::vector<TokenId>>()});
        const auto hash = std::stoull(j.at("alias_hash").get<std::string>(), nullptr, 16);
        c.insert(j.at("model_id").get<std::string>(), hash, std::move(cs));
      } catch (const std::exception& e) {
        throw CorpusError(lineno, e.what());
      }
    }
    return c;
  }

  static std::string to_line(const std::string& model_id, std::uint64_t hash, const ConceptTokenSet& cs) {
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(hash));
    detail::JsonObjectWriter w;
    w.str("model_id", model_id).str("alias_hash", hex).str("concept_id", cs.concept_id);
    std::string ids = "[";
    bool first = true;
    for (auto id : cs.first_token_ids) {
      if (!first) ids += ',';
      first = false;
      ids += std::to_string(id);
    }
    w.raw("first_token_ids", ids + "]");
    std::string seqs = "[";
    for (std::size_t i = 0; i < cs.alias_sequences.size(); ++i) {
      if (i) seqs += ',';
      seqs += "[" + detail::json_quote(cs.alias_sequences[i].variant) + ",[";
      for (std::size_t k = 0; k < cs.alias_sequences[i].token_ids.size(); ++k) {
        if (k) seqs += ',';
        seqs += std::to_string(cs.alias_sequences[i].token_ids[k]);
      }
      seqs += "]]";
    }
    w.raw("alias_sequences", seqs + "]");
    return w.finish();
  }

 private:
  std::map<std::pair<std::string, std::uint64_t>, ConceptTokenSet> entries_;
};

}  // namespace semmass
