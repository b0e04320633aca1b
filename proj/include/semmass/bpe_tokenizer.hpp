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

// Loader for byte-level BPE tokenizers saved in the Hugging Face
// `tokenizer.json` format (GPT-2, Qwen2/2.5/3 and Llama-3 families).
//
// Supported pieces:
//   normalizer      null | NFC | Sequence of those
//   pre_tokenizer   ByteLevel (GPT-2 split pattern when use_regex is set), or
//                   Sequence[Split(<known pattern>, Isolated), ByteLevel]
//   model           BPE with merges as "a b" strings or ["a","b"] pairs,
//                   optional ignore_merges
//   post_processor  null | ByteLevel | TemplateProcessing | Sequence of those
//
// Split patterns are not run through a general regex engine. The three
// patterns these families ship are matched by hand-written scanners that
// follow the backtracking semantics of the original expressions; any other
// pattern is rejected at load time. Added tokens are matched verbatim on
// the raw input before normalization.

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <nlohmann/json.hpp>
#include "semmass/detail/format.hpp"
#include "semmass/error.hpp"
#include "semmass/tokenizer.hpp"

namespace semmass {

namespace bpe_detail {

// Split pattern families recognised by the loader.
enum class SplitPattern {
  gpt2,     // 's|'t|'re|'ve|'m|'ll|'d| ?\p{L}+| ?\p{N}+| ?[^\s\p{L}\p{N}]+|\s+(?!\S)|\s+
  cl100k,   // (?i:'s|...)|[^\r\n\p{L}\p{N}]?\p{L}+|\p{N}{1,N}| ?[^\s\p{L}\p{N}]+[\r\n]*|\s*[\r\n]+|\s+(?!\S)|\s+
};

inline constexpr std::string_view kGpt2Pattern =
    R"('s|'t|'re|'ve|'m|'ll|'d| ?\p{L}+| ?\p{N}+| ?[^\s\p{L}\p{N}]+|\s+(?!\S)|\s+)";
inline constexpr std::string_view kQwenPattern =
    R"((?i:'s|'t|'re|'ve|'m|'ll|'d)|[^\r\n\p{L}\p{N}]?\p{L}+|\p{N}| ?[^\s\p{L}\p{N}]+[\r\n]*|\s*[\r\n]+|\s+(?!\S)|\s+)";
inline constexpr std::string_view kLlama3Pattern =
    R"((?i:'s|'t|'re|'ve|'m|'ll|'d)|[^\r\n\p{L}\p{N}]?\p{L}+|\p{N}{1,3}| ?[^\s\p{L}\p{N}]+[\r\n]*|\s*[\r\n]+|\s+(?!\S)|\s+)";

struct CodePoint {
  UChar32 cp;
  std::size_t begin;  // byte offsets into the source text
  std::size_t end;
};

inline std::vector<CodePoint> decode_utf8(std::string_view s) {
  std::vector<CodePoint> out;
  out.reserve(s.size());
  const auto* p = reinterpret_cast<const uint8_t*>(s.data());
  const int32_t n = static_cast<int32_t>(s.size());
  int32_t i = 0;
  while (i < n) {
    const int32_t start = i;
    UChar32 c;
    U8_NEXT(p, i, n, c);
    out.push_back({c, static_cast<std::size_t>(start), static_cast<std::size_t>(i)});
  }
  return out;
}

inline bool is_letter(UChar32 c) {
  if (c < 0) return false;
  switch (u_charType(c)) {
    case U_UPPERCASE_LETTER:
    case U_LOWERCASE_LETTER:
    case U_TITLECASE_LETTER:
    case U_MODIFIER_LETTER:
    case U_OTHER_LETTER:
      return true;
    default:
      return false;
  }
}

inline bool is_number(UChar32 c) {
  if (c < 0) return false;
  switch (u_charType(c)) {
    case U_DECIMAL_DIGIT_NUMBER:
    case U_LETTER_NUMBER:
    case U_OTHER_NUMBER:
      return true;
    default:
      return false;
  }
}

inline bool is_space(UChar32 c) { return c >= 0 && u_isUWhiteSpace(c); }
inline bool is_newline(UChar32 c) { return c == '\r' || c == '\n'; }
inline bool is_other(UChar32 c) { return !is_space(c) && !is_letter(c) && !is_number(c); }

inline UChar32 ascii_lower(UChar32 c) { return (c >= 'A' && c <= 'Z') ? c + 32 : c; }

// Length (in code points) of a contraction match at i, or 0.
inline std::size_t match_contraction(const std::vector<CodePoint>& t, std::size_t i, bool fold_case) {
  if (t[i].cp != '\'' || i + 1 >= t.size()) return 0;
  auto at = [&](std::size_t j) -> UChar32 {
    if (j >= t.size()) return -1;
    return fold_case ? ascii_lower(t[j].cp) : t[j].cp;
  };
  const UChar32 a = at(i + 1);
  const UChar32 b = at(i + 2);
  if (a == 's' || a == 't' || a == 'm' || a == 'd') {
    // Alternation order tries 're/'ve/'ll after single letters; the single
    // letters never conflict with them so the order does not matter here.
    return 2;
  }
  if ((a == 'r' && b == 'e') || (a == 'v' && b == 'e') || (a == 'l' && b == 'l')) return 3;
  return 0;
}

template <class Pred>
inline std::size_t run(const std::vector<CodePoint>& t, std::size_t i, Pred pred, std::size_t max_len) {
  std::size_t j = i;
  while (j < t.size() && j - i < max_len && pred(t[j].cp)) ++j;
  return j - i;
}

inline constexpr std::size_t kUnbounded = std::numeric_limits<std::size_t>::max();

// \s+(?!\S) then \s+ at position i (t[i] is whitespace).
inline std::size_t match_trailing_space(const std::vector<CodePoint>& t, std::size_t i) {
  const std::size_t n = run(t, i, is_space, kUnbounded);
  if (i + n == t.size()) return n;  // lookahead satisfied at end of text
  return n >= 2 ? n - 1 : n;        // back off one so the next word keeps its space
}

inline std::size_t next_gpt2(const std::vector<CodePoint>& t, std::size_t i) {
  if (std::size_t n = match_contraction(t, i, false)) return n;
  const UChar32 c = t[i].cp;
  const bool lead_space = c == ' ' && i + 1 < t.size();
  const UChar32 nx = lead_space ? t[i + 1].cp : -1;
  if (is_letter(c)) return run(t, i, is_letter, kUnbounded);
  if (lead_space && is_letter(nx)) return 1 + run(t, i + 1, is_letter, kUnbounded);
  if (is_number(c)) return run(t, i, is_number, kUnbounded);
  if (lead_space && is_number(nx)) return 1 + run(t, i + 1, is_number, kUnbounded);
  if (is_other(c)) return run(t, i, is_other, kUnbounded);
  if (lead_space && is_other(nx)) return 1 + run(t, i + 1, is_other, kUnbounded);
  return match_trailing_space(t, i);
}

inline std::size_t next_cl100k(const std::vector<CodePoint>& t, std::size_t i, std::size_t max_digits) {
  if (std::size_t n = match_contraction(t, i, true)) return n;
  const UChar32 c = t[i].cp;
  const UChar32 nx = i + 1 < t.size() ? t[i + 1].cp : -1;
  // [^\r\n\p{L}\p{N}]?\p{L}+
  if (is_letter(c)) return run(t, i, is_letter, kUnbounded);
  if (!is_newline(c) && !is_number(c) && is_letter(nx)) return 1 + run(t, i + 1, is_letter, kUnbounded);
  // \p{N}{1,max}
  if (is_number(c)) return run(t, i, is_number, max_digits);
  // ' ?[^\s\p{L}\p{N}]+[\r\n]*'
  if (is_other(c) || (c == ' ' && is_other(nx))) {
    const std::size_t lead = is_other(c) ? 0 : 1;
    std::size_t n = lead + run(t, i + lead, is_other, kUnbounded);
    n += run(t, i + n, is_newline, kUnbounded);
    return n;
  }
  // c is whitespace from here on.
  // \s*[\r\n]+ : ends just past the last newline inside the whitespace run.
  const std::size_t ws = run(t, i, is_space, kUnbounded);
  for (std::size_t k = ws; k > 0; --k)
    if (is_newline(t[i + k - 1].cp)) return k;
  return match_trailing_space(t, i);
}

// GPT-2 byte → printable code point table.
inline const std::array<std::string, 256>& byte_symbols() {
  static const std::array<std::string, 256> table = [] {
    std::array<int, 256> cps{};
    std::array<bool, 256> direct{};
    for (int b = '!'; b <= '~'; ++b) direct[static_cast<std::size_t>(b)] = true;
    for (int b = 0xA1; b <= 0xAC; ++b) direct[static_cast<std::size_t>(b)] = true;
    for (int b = 0xAE; b <= 0xFF; ++b) direct[static_cast<std::size_t>(b)] = true;
    int extra = 0;
    for (int b = 0; b < 256; ++b) cps[static_cast<std::size_t>(b)] = direct[static_cast<std::size_t>(b)] ? b : 256 + extra++;
    std::array<std::string, 256> out;
    for (int b = 0; b < 256; ++b) {
      char buf[4];
      int32_t len = 0;
      U8_APPEND_UNSAFE(reinterpret_cast<uint8_t*>(buf), len, cps[static_cast<std::size_t>(b)]);
      out[static_cast<std::size_t>(b)] = std::string(buf, static_cast<std::size_t>(len));
    }
    return out;
  }();
  return table;
}

}  // namespace bpe_detail

class BpeTokenizer final : public Tokenizer {
 public:
  static BpeTokenizer load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open tokenizer " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str(), path.filename().string());
  }

  static BpeTokenizer from_json_text(const std::string& text, const std::string& label = "inline") {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("tokenizer", e.what());
    }
    BpeTokenizer tok;
    tok.identity_ = "bpe:" + label + ":" + std::to_string(detail::fnv1a64(text));
    tok.load_model(j.at("model"));
    tok.load_normalizer(j.contains("normalizer") ? j["normalizer"] : nlohmann::json());
    const auto& pre = j.contains("pre_tokenizer") ? j["pre_tokenizer"] : nlohmann::json();
    tok.load_pre_tokenizer(pre);
    if (!tok.byte_level_) throw ParseError("pre_tokenizer", "ByteLevel step required");
    if (tok.add_prefix_space_ && pre.value("type", std::string()) != "ByteLevel")
      throw ParseError("pre_tokenizer", "add_prefix_space is only supported on a lone ByteLevel step");
    if (j.contains("added_tokens") && j["added_tokens"].is_array()) {
      for (const auto& a : j["added_tokens"]) {
        const std::string content = a.at("content").get<std::string>();
        const auto id = a.at("id").get<TokenId>();
        if (!content.empty()) tok.added_.emplace_back(content, id);
        tok.max_id_ = std::max(tok.max_id_, id);
      }
      // Longest first so that overlapping added tokens match greedily.
      std::stable_sort(tok.added_.begin(), tok.added_.end(),
                       [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });
    }
    tok.load_post_processor(j.contains("post_processor") ? j["post_processor"] : nlohmann::json());
    return tok;
  }

  std::vector<TokenId> encode(std::string_view text, bool include_special = false) const override {
    std::vector<TokenId> ids;
    if (include_special) ids.insert(ids.end(), prefix_.begin(), prefix_.end());
    std::size_t pos = 0;
    while (pos < text.size()) {
      std::size_t best_at = text.size();
      const std::pair<std::string, TokenId>* best = nullptr;
      for (const auto& a : added_) {
        const std::size_t at = text.find(a.first, pos);
        if (at != std::string_view::npos && at < best_at) {
          best_at = at;
          best = &a;
        }
      }
      encode_segment(text.substr(pos, best_at - pos), ids);
      if (!best) break;
      ids.push_back(best->second);
      pos = best_at + best->first.size();
    }
    if (include_special) ids.insert(ids.end(), suffix_.begin(), suffix_.end());
    return ids;
  }

  std::size_t vocab_size() const override { return static_cast<std::size_t>(max_id_ + 1); }
  std::string identity() const override { return identity_; }

  std::optional<TokenId> token_to_id(const std::string& token) const {
    if (auto it = vocab_.find(token); it != vocab_.end()) return it->second;
    for (const auto& a : added_)
      if (a.first == token) return a.second;
    return std::nullopt;
  }

  // Pre-tokenizer output (before byte mapping); exposed for tests.
  std::vector<std::string> pre_tokenize(std::string_view text) const {
    std::vector<std::string> out;
    const std::string norm = normalize(text);
    if (!use_split_) {
      out.push_back(norm);
      return out;
    }
    std::string src = norm;
    if (add_prefix_space_ && !src.empty() && src.front() != ' ') src.insert(src.begin(), ' ');
    const auto cps = bpe_detail::decode_utf8(src);
    std::size_t i = 0;
    while (i < cps.size()) {
      const std::size_t n = pattern_ == bpe_detail::SplitPattern::gpt2 ? bpe_detail::next_gpt2(cps, i)
                                                                        : bpe_detail::next_cl100k(cps, i, max_digits_);
      const std::size_t len = std::max<std::size_t>(n, 1);
      out.emplace_back(src.substr(cps[i].begin, cps[i + len - 1].end - cps[i].begin));
      i += len;
    }
    return out;
  }

 private:
  BpeTokenizer() = default;

  static std::string pair_key(std::string_view a, std::string_view b) {
    std::string k;
    k.reserve(a.size() + b.size() + 1);
    k.append(a);
    k.push_back('\x01');
    k.append(b);
    return k;
  }

  void load_model(const nlohmann::json& m) {
    if (m.value("type", std::string()) != "BPE") throw ParseError("model.type", "only BPE models are supported");
    if (m.value("byte_fallback", false)) throw ParseError("model.byte_fallback", "byte fallback is not supported");
    auto nonempty = [&](const char* key) {
      return m.contains(key) && m[key].is_string() && !m[key].get<std::string>().empty();
    };
    if (nonempty("continuing_subword_prefix") || nonempty("end_of_word_suffix"))
      throw ParseError("model", "subword prefixes/suffixes are not supported");
    ignore_merges_ = m.value("ignore_merges", false);
    if (m.contains("unk_token") && m["unk_token"].is_string()) unk_token_ = m["unk_token"].get<std::string>();
    for (const auto& [tok, id] : m.at("vocab").items()) {
      const TokenId v = id.get<TokenId>();
      vocab_.emplace(tok, v);
      max_id_ = std::max(max_id_, v);
    }
    const auto& merges = m.at("merges");
    int rank = 0;
    for (const auto& mg : merges) {
      std::string a, b;
      if (mg.is_string()) {
        const std::string s = mg.get<std::string>();
        const auto sp = s.find(' ');
        if (sp == std::string::npos) throw ParseError("model.merges", "bad merge '" + s + "'");
        a = s.substr(0, sp);
        b = s.substr(sp + 1);
      } else if (mg.is_array() && mg.size() == 2) {
        a = mg[0].get<std::string>();
        b = mg[1].get<std::string>();
      } else {
        throw ParseError("model.merges", "bad merge entry");
      }
      ranks_.emplace(pair_key(a, b), rank++);
    }
  }

  void load_normalizer(const nlohmann::json& n) {
    if (n.is_null()) return;
    const std::string type = n.value("type", std::string());
    if (type == "NFC") {
      nfc_ = true;
    } else if (type == "Sequence") {
      for (const auto& sub : n.at("normalizers")) load_normalizer(sub);
    } else {
      throw ParseError("normalizer", "unsupported normalizer '" + type + "'");
    }
  }

  void load_pre_tokenizer(const nlohmann::json& p) {
    if (p.is_null()) throw ParseError("pre_tokenizer", "byte-level pre-tokenizer required");
    const std::string type = p.value("type", std::string());
    if (type == "ByteLevel") {
      byte_level_ = true;
      add_prefix_space_ = p.value("add_prefix_space", false);
      if (p.value("use_regex", true)) set_pattern(std::string(bpe_detail::kGpt2Pattern));
    } else if (type == "Split") {
      if (p.value("invert", false) || p.value("behavior", std::string("Isolated")) != "Isolated")
        throw ParseError("pre_tokenizer.Split", "only non-inverted Isolated splits are supported");
      const auto& pat = p.at("pattern");
      if (!pat.contains("Regex")) throw ParseError("pre_tokenizer.Split", "only Regex patterns are supported");
      set_pattern(pat["Regex"].get<std::string>());
    } else if (type == "Sequence") {
      for (const auto& sub : p.at("pretokenizers")) load_pre_tokenizer(sub);
    } else {
      throw ParseError("pre_tokenizer", "unsupported pre-tokenizer '" + type + "'");
    }
  }

  void set_pattern(const std::string& pattern) {
    if (use_split_) throw ParseError("pre_tokenizer", "more than one split pattern");
    use_split_ = true;
    if (pattern == bpe_detail::kGpt2Pattern) {
      pattern_ = bpe_detail::SplitPattern::gpt2;
    } else if (pattern == bpe_detail::kQwenPattern) {
      pattern_ = bpe_detail::SplitPattern::cl100k;
      max_digits_ = 1;
    } else if (pattern == bpe_detail::kLlama3Pattern) {
      pattern_ = bpe_detail::SplitPattern::cl100k;
      max_digits_ = 3;
    } else {
      throw ParseError("pre_tokenizer", "unsupported split pattern: " + pattern);
    }
  }

  void load_post_processor(const nlohmann::json& p) {
    if (p.is_null()) return;
    const std::string type = p.value("type", std::string());
    if (type == "ByteLevel") return;
    if (type == "Sequence") {
      for (const auto& sub : p.at("processors")) load_post_processor(sub);
      return;
    }
    if (type != "TemplateProcessing") throw ParseError("post_processor", "unsupported post-processor '" + type + "'");
    const auto& specials = p.at("special_tokens");
    bool seen_sequence = false;
    for (const auto& item : p.at("single")) {
      if (item.contains("Sequence")) {
        seen_sequence = true;
        continue;
      }
      const std::string name = item.at("SpecialToken").at("id").get<std::string>();
      std::vector<TokenId> ids;
      for (const auto& id : specials.at(name).at("ids")) ids.push_back(id.get<TokenId>());
      auto& dst = seen_sequence ? suffix_ : prefix_;
      dst.insert(dst.end(), ids.begin(), ids.end());
    }
  }

  std::string normalize(std::string_view text) const {
    if (!nfc_) return std::string(text);
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status)) throw Error("ICU NFC normalizer unavailable");
    const icu::UnicodeString src =
        icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
    icu::UnicodeString dst = nfc->normalize(src, status);
    if (U_FAILURE(status)) throw Error("NFC normalization failed");
    std::string out;
    dst.toUTF8String(out);
    return out;
  }

  void encode_segment(std::string_view text, std::vector<TokenId>& ids) const {
    if (text.empty()) return;
    for (const auto& piece : pre_tokenize(text)) bpe_word(piece, ids);
  }

  void bpe_word(const std::string& piece, std::vector<TokenId>& ids) const {
    const auto& table = bpe_detail::byte_symbols();
    std::vector<std::string> symbols;
    symbols.reserve(piece.size());
    for (unsigned char c : piece) symbols.push_back(table[c]);
    if (symbols.empty()) return;
    if (ignore_merges_) {
      std::string whole;
      for (const auto& s : symbols) whole += s;
      if (auto it = vocab_.find(whole); it != vocab_.end()) {
        ids.push_back(it->second);
        return;
      }
    }
    while (symbols.size() > 1) {
      int best_rank = std::numeric_limits<int>::max();
      std::size_t best_i = 0;
      for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
        auto it = ranks_.find(pair_key(symbols[i], symbols[i + 1]));
        if (it != ranks_.end() && it->second < best_rank) {
          best_rank = it->second;
          best_i = i;
        }
      }
      if (best_rank == std::numeric_limits<int>::max()) break;
      const std::string a = symbols[best_i];
      const std::string b = symbols[best_i + 1];
      std::vector<std::string> merged;
      merged.reserve(symbols.size());
      for (std::size_t i = 0; i < symbols.size();) {
        if (i + 1 < symbols.size() && symbols[i] == a && symbols[i + 1] == b) {
          merged.push_back(a + b);
          i += 2;
        } else {
          merged.push_back(symbols[i]);
          ++i;
        }
      }
      symbols = std::move(merged);
    }
    for (const auto& s : symbols) {
      if (auto it = vocab_.find(s); it != vocab_.end()) {
        ids.push_back(it->second);
      } else if (auto unk = unk_token_ ? vocab_.find(*unk_token_) : vocab_.end(); unk != vocab_.end()) {
        ids.push_back(unk->second);
      } else {
        throw Error("token '" + s + "' missing from vocabulary");
      }
    }
  }

  std::string identity_;
  std::unordered_map<std::string, TokenId> vocab_;
  std::unordered_map<std::string, int> ranks_;
  std::vector<std::pair<std::string, TokenId>> added_;
  std::vector<TokenId> prefix_;
  std::vector<TokenId> suffix_;
  std::optional<std::string> unk_token_;
  TokenId max_id_ = -1;
  bool ignore_merges_ = false;
  bool nfc_ = false;
  bool byte_level_ = false;
  bool use_split_ = false;
  bool add_prefix_space_ = false;
  bpe_detail::SplitPattern pattern_ = bpe_detail::SplitPattern::gpt2;
  std::size_t max_digits_ = 3;
};

}  // namespace semmass
