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
#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace semmass::detail {

// printf("%.Ng") with the platform quirks ironed out: -0 prints as 0,
// non-finite values print as nan/inf/-inf.
inline std::string format_sig(double v, int digits) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

// Report floats: six significant digits.
inline std::string fmt6(double v) { return format_sig(v, 6); }

inline std::string fmt6(const std::optional<double>& v) {
  return v ? fmt6(*v) : std::string("NA");
}

inline std::string json_quote(std::string_view s) {
  return nlohmann::json(std::string(s)).dump();
}

// Builds one JSON object in insertion order with caller-controlled number
// text, so output bytes do not depend on a JSON library's float printer.
class JsonObjectWriter {
 public:
  JsonObjectWriter& raw(std::string_view key, std::string_view json_text) {
    out_ += first_ ? "{" : ",";
    first_ = false;
    out_ += json_quote(key);
    out_ += ':';
    out_ += json_text;
    return *this;
  }
  JsonObjectWriter& str(std::string_view key, std::string_view v) { return raw(key, json_quote(v)); }
  JsonObjectWriter& integer(std::string_view key, long long v) { return raw(key, std::to_string(v)); }
  JsonObjectWriter& boolean(std::string_view key, bool v) { return raw(key, v ? "true" : "false"); }
  JsonObjectWriter& number(std::string_view key, double v, int digits) {
    return raw(key, std::isfinite(v) ? format_sig(v, digits) : std::string("null"));
  }
  JsonObjectWriter& number(std::string_view key, const std::optional<double>& v, int digits) {
    return v ? number(key, *v, digits) : raw(key, "null");
  }
  std::string finish() {
    if (first_) out_ = "{";
    out_ += '}';
    return std::move(out_);
  }

 private:
  std::string out_;
  bool first_ = true;
};

// Tab-separated table with a single header row.
class TsvWriter {
 public:
  TsvWriter(std::ostream& os, const std::vector<std::string>& header) : os_(os), width_(header.size()) {
    row(header);
  }
  void row(const std::vector<std::string>& cells) {
    if (cells.size() != width_) throw std::logic_error("tsv row width mismatch");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) os_ << '\t';
      os_ << cells[i];
    }
    os_ << '\n';
  }

 private:
  std::ostream& os_;
  std::size_t width_;
};

inline std::string collapse_ws_lower(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (unsigned char c : s) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out += ' ';
      pending_space = false;
    }
    out += static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c);
  }
  return out;
}

// 64-bit FNV-1a; stable across platforms, unlike std::hash.
inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace semmass::detail
