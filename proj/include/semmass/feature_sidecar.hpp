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

// Hidden-state sidecar: a JSON-lines index plus one flat little-endian
// float32 payload file. Index lines look like
//
//   {"sample_id":"q17","layer":12,"position":0,"phase":"pre","offset":4096,"dim":2048}
//
// where offset and dim count floats, not bytes.

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include "semmass/data_model.hpp"
#include "semmass/detail/format.hpp"
#include "semmass/error.hpp"

namespace semmass {

struct FeatureKey {
  std::string sample_id;
  int layer = 0;
  int position = 0;
  Phase phase = Phase::pre;
  friend auto operator<=>(const FeatureKey&, const FeatureKey&) = default;
};

struct FeatureSlice {
  std::uint64_t offset = 0;
  std::uint64_t dim = 0;
};

class FeatureSidecar {
 public:
  FeatureSidecar() = default;

  // Appends a vector and indexes it under `key` (replacing any earlier entry).
  void add(const FeatureKey& key, std::span<const float> values) {
    index_[key] = {payload_.size(), values.size()};
    payload_.insert(payload_.end(), values.begin(), values.end());
  }

  bool contains(const FeatureKey& key) const { return index_.count(key) != 0; }

  std::span<const float> get(const FeatureKey& key) const {
    auto it = index_.find(key);
    if (it == index_.end())
      throw DomainError("no features for " + key.sample_id + " layer " + std::to_string(key.layer) + " " +
                        std::string(to_string(key.phase)));
    return {payload_.data() + it->second.offset, static_cast<std::size_t>(it->second.dim)};
  }

  // Lowest-position entry for (sample, layer, phase), or empty span.
  std::span<const float> find_any_position(const std::string& sample_id, int layer, Phase phase) const {
    const FeatureKey lo{sample_id, layer, std::numeric_limits<int>::min(), Phase::pre};
    for (auto it = index_.lower_bound(lo); it != index_.end(); ++it) {
      const auto& [key, slice] = *it;
      if (key.sample_id != sample_id || key.layer != layer) break;
      if (key.phase == phase) return {payload_.data() + slice.offset, static_cast<std::size_t>(slice.dim)};
    }
    return {};
  }

  const std::map<FeatureKey, FeatureSlice>& index() const { return index_; }
  std::size_t payload_size() const { return payload_.size(); }

  static FeatureSidecar load(const std::filesystem::path& index_path, const std::filesystem::path& payload_path) {
    FeatureSidecar sc;
    {
      std::ifstream in(payload_path, std::ios::binary);
      if (!in) throw IoError("cannot open " + payload_path.string());
      std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      if (bytes.size() % 4 != 0) throw ValidationError("payload not float32-aligned", payload_path.string());
      sc.payload_.resize(bytes.size() / 4);
      for (std::size_t i = 0; i < sc.payload_.size(); ++i) {
        const std::uint32_t u = std::uint32_t{bytes[4 * i]} | (std::uint32_t{bytes[4 * i + 1]} << 8) |
                                (std::uint32_t{bytes[4 * i + 2]} << 16) | (std::uint32_t{bytes[4 * i + 3]} << 24);
        std::memcpy(&sc.payload_[i], &u, sizeof u);
      }
    }
    auto in = detail::open_input(index_path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (detail::blank(line)) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        FeatureKey key;
        key.sample_id = detail::as_string(detail::require(j, "sample_id", ""), "sample_id");
        key.layer = detail::as_int(detail::require(j, "layer", ""), "layer");
        key.position = detail::as_int(detail::require(j, "position", ""), "position");
        const auto ph = parse_phase(detail::as_string(detail::require(j, "phase", ""), "phase"));
        if (!ph) throw ParseError("phase", "expected pre or post");
        key.phase = *ph;
        const long long off = detail::as_integer(detail::require(j, "offset", ""), "offset");
        const long long dim = detail::as_integer(detail::require(j, "dim", ""), "dim");
        if (off < 0 || dim < 0) throw ParseError("offset", "must be non-negative");
        if (static_cast<std::uint64_t>(off) + static_cast<std::uint64_t>(dim) > sc.payload_.size())
          throw ValidationError("index entry outside payload",
                                "offset " + std::to_string(off) + " dim " + std::to_string(dim));
        sc.index_[key] = {static_cast<std::uint64_t>(off), static_cast<std::uint64_t>(dim)};
      } catch (const nlohmann::json::exception& e) {
        throw CorpusError(lineno, e.what());
      } catch (const Error& e) {
        throw CorpusError(lineno, e.what());
      }
    }
    return sc;
  }

  void save(const std::filesystem::path& index_path, const std::filesystem::path& payload_path) const {
    std::ofstream idx(index_path, std::ios::binary);
    if (!idx) throw IoError("cannot write " + index_path.string());
    for (const auto& [key, slice] : index_) {
      detail::JsonObjectWriter w;
      w.str("sample_id", key.sample_id).integer("layer", key.layer).integer("position", key.position);
      w.str("phase", to_string(key.phase));
      w.integer("offset", static_cast<long long>(slice.offset)).integer("dim", static_cast<long long>(slice.dim));
      idx << w.finish() << '\n';
    }
    std::ofstream pay(payload_path, std::ios::binary);
    if (!pay) throw IoError("cannot write " + payload_path.string());
    for (float f : payload_) {
      std::uint32_t u;
      std::memcpy(&u, &f, sizeof u);
      const char b[4] = {static_cast<char>(u & 0xff), static_cast<char>((u >> 8) & 0xff),
                         static_cast<char>((u >> 16) & 0xff), static_cast<char>((u >> 24) & 0xff)};
      pay.write(b, 4);
    }
  }

 private:
  std::map<FeatureKey, FeatureSlice> index_;
  std::vector<float> payload_;
};

}  // namespace semmass
