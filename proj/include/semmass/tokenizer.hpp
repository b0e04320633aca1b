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

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "semmass/data_model.hpp"

namespace semmass {

// Text → token IDs. Implementations must be deterministic and safe to call
// concurrently from several threads (encode is const and keeps no cache).
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual std::vector<TokenId> encode(std::string_view text, bool include_special = false) const = 0;
  virtual std::size_t vocab_size() const = 0;
  // Stable identity used to key concept-set caches.
  virtual std::string identity() const = 0;
};

// Fixture tokenizer: every UTF-8 byte is its own token (ID = byte value), so
// a leading space is always the separate token 32. include_special prepends
// a BOS token with ID 256.
class ByteTokenizer final : public Tokenizer {
 public:
  static constexpr TokenId kBos = 256;

  std::vector<TokenId> encode(std::string_view text, bool include_special = false) const override {
    std::vector<TokenId> ids;
    ids.reserve(text.size() + 1);
    if (include_special) ids.push_back(kBos);
    for (unsigned char c : text) ids.push_back(c);
    return ids;
  }
  std::size_t vocab_size() const override { return 257; }
  std::string identity() const override { return "byte"; }
};

}  // namespace semmass
