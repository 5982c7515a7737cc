// Copyright 2026 The popdrop Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "popdrop/error.hpp"
#include "popdrop/rng.hpp"

namespace popdrop::model {

enum class LMMode { masked, causal };

inline const char* to_string(LMMode m) { return m == LMMode::masked ? "masked" : "causal"; }

inline LMMode parse_mode(const std::string& s) {
  if (s == "masked") return LMMode::masked;
  if (s == "causal") return LMMode::causal;
  fail(ErrorCode::invalid_argument, "unknown model mode '" + s + "' (expected masked|causal)");
}

// A place in the network where a multiplicative mask may be applied. Masks
// are row-major [rows x cols] with one row per sequence position; shorter
// inputs use the leading rows.
struct DropoutSite {
  std::string id;
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const { return rows * cols; }
  bool operator==(const DropoutSite&) const = default;
};

struct ToyLMConfig {
  LMMode mode = LMMode::masked;
  std::size_t vocab_size = 0;
  std::size_t layers = 2;
  std::size_t model_dim = 64;
  std::size_t heads = 4;
  std::size_t ff_dim = 256;
  std::size_t max_seq_len = 16;

  std::size_t head_dim() const { return model_dim / heads; }

  void validate() const {
    require(vocab_size >= 8, ErrorCode::invalid_argument, "config: vocab_size must be >= 8");
    require(layers >= 1, ErrorCode::invalid_argument, "config: layers must be >= 1");
    require(heads >= 1 && model_dim % heads == 0, ErrorCode::invalid_argument,
            "config: model_dim must be divisible by heads");
    require(ff_dim >= 1 && max_seq_len >= 2, ErrorCode::invalid_argument,
            "config: ff_dim >= 1 and max_seq_len >= 2 required");
  }

  // Declared dropout sites, in application order: the summed embeddings,
  // then per layer the projected attention output and the feed-forward
  // hidden activation.
  std::vector<DropoutSite> dropout_sites() const {
    std::vector<DropoutSite> sites;
    sites.push_back({"embed", max_seq_len, model_dim});
    for (std::size_t l = 0; l < layers; ++l) {
      const std::string prefix = "layer" + std::to_string(l);
      sites.push_back({prefix + ".attn", max_seq_len, model_dim});
      sites.push_back({prefix + ".ffn", max_seq_len, ff_dim});
    }
    return sites;
  }

  // Identifies the shape of the network and its dropout sites; two configs
  // with equal fingerprints accept the same masks.
  std::uint64_t fingerprint() const {
    std::uint64_t h = hash_words({mode == LMMode::masked ? 1u : 2u, vocab_size, layers, model_dim,
                                  heads, ff_dim, max_seq_len});
    for (const auto& s : dropout_sites()) h = hash_words({h, fnv1a64(s.id), s.rows, s.cols});
    return h;
  }

  bool operator==(const ToyLMConfig&) const = default;
};

}  // namespace popdrop::model
