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

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "popdrop/error.hpp"
#include "popdrop/model/config.hpp"
#include "popdrop/rng.hpp"

namespace popdrop::model {

// A named weight array. Values are held in double but are always exactly
// representable as float, so the fp32 container round-trips bit for bit.
struct NamedArray {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  bool operator==(const NamedArray&) const = default;
};

struct ModelParams {
  std::vector<NamedArray> arrays;
  std::uint64_t seed = 0;

  const NamedArray& get(const std::string& name) const {
    for (const auto& a : arrays)
      if (a.name == name) return a;
    fail(ErrorCode::invalid_argument, "params: no array named '" + name + "'");
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& a : arrays) n += a.data.size();
    return n;
  }

  bool all_finite() const {
    for (const auto& a : arrays)
      for (double v : a.data)
        if (!std::isfinite(v)) return false;
    return true;
  }

  bool operator==(const ModelParams&) const = default;
};

// Fixed parameter order. Arrays per layer, in order: ln1.g ln1.b attn.wqkv
// attn.bqkv attn.wo attn.bo ln2.g ln2.b ffn.w1 ffn.b1 ffn.w2 ffn.b2.
struct ParamLayout {
  static constexpr std::size_t kTokEmb = 0;
  static constexpr std::size_t kPosEmb = 1;
  static constexpr std::size_t kPerLayer = 12;
  enum LayerSlot : std::size_t { ln1_g, ln1_b, wqkv, bqkv, wo, bo, ln2_g, ln2_b, w1, b1, w2, b2 };

  static std::size_t layer(std::size_t l, LayerSlot slot) { return 2 + l * kPerLayer + slot; }
  static std::size_t final_g(const ToyLMConfig& c) { return 2 + c.layers * kPerLayer; }
  static std::size_t final_b(const ToyLMConfig& c) { return final_g(c) + 1; }
  static std::size_t head_w(const ToyLMConfig& c) { return final_g(c) + 2; }
  static std::size_t head_b(const ToyLMConfig& c) { return final_g(c) + 3; }
  static std::size_t count(const ToyLMConfig& c) { return final_g(c) + 4; }

  // Names and shapes in layout order; data left empty.
  static std::vector<NamedArray> shapes(const ToyLMConfig& c) {
    const std::size_t d = c.model_dim;
    const std::size_t v = c.vocab_size;
    std::vector<NamedArray> out;
    out.push_back({"tok_emb", v, d, {}});
    out.push_back({"pos_emb", c.max_seq_len, d, {}});
    for (std::size_t l = 0; l < c.layers; ++l) {
      const std::string p = "layer" + std::to_string(l) + ".";
      out.push_back({p + "ln1.g", 1, d, {}});
      out.push_back({p + "ln1.b", 1, d, {}});
      out.push_back({p + "attn.wqkv", d, 3 * d, {}});
      out.push_back({p + "attn.bqkv", 1, 3 * d, {}});
      out.push_back({p + "attn.wo", d, d, {}});
      out.push_back({p + "attn.bo", 1, d, {}});
      out.push_back({p + "ln2.g", 1, d, {}});
      out.push_back({p + "ln2.b", 1, d, {}});
      out.push_back({p + "ffn.w1", d, c.ff_dim, {}});
      out.push_back({p + "ffn.b1", 1, c.ff_dim, {}});
      out.push_back({p + "ffn.w2", c.ff_dim, d, {}});
      out.push_back({p + "ffn.b2", 1, d, {}});
    }
    out.push_back({"ln_f.g", 1, d, {}});
    out.push_back({"ln_f.b", 1, d, {}});
    out.push_back({"head.w", d, v, {}});
    out.push_back({"head.b", 1, v, {}});
    return out;
  }
};

inline double round_to_float(double x) { return static_cast<double>(static_cast<float>(x)); }

// Weights ~ N(0, 0.02^2) (output projections scaled by 1/sqrt(2 layers)),
// layer-norm gains 1, biases 0. Element e of array a is drawn from the
// counter stream (seed, a, e).
inline ModelParams init_params(const ToyLMConfig& config, std::uint64_t seed) {
  config.validate();
  ModelParams params;
  params.seed = seed;
  params.arrays = ParamLayout::shapes(config);
  const double residual_scale = 1.0 / std::sqrt(2.0 * static_cast<double>(config.layers));
  for (std::size_t a = 0; a < params.arrays.size(); ++a) {
    auto& arr = params.arrays[a];
    arr.data.assign(arr.rows * arr.cols, 0.0);
    const auto& n = arr.name;
    const auto ends_with = [&](const char* suffix) {
      const std::string s(suffix);
      return n.size() >= s.size() && n.compare(n.size() - s.size(), s.size(), s) == 0;
    };
    if (ends_with(".g")) {
      std::fill(arr.data.begin(), arr.data.end(), 1.0);
      continue;
    }
    if (arr.rows == 1) continue;  // biases
    const double sd = 0.02 * ((ends_with("attn.wo") || ends_with("ffn.w2")) ? residual_scale : 1.0);
    for (std::size_t e = 0; e < arr.data.size(); ++e) {
      CounterRng rng{seed, 0x1417u, a, e};
      arr.data[e] = round_to_float(sd * rng.normal());
    }
  }
  return params;
}

}  // namespace popdrop::model
