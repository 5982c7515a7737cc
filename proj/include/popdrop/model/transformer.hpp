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

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "popdrop/error.hpp"
#include "popdrop/model/config.hpp"
#include "popdrop/model/graph.hpp"
#include "popdrop/model/params.hpp"
#include "popdrop/model/vocab.hpp"

namespace popdrop::model {

// Per-site multipliers, indexed like ToyLMConfig::dropout_sites(). An empty
// entry leaves that site untouched.
struct MaskOverlay {
  std::vector<std::vector<double>> sites;
  // Called with (site index, multipliers actually applied) at every masked site.
  std::function<void(std::size_t, std::span<const double>)> on_apply;

  void validate(const ToyLMConfig& config) const {
    const auto declared = config.dropout_sites();
    require(sites.size() == declared.size(), ErrorCode::shape_mismatch,
            "overlay has " + std::to_string(sites.size()) + " sites, model declares " +
                std::to_string(declared.size()));
    for (std::size_t i = 0; i < sites.size(); ++i)
      require(sites[i].empty() || sites[i].size() == declared[i].size(), ErrorCode::shape_mismatch,
              "overlay site '" + declared[i].id + "' has " + std::to_string(sites[i].size()) +
                  " entries, expected " + std::to_string(declared[i].size()));
  }

  static MaskOverlay all_ones(const ToyLMConfig& config) {
    MaskOverlay o;
    for (const auto& s : config.dropout_sites()) o.sites.emplace_back(s.size(), 1.0);
    return o;
  }
};

// Mutable gradient buffers shaped like ModelParams.
struct ParamGrads {
  std::vector<std::vector<double>> arrays;

  static ParamGrads zeros_like(const ModelParams& p) {
    ParamGrads g;
    for (const auto& a : p.arrays) g.arrays.emplace_back(a.data.size(), 0.0);
    return g;
  }
};

inline void check_params(const ModelParams& params, const ToyLMConfig& config) {
  const auto shapes = ParamLayout::shapes(config);
  require(params.arrays.size() == shapes.size(), ErrorCode::shape_mismatch,
          "params hold " + std::to_string(params.arrays.size()) + " arrays, config expects " +
              std::to_string(shapes.size()));
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const auto& a = params.arrays[i];
    require(a.name == shapes[i].name && a.rows == shapes[i].rows && a.cols == shapes[i].cols &&
                a.data.size() == a.rows * a.cols,
            ErrorCode::shape_mismatch, "params array '" + a.name + "' does not match config");
  }
}

// Builds the forward pass on g and returns the [T, vocab] logits node.
inline Var build_forward(Graph& g, const ModelParams& params, const ToyLMConfig& config,
                         std::span<const TokenId> tokens, const MaskOverlay* overlay = nullptr,
                         ParamGrads* grads = nullptr) {
  require(!tokens.empty(), ErrorCode::invalid_argument, "forward: empty input");
  require(tokens.size() <= config.max_seq_len, ErrorCode::out_of_range,
          "forward: input length " + std::to_string(tokens.size()) + " exceeds max_seq_len " +
              std::to_string(config.max_seq_len));
  if (overlay != nullptr) overlay->validate(config);

  auto p = [&](std::size_t idx) {
    const auto& a = params.arrays[idx];
    std::span<double> gr;
    if (grads != nullptr) gr = grads->arrays[idx];
    return g.parameter(a.rows, a.cols, a.data, gr);
  };
  std::size_t site = 0;
  auto mask = [&](Var x) {
    const std::size_t s = site++;
    if (overlay == nullptr || overlay->sites[s].empty()) return x;
    const auto& m = overlay->sites[s];
    if (overlay->on_apply) overlay->on_apply(s, std::span<const double>(m).first(g.rows(x) * g.cols(x)));
    return g.scale(x, m);
  };

  std::vector<TokenId> positions(tokens.size());
  for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = static_cast<TokenId>(i);

  Var x = g.add(g.gather_rows(p(ParamLayout::kTokEmb), tokens), g.gather_rows(p(ParamLayout::kPosEmb), positions));
  x = mask(x);
  const bool causal = config.mode == LMMode::causal;
  for (std::size_t l = 0; l < config.layers; ++l) {
    using L = ParamLayout;
    Var h = g.layer_norm(x, p(L::layer(l, L::ln1_g)), p(L::layer(l, L::ln1_b)));
    Var a = g.attention(g.affine(h, p(L::layer(l, L::wqkv)), p(L::layer(l, L::bqkv))), config.heads, causal);
    a = mask(g.affine(a, p(L::layer(l, L::wo)), p(L::layer(l, L::bo))));
    x = g.add(x, a);
    h = g.layer_norm(x, p(L::layer(l, L::ln2_g)), p(L::layer(l, L::ln2_b)));
    Var f = mask(g.gelu(g.affine(h, p(L::layer(l, L::w1)), p(L::layer(l, L::b1)))));
    x = g.add(x, g.affine(f, p(L::layer(l, L::w2)), p(L::layer(l, L::b2))));
  }
  x = g.layer_norm(x, p(ParamLayout::final_g(config)), p(ParamLayout::final_b(config)));
  return g.affine(x, p(ParamLayout::head_w(config)), p(ParamLayout::head_b(config)));
}

struct Logits {
  std::size_t positions = 0;
  std::size_t vocab = 0;
  std::vector<double> values;

  std::span<const double> row(std::size_t t) const { return std::span<const double>(values).subspan(t * vocab, vocab); }
};

// Per-position vocabulary logits. Without an overlay every site is left
// unmasked, which is exactly the all-ones overlay.
inline Logits forward_logits(const ModelParams& params, const ToyLMConfig& config,
                             std::span<const TokenId> tokens, const MaskOverlay* overlay = nullptr) {
  check_params(params, config);
  for (TokenId t : tokens)
    require(t >= 0 && static_cast<std::size_t>(t) < config.vocab_size, ErrorCode::out_of_range,
            "forward: token id " + std::to_string(t) + " outside vocabulary");
  Graph g(false);
  const Var out = build_forward(g, params, config, tokens, overlay);
  const auto v = g.value(out);
  return Logits{tokens.size(), config.vocab_size, std::vector<double>(v.begin(), v.end())};
}

inline std::vector<double> log_softmax(std::span<const double> row) {
  double mx = row[0];
  for (double v : row) mx = std::max(mx, v);
  double z = 0.0;
  for (double v : row) z += std::exp(v - mx);
  const double lz = mx + std::log(z);
  std::vector<double> out(row.size());
  for (std::size_t i = 0; i < row.size(); ++i) out[i] = row[i] - lz;
  return out;
}

}  // namespace popdrop::model
