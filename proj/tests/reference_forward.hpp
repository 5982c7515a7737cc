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

// Plain-loop transformer forward pass used as an oracle for the graph-based
// implementation. Sites listed in ablate have their activations zeroed.

#pragma once

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "popdrop/model/config.hpp"
#include "popdrop/model/params.hpp"

namespace popdrop::oracle {

using Mat = std::vector<std::vector<double>>;

inline Mat matmul_bias(const Mat& x, const model::NamedArray& w, const model::NamedArray& b) {
  Mat out(x.size(), std::vector<double>(w.cols, 0.0));
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < w.cols; ++j) {
      double s = b.data[j];
      for (std::size_t p = 0; p < w.rows; ++p) s += x[i][p] * w.data[p * w.cols + j];
      out[i][j] = s;
    }
  return out;
}

inline Mat layer_norm(const Mat& x, const model::NamedArray& g, const model::NamedArray& b) {
  Mat out = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = static_cast<double>(x[i].size());
    double mu = 0.0;
    for (double v : x[i]) mu += v;
    mu /= d;
    double var = 0.0;
    for (double v : x[i]) var += (v - mu) * (v - mu);
    var /= d;
    for (std::size_t j = 0; j < x[i].size(); ++j) out[i][j] = g.data[j] * (x[i][j] - mu) / std::sqrt(var + 1e-5) + b.data[j];
  }
  return out;
}

inline Mat reference_logits(const model::ModelParams& p, const model::ToyLMConfig& c,
                            const std::vector<model::TokenId>& tokens, const std::set<std::string>& ablate = {}) {
  const std::size_t t_len = tokens.size();
  const std::size_t d = c.model_dim;
  auto get = [&](const std::string& n) -> const model::NamedArray& { return p.get(n); };
  auto zero_if = [&](Mat& m, const std::string& site) {
    if (ablate.count(site))
      for (auto& row : m)
        for (auto& v : row) v = 0.0;
  };
  Mat x(t_len, std::vector<double>(d));
  for (std::size_t i = 0; i < t_len; ++i)
    for (std::size_t j = 0; j < d; ++j)
      x[i][j] = get("tok_emb").data[static_cast<std::size_t>(tokens[i]) * d + j] + get("pos_emb").data[i * d + j];
  zero_if(x, "embed");
  const std::size_t heads = c.heads;
  const std::size_t hd = d / heads;
  for (std::size_t l = 0; l < c.layers; ++l) {
    const std::string pre = "layer" + std::to_string(l) + ".";
    Mat h = layer_norm(x, get(pre + "ln1.g"), get(pre + "ln1.b"));
    Mat qkv = matmul_bias(h, get(pre + "attn.wqkv"), get(pre + "attn.bqkv"));
    Mat att(t_len, std::vector<double>(d, 0.0));
    for (std::size_t hh = 0; hh < heads; ++hh)
      for (std::size_t i = 0; i < t_len; ++i) {
        const std::size_t last = c.mode == model::LMMode::causal ? i + 1 : t_len;
        std::vector<double> w(last);
        double mx = -1e300;
        for (std::size_t j = 0; j < last; ++j) {
          double s = 0.0;
          for (std::size_t e = 0; e < hd; ++e) s += qkv[i][hh * hd + e] * qkv[j][d + hh * hd + e];
          w[j] = s / std::sqrt(static_cast<double>(hd));
          mx = std::max(mx, w[j]);
        }
        double z = 0.0;
        for (auto& v : w) z += (v = std::exp(v - mx));
        for (std::size_t j = 0; j < last; ++j)
          for (std::size_t e = 0; e < hd; ++e) att[i][hh * hd + e] += w[j] / z * qkv[j][2 * d + hh * hd + e];
      }
    Mat a = matmul_bias(att, get(pre + "attn.wo"), get(pre + "attn.bo"));
    zero_if(a, pre + "attn");
    for (std::size_t i = 0; i < t_len; ++i)
      for (std::size_t j = 0; j < d; ++j) x[i][j] += a[i][j];
    h = layer_norm(x, get(pre + "ln2.g"), get(pre + "ln2.b"));
    Mat f = matmul_bias(h, get(pre + "ffn.w1"), get(pre + "ffn.b1"));
    for (auto& row : f)
      for (auto& v : row) v = 0.5 * v * (1.0 + std::tanh(0.7978845608028654 * (v + 0.044715 * v * v * v)));
    zero_if(f, pre + "ffn");
    Mat o = matmul_bias(f, get(pre + "ffn.w2"), get(pre + "ffn.b2"));
    for (std::size_t i = 0; i < t_len; ++i)
      for (std::size_t j = 0; j < d; ++j) x[i][j] += o[i][j];
  }
  x = layer_norm(x, get("ln_f.g"), get("ln_f.b"));
  return matmul_bias(x, get("head.w"), get("head.b"));
}

}  // namespace popdrop::oracle
