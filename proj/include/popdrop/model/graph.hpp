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

// A small reverse-mode autodiff tape over row-major double matrices, with
// exactly the operations the toy transformer needs. Inference builds the
// same graph with gradient tracking off, so training and scoring share one
// forward implementation.

#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "popdrop/error.hpp"
#include "popdrop/model/vocab.hpp"

namespace popdrop::model {

struct Var {
  std::size_t id = 0;
};

class Graph {
 public:
  explicit Graph(bool track_gradients = false) : track_(track_gradients) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool tracking() const { return track_; }

  Var constant(std::size_t rows, std::size_t cols, std::vector<double> values) {
    require(values.size() == rows * cols, ErrorCode::shape_mismatch, "graph: constant size mismatch");
    Node n;
    n.rows = rows;
    n.cols = cols;
    n.own = std::move(values);
    return push(std::move(n));
  }

  // Wraps externally owned weights. Gradients, if tracked, are added into
  // grad (which must have the same size) by backward().
  Var parameter(std::size_t rows, std::size_t cols, std::span<const double> value, std::span<double> grad = {}) {
    require(value.size() == rows * cols, ErrorCode::shape_mismatch, "graph: parameter size mismatch");
    Node n;
    n.rows = rows;
    n.cols = cols;
    n.ext = value.data();
    n.ext_grad = grad.empty() ? nullptr : grad.data();
    return push(std::move(n));
  }

  std::size_t rows(Var v) const { return nodes_[v.id].rows; }
  std::size_t cols(Var v) const { return nodes_[v.id].cols; }
  std::span<const double> value(Var v) const {
    const Node& n = nodes_[v.id];
    return {n.data(), n.rows * n.cols};
  }

  // ---------------------------------------------------------------- ops

  Var add(Var a, Var b) {
    check_same(a, b, "add");
    Var out = make(rows(a), cols(a));
    auto o = mut(out);
    auto x = value(a);
    auto y = value(b);
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] + y[i];
    on_backward([=, this] {
      auto g = grad(out);
      auto ga = grad(a);
      auto gb = grad(b);
      for (std::size_t i = 0; i < g.size(); ++i) {
        ga[i] += g[i];
        gb[i] += g[i];
      }
    });
    return out;
  }

  // x [n, k] * w [k, m] + bias [1, m]
  Var affine(Var x, Var w, Var bias) {
    const std::size_t n = rows(x);
    const std::size_t k = cols(x);
    const std::size_t m = cols(w);
    require(rows(w) == k && rows(bias) == 1 && cols(bias) == m, ErrorCode::shape_mismatch,
            "graph: affine shape mismatch");
    Var out = make(n, m);
    auto o = mut(out);
    auto xv = value(x);
    auto wv = value(w);
    auto bv = value(bias);
    for (std::size_t i = 0; i < n; ++i) {
      double* row = &o[i * m];
      for (std::size_t j = 0; j < m; ++j) row[j] = bv[j];
      for (std::size_t p = 0; p < k; ++p) {
        const double xip = xv[i * k + p];
        const double* wrow = &wv[p * m];
        for (std::size_t j = 0; j < m; ++j) row[j] += xip * wrow[j];
      }
    }
    on_backward([=, this] {
      auto g = grad(out);
      auto gx = grad(x);
      auto gw = grad(w);
      auto gb = grad(bias);
      auto xv2 = value(x);
      auto wv2 = value(w);
      for (std::size_t i = 0; i < n; ++i) {
        const double* grow = &g[i * m];
        for (std::size_t j = 0; j < m; ++j) gb[j] += grow[j];
        for (std::size_t p = 0; p < k; ++p) {
          const double* wrow = &wv2[p * m];
          double* gwrow = &gw[p * m];
          const double xip = xv2[i * k + p];
          double acc = 0.0;
          for (std::size_t j = 0; j < m; ++j) {
            acc += grow[j] * wrow[j];
            gwrow[j] += xip * grow[j];
          }
          gx[i * k + p] += acc;
        }
      }
    });
    return out;
  }

  // Rows of table [V, d] selected by ids.
  Var gather_rows(Var table, std::span<const TokenId> ids) {
    const std::size_t d = cols(table);
    const std::size_t v = rows(table);
    std::vector<TokenId> idx(ids.begin(), ids.end());
    for (TokenId t : idx)
      require(t >= 0 && static_cast<std::size_t>(t) < v, ErrorCode::out_of_range,
              "graph: token id " + std::to_string(t) + " outside table of " + std::to_string(v) + " rows");
    Var out = make(idx.size(), d);
    auto o = mut(out);
    auto tv = value(table);
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = 0; j < d; ++j) o[i * d + j] = tv[static_cast<std::size_t>(idx[i]) * d + j];
    on_backward([=, this] {
      auto g = grad(out);
      auto gt = grad(table);
      for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = 0; j < d; ++j) gt[static_cast<std::size_t>(idx[i]) * d + j] += g[i * d + j];
    });
    return out;
  }

  // Row-wise layer norm with gain and bias [1, d].
  Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5) {
    const std::size_t n = rows(x);
    const std::size_t d = cols(x);
    require(cols(gain) == d && cols(bias) == d, ErrorCode::shape_mismatch, "graph: layer_norm shape mismatch");
    Var out = make(n, d);
    auto o = mut(out);
    auto xv = value(x);
    auto gv = value(gain);
    auto bv = value(bias);
    std::vector<double> xhat(n * d);
    std::vector<double> inv_sd(n);
    for (std::size_t i = 0; i < n; ++i) {
      double mu = 0.0;
      for (std::size_t j = 0; j < d; ++j) mu += xv[i * d + j];
      mu /= static_cast<double>(d);
      double var = 0.0;
      for (std::size_t j = 0; j < d; ++j) var += (xv[i * d + j] - mu) * (xv[i * d + j] - mu);
      var /= static_cast<double>(d);
      inv_sd[i] = 1.0 / std::sqrt(var + eps);
      for (std::size_t j = 0; j < d; ++j) {
        xhat[i * d + j] = (xv[i * d + j] - mu) * inv_sd[i];
        o[i * d + j] = gv[j] * xhat[i * d + j] + bv[j];
      }
    }
    on_backward([=, this, xhat = std::move(xhat), inv_sd = std::move(inv_sd)] {
      auto g = grad(out);
      auto gx = grad(x);
      auto gg = grad(gain);
      auto gb = grad(bias);
      auto gv2 = value(gain);
      std::vector<double> dxhat(d);
      for (std::size_t i = 0; i < n; ++i) {
        double mean_dxhat = 0.0;
        double mean_dxhat_xhat = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          const double gij = g[i * d + j];
          gg[j] += gij * xhat[i * d + j];
          gb[j] += gij;
          dxhat[j] = gij * gv2[j];
          mean_dxhat += dxhat[j];
          mean_dxhat_xhat += dxhat[j] * xhat[i * d + j];
        }
        mean_dxhat /= static_cast<double>(d);
        mean_dxhat_xhat /= static_cast<double>(d);
        for (std::size_t j = 0; j < d; ++j)
          gx[i * d + j] += inv_sd[i] * (dxhat[j] - mean_dxhat - xhat[i * d + j] * mean_dxhat_xhat);
      }
    });
    return out;
  }

  // tanh-approximated GELU.
  Var gelu(Var x) {
    Var out = make(rows(x), cols(x));
    auto o = mut(out);
    auto xv = value(x);
    constexpr double c = 0.7978845608028654;  // sqrt(2 / pi)
    for (std::size_t i = 0; i < o.size(); ++i) {
      const double v = xv[i];
      o[i] = 0.5 * v * (1.0 + std::tanh(c * (v + 0.044715 * v * v * v)));
    }
    on_backward([=, this] {
      auto g = grad(out);
      auto gx = grad(x);
      auto xv2 = value(x);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double v = xv2[i];
        const double t = std::tanh(c * (v + 0.044715 * v * v * v));
        const double dt = (1.0 - t * t) * c * (1.0 + 3.0 * 0.044715 * v * v);
        gx[i] += g[i] * (0.5 * (1.0 + t) + 0.5 * v * dt);
      }
    });
    return out;
  }

  // Elementwise product with the leading rows(x) * cols(x) multipliers.
  Var scale(Var x, std::span<const double> multipliers) {
    const std::size_t count = rows(x) * cols(x);
    require(multipliers.size() >= count, ErrorCode::shape_mismatch, "graph: mask smaller than activation");
    std::vector<double> m(multipliers.begin(), multipliers.begin() + static_cast<std::ptrdiff_t>(count));
    Var out = make(rows(x), cols(x));
    auto o = mut(out);
    auto xv = value(x);
    for (std::size_t i = 0; i < count; ++i) o[i] = xv[i] * m[i];
    on_backward([=, this, m = std::move(m)] {
      auto g = grad(out);
      auto gx = grad(x);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * m[i];
    });
    return out;
  }

  // Multi-head scaled dot-product attention over packed qkv [T, 3d].
  Var attention(Var qkv, std::size_t heads, bool causal) {
    const std::size_t t_len = rows(qkv);
    const std::size_t d = cols(qkv) / 3;
    require(cols(qkv) == 3 * d && d % heads == 0, ErrorCode::shape_mismatch, "graph: attention shape mismatch");
    const std::size_t hd = d / heads;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(hd));
    Var out = make(t_len, d);
    auto o = mut(out);
    auto in = value(qkv);
    const std::size_t stride = 3 * d;
    std::vector<double> probs(heads * t_len * t_len, 0.0);
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t qo = h * hd;
      const std::size_t ko = d + h * hd;
      const std::size_t vo = 2 * d + h * hd;
      for (std::size_t i = 0; i < t_len; ++i) {
        double* p = &probs[(h * t_len + i) * t_len];
        const std::size_t last = causal ? i + 1 : t_len;
        double mx = -INFINITY;
        for (std::size_t j = 0; j < last; ++j) {
          double s = 0.0;
          for (std::size_t e = 0; e < hd; ++e) s += in[i * stride + qo + e] * in[j * stride + ko + e];
          p[j] = s * inv_sqrt;
          mx = std::max(mx, p[j]);
        }
        double z = 0.0;
        for (std::size_t j = 0; j < last; ++j) {
          p[j] = std::exp(p[j] - mx);
          z += p[j];
        }
        for (std::size_t j = 0; j < last; ++j) p[j] /= z;
        for (std::size_t e = 0; e < hd; ++e) {
          double acc = 0.0;
          for (std::size_t j = 0; j < last; ++j) acc += p[j] * in[j * stride + vo + e];
          o[i * d + h * hd + e] = acc;
        }
      }
    }
    on_backward([=, this, probs = std::move(probs)] {
      auto g = grad(out);
      auto gi = grad(qkv);
      auto in2 = value(qkv);
      std::vector<double> dp(t_len);
      for (std::size_t h = 0; h < heads; ++h) {
        const std::size_t qo = h * hd;
        const std::size_t ko = d + h * hd;
        const std::size_t vo = 2 * d + h * hd;
        for (std::size_t i = 0; i < t_len; ++i) {
          const double* p = &probs[(h * t_len + i) * t_len];
          const std::size_t last = causal ? i + 1 : t_len;
          double dot = 0.0;
          for (std::size_t j = 0; j < last; ++j) {
            double acc = 0.0;
            for (std::size_t e = 0; e < hd; ++e) {
              const double go = g[i * d + h * hd + e];
              acc += go * in2[j * stride + vo + e];
              gi[j * stride + vo + e] += p[j] * go;
            }
            dp[j] = acc;
            dot += acc * p[j];
          }
          for (std::size_t j = 0; j < last; ++j) {
            const double ds = p[j] * (dp[j] - dot) * inv_sqrt;
            if (ds == 0.0) continue;
            for (std::size_t e = 0; e < hd; ++e) {
              gi[i * stride + qo + e] += ds * in2[j * stride + ko + e];
              gi[j * stride + ko + e] += ds * in2[i * stride + qo + e];
            }
          }
        }
      }
    });
    return out;
  }

  // scale * sum over rows with targets[r] >= 0 of -log softmax(logits[r])[targets[r]].
  Var cross_entropy(Var logits, std::span<const TokenId> targets, double scale) {
    const std::size_t n = rows(logits);
    const std::size_t v = cols(logits);
    require(targets.size() == n, ErrorCode::shape_mismatch, "graph: cross_entropy target count mismatch");
    std::vector<TokenId> tg(targets.begin(), targets.end());
    auto lv = value(logits);
    std::vector<double> soft(n * v, 0.0);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (tg[i] < 0) continue;
      const double* row = &lv[i * v];
      double mx = row[0];
      for (std::size_t j = 1; j < v; ++j) mx = std::max(mx, row[j]);
      double z = 0.0;
      for (std::size_t j = 0; j < v; ++j) {
        soft[i * v + j] = std::exp(row[j] - mx);
        z += soft[i * v + j];
      }
      for (std::size_t j = 0; j < v; ++j) soft[i * v + j] /= z;
      loss -= row[static_cast<std::size_t>(tg[i])] - mx - std::log(z);
    }
    Var out = make(1, 1);
    mut(out)[0] = scale * loss;
    on_backward([=, this, soft = std::move(soft), tg = std::move(tg)] {
      const double g = grad(out)[0] * scale;
      auto gl = grad(logits);
      for (std::size_t i = 0; i < n; ++i) {
        if (tg[i] < 0) continue;
        for (std::size_t j = 0; j < v; ++j) gl[i * v + j] += g * soft[i * v + j];
        gl[i * v + static_cast<std::size_t>(tg[i])] -= g;
      }
    });
    return out;
  }

  // Seeds d(root)/d(root) = 1 and propagates to every parameter gradient.
  void backward(Var root) {
    require(track_, ErrorCode::invalid_argument, "graph: backward on an untracked graph");
    require(rows(root) == 1 && cols(root) == 1, ErrorCode::shape_mismatch, "graph: backward root must be scalar");
    for (auto& n : nodes_) n.grad.assign(n.rows * n.cols, 0.0);
    nodes_[root.id].grad[0] = 1.0;
    for (std::size_t i = root.id + 1; i-- > 0;)
      if (nodes_[i].backward) nodes_[i].backward();
    for (auto& n : nodes_) {
      if (n.ext_grad == nullptr) continue;
      for (std::size_t i = 0; i < n.grad.size(); ++i) n.ext_grad[i] += n.grad[i];
    }
  }

 private:
  struct Node {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> own;
    const double* ext = nullptr;
    double* ext_grad = nullptr;
    std::vector<double> grad;
    std::function<void()> backward;

    const double* data() const { return ext != nullptr ? ext : own.data(); }
  };

  Var push(Node n) {
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
  }

  Var make(std::size_t r, std::size_t c) {
    Node n;
    n.rows = r;
    n.cols = c;
    n.own.assign(r * c, 0.0);
    return push(std::move(n));
  }

  std::span<double> mut(Var v) { return nodes_[v.id].own; }
  std::span<double> grad(Var v) { return nodes_[v.id].grad; }

  // Attaches the backward closure to the most recently created node.
  template <typename F>
  void on_backward(F&& f) {
    if (track_) nodes_.back().backward = std::forward<F>(f);
  }

  void check_same(Var a, Var b, const char* op) const {
    require(rows(a) == rows(b) && cols(a) == cols(b), ErrorCode::shape_mismatch,
            std::string("graph: ") + op + " shape mismatch");
  }

  bool track_;
  std::vector<Node> nodes_;
};

}  // namespace popdrop::model
