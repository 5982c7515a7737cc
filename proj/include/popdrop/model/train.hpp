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
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "popdrop/error.hpp"
#include "popdrop/model/scoring.hpp"
#include "popdrop/rng.hpp"

namespace popdrop::model {

struct TrainSchedule {
  std::size_t steps = 500;
  std::size_t batch = 16;
  double learning_rate = 3e-3;
  std::uint64_t seed = 1;
  // Masked mode: probability that a non-begin position is masked.
  double mask_rate = 0.15;
  // Global gradient-norm clip; <= 0 disables.
  double grad_clip = 1.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  // Fraction of steps with linear warm-up; the rate then decays linearly to
  // 10% of its peak.
  double warmup_fraction = 0.05;
};

struct TrainResult {
  ModelParams params;
  // Mean per-token loss at each step.
  std::vector<double> losses;

  // Mean loss over the first/last max(1, steps/10) steps.
  double head_loss() const { return window_mean(0); }
  double tail_loss() const { return window_mean(losses.size() - window()); }

 private:
  std::size_t window() const { return std::max<std::size_t>(1, losses.size() / 10); }
  double window_mean(std::size_t from) const {
    double s = 0.0;
    for (std::size_t i = from; i < from + window(); ++i) s += losses[i];
    return s / static_cast<double>(window());
  }
};

namespace detail {

struct Example {
  std::vector<TokenId> input;
  std::vector<TokenId> targets;  // -1 where no loss is taken
};

// Sentence tokens are prefixed with the begin token. Causal: predict the
// next token at every position. Masked: replace a random subset of
// positions (at least one) by the mask token and predict the originals.
inline Example make_example(const ToyLM& model, std::span<const TokenId> sentence, const TrainSchedule& s,
                            std::uint64_t step, std::uint64_t slot) {
  Example ex;
  ex.input.push_back(model.vocab.begin_id());
  ex.input.insert(ex.input.end(), sentence.begin(), sentence.end());
  ex.targets.assign(ex.input.size(), -1);
  if (model.config.mode == LMMode::causal) {
    for (std::size_t i = 0; i + 1 < ex.input.size(); ++i) ex.targets[i] = ex.input[i + 1];
    return ex;
  }
  CounterRng rng{s.seed, 0x3a5cu, step, slot};
  bool any = false;
  for (std::size_t i = 1; i < ex.input.size(); ++i) {
    if (rng.uniform() < s.mask_rate) {
      ex.targets[i] = ex.input[i];
      ex.input[i] = model.vocab.mask_id();
      any = true;
    }
  }
  if (!any) {
    const std::size_t i = 1 + rng.below(ex.input.size() - 1);
    ex.targets[i] = ex.input[i];
    ex.input[i] = model.vocab.mask_id();
  }
  return ex;
}

}  // namespace detail

// Deterministic single-threaded Adam training. Parameters are initialised
// from schedule.seed; batch b of step t draws sentence indices from the
// counter stream (seed, t, b). Throws training_diverged naming the step if
// the loss becomes non-finite.
inline TrainResult train_toy_lm(const ToyLMConfig& config, const Vocab& vocab,
                                const std::vector<std::vector<TokenId>>& corpus, const TrainSchedule& schedule) {
  config.validate();
  require(vocab.size() == config.vocab_size, ErrorCode::invalid_argument,
          "train: vocab size " + std::to_string(vocab.size()) + " != config vocab_size " +
              std::to_string(config.vocab_size));
  require(schedule.steps == 0 || !corpus.empty(), ErrorCode::invalid_argument, "train: empty corpus");
  require(schedule.batch >= 1, ErrorCode::invalid_argument, "train: batch must be >= 1");
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    require(!corpus[i].empty() && corpus[i].size() + 1 <= config.max_seq_len, ErrorCode::out_of_range,
            "train: sentence " + std::to_string(i) + " has " + std::to_string(corpus[i].size()) +
                " tokens; must be 1.." + std::to_string(config.max_seq_len - 1));
    for (TokenId t : corpus[i])
      require(t >= 0 && static_cast<std::size_t>(t) < vocab.size(), ErrorCode::unknown_token,
              "train: sentence " + std::to_string(i) + " holds a token outside the vocabulary");
  }

  TrainResult result;
  ToyLM model{config, vocab, init_params(config, schedule.seed)};
  std::vector<std::vector<double>> m1;
  std::vector<std::vector<double>> m2;
  for (const auto& a : model.params.arrays) {
    m1.emplace_back(a.data.size(), 0.0);
    m2.emplace_back(a.data.size(), 0.0);
  }
  const auto warmup = static_cast<std::size_t>(std::ceil(schedule.warmup_fraction * static_cast<double>(schedule.steps)));

  for (std::size_t step = 0; step < schedule.steps; ++step) {
    std::vector<detail::Example> batch;
    std::size_t target_count = 0;
    for (std::size_t b = 0; b < schedule.batch; ++b) {
      CounterRng pick{schedule.seed, 0x5e1ecu, step, b};
      const auto& sentence = corpus[pick.below(corpus.size())];
      batch.push_back(detail::make_example(model, sentence, schedule, step, b));
      for (TokenId t : batch.back().targets) target_count += t >= 0 ? 1 : 0;
    }
    const double scale = 1.0 / static_cast<double>(target_count);
    ParamGrads grads = ParamGrads::zeros_like(model.params);
    double loss = 0.0;
    for (const auto& ex : batch) {
      Graph g(true);
      const Var logits = build_forward(g, model.params, config, ex.input, nullptr, &grads);
      const Var l = g.cross_entropy(logits, ex.targets, scale);
      loss += g.value(l)[0];
      g.backward(l);
    }
    if (!std::isfinite(loss))
      fail(ErrorCode::training_diverged, "train: non-finite loss at step " + std::to_string(step));
    result.losses.push_back(loss);

    double norm2 = 0.0;
    for (const auto& ga : grads.arrays)
      for (double v : ga) norm2 += v * v;
    const double norm = std::sqrt(norm2);
    const double clip = (schedule.grad_clip > 0.0 && norm > schedule.grad_clip) ? schedule.grad_clip / norm : 1.0;

    double lr = schedule.learning_rate;
    if (step < warmup) {
      lr *= static_cast<double>(step + 1) / static_cast<double>(warmup);
    } else if (schedule.steps > warmup) {
      const double progress = static_cast<double>(step - warmup) / static_cast<double>(schedule.steps - warmup);
      lr *= 1.0 - 0.9 * progress;
    }
    const double t = static_cast<double>(step + 1);
    const double c1 = 1.0 - std::pow(schedule.beta1, t);
    const double c2 = 1.0 - std::pow(schedule.beta2, t);
    for (std::size_t a = 0; a < model.params.arrays.size(); ++a) {
      auto& w = model.params.arrays[a].data;
      const auto& ga = grads.arrays[a];
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double gi = ga[i] * clip;
        m1[a][i] = schedule.beta1 * m1[a][i] + (1.0 - schedule.beta1) * gi;
        m2[a][i] = schedule.beta2 * m2[a][i] + (1.0 - schedule.beta2) * gi * gi;
        w[i] = round_to_float(w[i] - lr * (m1[a][i] / c1) / (std::sqrt(m2[a][i] / c2) + schedule.adam_eps));
      }
    }
    if (!model.params.all_finite())
      fail(ErrorCode::training_diverged, "train: non-finite parameters after step " + std::to_string(step));
  }
  result.params = std::move(model.params);
  return result;
}

// Mean per-token log-probability of the sentences (causal log-likelihood or
// masked pseudo-log-likelihood, see sentence_logprob).
inline double mean_token_logprob(const ToyLM& model, std::span<const std::vector<TokenId>> sentences) {
  require(!sentences.empty(), ErrorCode::invalid_argument, "mean_token_logprob: no sentences");
  double total = 0.0;
  std::size_t tokens = 0;
  for (const auto& s : sentences) {
    total += sentence_logprob(model, s);
    tokens += s.size();
  }
  return total / static_cast<double>(tokens);
}

}  // namespace popdrop::model
