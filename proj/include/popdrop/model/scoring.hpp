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
#include <span>
#include <string>
#include <vector>

#include "popdrop/error.hpp"
#include "popdrop/model/transformer.hpp"

namespace popdrop::model {

// A trained (or freshly initialised) model together with what is needed to
// feed it text.
struct ToyLM {
  ToyLMConfig config;
  Vocab vocab;
  ModelParams params;
};

// Probability of target at position. Masked mode: prompt[position] must be
// the mask token. Causal mode: position must be prompt.size(), the slot right
// after the prompt.
inline double token_probability(const ToyLM& model, std::span<const TokenId> prompt, TokenId target,
                                std::size_t position, const MaskOverlay* overlay = nullptr) {
  require(target >= 0 && static_cast<std::size_t>(target) < model.config.vocab_size, ErrorCode::out_of_range,
          "token_probability: target id outside vocabulary");
  std::size_t row = 0;
  if (model.config.mode == LMMode::masked) {
    require(position < prompt.size(), ErrorCode::out_of_range,
            "token_probability: position " + std::to_string(position) + " outside prompt of length " +
                std::to_string(prompt.size()));
    require(prompt[position] == model.vocab.mask_id(), ErrorCode::invalid_argument,
            "token_probability: masked mode needs the mask token at the scored position");
    row = position;
  } else {
    require(!prompt.empty() && position == prompt.size(), ErrorCode::out_of_range,
            "token_probability: causal mode scores the position right after the prompt (" +
                std::to_string(prompt.size()) + "), got " + std::to_string(position));
    row = position - 1;
  }
  const Logits logits = forward_logits(model.params, model.config, prompt, overlay);
  return std::exp(log_softmax(logits.row(row))[static_cast<std::size_t>(target)]);
}

// Full distribution at the scored position (same conventions as above).
inline std::vector<double> position_distribution(const ToyLM& model, std::span<const TokenId> prompt,
                                                 std::size_t position, const MaskOverlay* overlay = nullptr) {
  const std::size_t row = model.config.mode == LMMode::masked ? position : position - 1;
  require(row < prompt.size(), ErrorCode::out_of_range, "position_distribution: position out of range");
  const Logits logits = forward_logits(model.params, model.config, prompt, overlay);
  auto lp = log_softmax(logits.row(row));
  for (double& v : lp) v = std::exp(v);
  return lp;
}

// Context is normalised to start with the begin token, so an empty context
// and a begin-token-only context are the same canonical unprimed input.
inline std::vector<TokenId> canonical_context(const Vocab& vocab, std::span<const TokenId> context) {
  std::vector<TokenId> out;
  if (context.empty() || context.front() != vocab.begin_id()) out.push_back(vocab.begin_id());
  out.insert(out.end(), context.begin(), context.end());
  return out;
}

// log P(sentence | context). Causal: chain rule over the sentence tokens.
// Masked: pseudo-log-likelihood, masking one sentence position at a time
// with the full context visible.
inline double sentence_logprob(const ToyLM& model, std::span<const TokenId> sentence,
                               std::span<const TokenId> context = {}, const MaskOverlay* overlay = nullptr) {
  require(!sentence.empty(), ErrorCode::invalid_argument, "sentence_logprob: empty sentence");
  std::vector<TokenId> input = canonical_context(model.vocab, context);
  const std::size_t offset = input.size();
  input.insert(input.end(), sentence.begin(), sentence.end());
  require(input.size() <= model.config.max_seq_len, ErrorCode::out_of_range,
          "sentence_logprob: context + sentence length " + std::to_string(input.size()) +
              " exceeds max_seq_len " + std::to_string(model.config.max_seq_len));

  double total = 0.0;
  if (model.config.mode == LMMode::causal) {
    const Logits logits = forward_logits(model.params, model.config, input, overlay);
    for (std::size_t j = 0; j < sentence.size(); ++j)
      total += log_softmax(logits.row(offset + j - 1))[static_cast<std::size_t>(sentence[j])];
    return total;
  }
  for (std::size_t j = 0; j < sentence.size(); ++j) {
    std::vector<TokenId> masked = input;
    masked[offset + j] = model.vocab.mask_id();
    const Logits logits = forward_logits(model.params, model.config, masked, overlay);
    total += log_softmax(logits.row(offset + j))[static_cast<std::size_t>(sentence[j])];
  }
  return total;
}

}  // namespace popdrop::model
