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
#include <string>
#include <thread>
#include <vector>

#include "popdrop/model/scoring.hpp"
#include "popdrop/population/maskset.hpp"
#include "popdrop/population/score_matrix.hpp"

namespace popdrop::population {

enum class ScoreKind {
  token_probability,  // P(target | tokens) at position
  token_logprob,      // log of the above
  sentence_logprob,   // log P(tokens | context)
};

struct Stimulus {
  std::string id;
  std::vector<model::TokenId> tokens;
  std::vector<model::TokenId> context;
  model::TokenId target = -1;
  std::size_t position = 0;
};

inline double score_stimulus(const model::ToyLM& lm, const Stimulus& s, ScoreKind kind,
                             const model::MaskOverlay* overlay) {
  switch (kind) {
    case ScoreKind::token_probability:
      return model::token_probability(lm, s.tokens, s.target, s.position, overlay);
    case ScoreKind::token_logprob:
      return std::log(model::token_probability(lm, s.tokens, s.target, s.position, overlay));
    case ScoreKind::sentence_logprob:
      return model::sentence_logprob(lm, s.tokens, s.context, overlay);
  }
  fail(ErrorCode::invalid_argument, "unknown score kind");
}

inline std::vector<double> base_scores(const model::ToyLM& lm, const std::vector<Stimulus>& stimuli, ScoreKind kind) {
  std::vector<double> out;
  out.reserve(stimuli.size());
  for (const auto& s : stimuli) out.push_back(score_stimulus(lm, s, kind, nullptr));
  return out;
}

// Observer of every mask application: (member, stimulus index, site index,
// multipliers applied).
using ApplyHook = std::function<void(MemberId, std::size_t, std::size_t, std::span<const double>)>;

// Scores every stimulus under every member's mask. Members are distributed
// over threads; each cell depends only on (member, stimulus), so the result
// does not depend on the thread count.
inline ScoreMatrix score_population(const MaskSet& masks, const model::ToyLM& lm, const std::vector<Stimulus>& stimuli,
                                    ScoreKind kind, unsigned threads = 1, const ApplyHook& hook = {}) {
  masks.require_compatible(lm.config);
  std::vector<std::string> ids;
  ids.reserve(stimuli.size());
  for (const auto& s : stimuli) ids.push_back(s.id);
  ScoreMatrix out(masks.members(), std::move(ids));

  auto run_member = [&](MemberId m) {
    model::MaskOverlay overlay = masks.overlay(m);
    for (std::size_t j = 0; j < stimuli.size(); ++j) {
      if (hook) overlay.on_apply = [&, j](std::size_t site, std::span<const double> mult) { hook(m, j, site, mult); };
      out.at(m, j) = score_stimulus(lm, stimuli[j], kind, &overlay);
    }
  };

  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(masks.members())));
  if (threads == 1) {
    for (MemberId m = 0; m < masks.members(); ++m) run_member(m);
    return out;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      try {
        for (MemberId m = t; m < masks.members(); m += threads) run_member(m);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace popdrop::population
