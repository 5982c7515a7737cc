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

// Turns dataset rows into scoring stimuli for the toy model.

#pragma once

#include <string>
#include <vector>

#include "popdrop/experiments/datasets.hpp"
#include "popdrop/model/corpus.hpp"
#include "popdrop/model/scoring.hpp"
#include "popdrop/population/scoring.hpp"

namespace popdrop::experiments {

namespace detail {

inline std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
    s.replace(pos, from.size(), to);
  return s;
}

inline constexpr std::string_view kArticleSlot = "\x01" "article";
inline constexpr std::string_view kItemSlot = "\x01" "item";

}  // namespace detail

// Text of a typicality prompt. In masked mode the category slot holds the
// mask token; in causal mode the prompt stops just before the category.
inline std::string typicality_prompt_text(const std::string& tmpl, const std::string& item, const std::string& category,
                                          model::LMMode mode) {
  if (mode == model::LMMode::masked) return model::expand_template(tmpl, item, std::string(model::kMaskToken));
  const std::size_t cut = tmpl.find("{category}");
  require(cut != std::string::npos, ErrorCode::invalid_argument, "typicality template has no {category} slot");
  (void)category;
  return model::expand_template(tmpl.substr(0, cut), item, "");
}

// Every prompt of a category must match a shared skeleton everywhere except
// the article and item slots.
inline void check_isolation(const std::string& category, const std::vector<std::vector<std::string>>& prompts,
                            const std::vector<std::string>& skeleton) {
  for (const auto& p : prompts) {
    require(p.size() == skeleton.size(), ErrorCode::invalid_argument,
            "isolation check failed in category " + category + ": prompt has " + std::to_string(p.size()) +
                " tokens, template skeleton has " + std::to_string(skeleton.size()) + " (items must be single tokens)");
    for (std::size_t i = 0; i < p.size(); ++i) {
      const bool slot = skeleton[i] == detail::kArticleSlot || skeleton[i] == detail::kItemSlot;
      require(slot || p[i] == skeleton[i], ErrorCode::invalid_argument,
              "isolation check failed in category " + category + ": prompts differ at non-item token " +
                  std::to_string(i) + " ('" + p[i] + "' vs '" + skeleton[i] + "')");
    }
  }
}

// One stimulus per dataset item, in dataset order.
inline std::vector<population::Stimulus> typicality_stimuli(const model::ToyLM& lm, const TypicalityDataset& d) {
  const auto mode = lm.config.mode;
  const std::string tmpl = d.prompt_template;
  std::vector<population::Stimulus> out;
  for (const auto& c : d.categories) {
    const std::string skeleton_text = typicality_prompt_text(
        detail::replace_all(tmpl, "{article}", detail::kArticleSlot), std::string(detail::kItemSlot), c.name, mode);
    std::vector<std::vector<std::string>> texts;
    for (const auto& it : c.items) {
      const std::string text = typicality_prompt_text(tmpl, it.item, c.name, mode);
      texts.push_back(model::tokenize(text));
      population::Stimulus s;
      s.id = TypicalityDataset::stimulus_id(c.name, it.item);
      s.tokens.push_back(lm.vocab.begin_id());
      for (auto t : lm.vocab.encode(text)) s.tokens.push_back(t);
      s.target = lm.vocab.id(c.name);
      if (mode == model::LMMode::masked) {
        std::size_t pos = 0;
        std::size_t found = 0;
        for (std::size_t k = 0; k < s.tokens.size(); ++k)
          if (s.tokens[k] == lm.vocab.mask_id()) {
            pos = k;
            ++found;
          }
        require(found == 1, ErrorCode::invalid_argument, "typicality template must contain exactly one {category} slot");
        s.position = pos;
      } else {
        s.position = s.tokens.size();
      }
      out.push_back(std::move(s));
    }
    check_isolation(c.name, texts, model::tokenize(skeleton_text));
  }
  return out;
}

// Sentence-level stimuli for one priming treatment.
enum class Treatment { CT, PT, AT };

inline const char* to_string(Treatment t) { return t == Treatment::CT ? "CT" : t == Treatment::PT ? "PT" : "AT"; }

inline std::vector<population::Stimulus> priming_stimuli(const model::ToyLM& lm, const PrimingDataset& d, Treatment t) {
  std::vector<population::Stimulus> out;
  out.reserve(d.records.size());
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    const auto& r = d.records[i];
    population::Stimulus s;
    s.id = PrimingDataset::stimulus_id(i);
    s.tokens = lm.vocab.encode(r.target);
    if (t == Treatment::PT) s.context = lm.vocab.encode(r.prime_x);
    if (t == Treatment::AT) s.context = lm.vocab.encode(r.prime_y);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace popdrop::experiments
