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

// Stratified dropout populations. A MaskSet holds K fixed keep/drop patterns
// over a model's dropout sites; member m always applies the same pattern, so
// every stimulus is answered by the same K individuals.
//
// Mask bits are counter-based: entry e of site s for member m is kept iff
//   to_unit_interval(hash_words{seed, m, fnv1a64(site id), e}) >= p
// which makes each member regenerable on its own and independent of the
// order in which members or sites are generated.

#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "popdrop/error.hpp"
#include "popdrop/model/config.hpp"
#include "popdrop/model/transformer.hpp"
#include "popdrop/rng.hpp"

namespace popdrop::population {

struct PopulationConfig {
  std::size_t size = 50;
  double dropout_rate = 0.1;
  std::uint64_t seed = 0;
  // Site ids to mask. Empty selects every declared site.
  std::vector<std::string> sites;

  void validate() const {
    require(size >= 1, ErrorCode::invalid_argument, "population size must be >= 1");
    require(dropout_rate >= 0.0 && dropout_rate < 1.0, ErrorCode::invalid_argument,
            "dropout rate must lie in [0, 1), got " + std::to_string(dropout_rate));
  }

  bool operator==(const PopulationConfig&) const = default;
};

using MemberId = std::size_t;

inline bool mask_keeps(std::uint64_t seed, MemberId member, std::string_view site_id, std::size_t element,
                       double rate) {
  return to_unit_interval(hash_words({seed, member, fnv1a64(site_id), element})) >= rate;
}

struct MaskSet {
  PopulationConfig config;
  std::uint64_t model_fingerprint = 0;
  // All sites declared by the model, in declaration order.
  std::vector<model::DropoutSite> declared;
  // Per declared site: whether it is masked.
  std::vector<bool> selected;
  // keep[m][s] holds one byte (0 or 1) per entry for selected sites and is
  // empty for unselected ones.
  std::vector<std::vector<std::vector<std::uint8_t>>> keep;

  std::size_t members() const { return keep.size(); }

  double keep_multiplier() const { return 1.0 / (1.0 - config.dropout_rate); }

  model::MaskOverlay overlay(MemberId m) const {
    require(m < members(), ErrorCode::out_of_range,
            "member " + std::to_string(m) + " outside population of " + std::to_string(members()));
    const double scale = keep_multiplier();
    model::MaskOverlay o;
    o.sites.resize(declared.size());
    for (std::size_t s = 0; s < declared.size(); ++s) {
      if (!selected[s]) continue;
      const auto& bits = keep[m][s];
      o.sites[s].resize(bits.size());
      std::transform(bits.begin(), bits.end(), o.sites[s].begin(), [&](std::uint8_t b) { return b ? scale : 0.0; });
    }
    return o;
  }

  // Counts over every selected mask entry of every member.
  std::pair<std::size_t, std::size_t> zero_count() const {
    std::size_t zeros = 0;
    std::size_t total = 0;
    for (const auto& member : keep)
      for (const auto& site : member) {
        total += site.size();
        zeros += static_cast<std::size_t>(std::count(site.begin(), site.end(), std::uint8_t{0}));
      }
    return {zeros, total};
  }

  void require_compatible(const model::ToyLMConfig& model_config) const {
    require(model_config.fingerprint() == model_fingerprint, ErrorCode::fingerprint_mismatch,
            "mask set was built for model fingerprint " + std::to_string(model_fingerprint) +
                " but the model has " + std::to_string(model_config.fingerprint()));
  }

  bool operator==(const MaskSet&) const = default;
};

inline std::vector<bool> select_sites(const PopulationConfig& config, const std::vector<model::DropoutSite>& declared) {
  std::vector<bool> selected(declared.size(), config.sites.empty());
  for (const auto& id : config.sites) {
    auto it = std::find_if(declared.begin(), declared.end(), [&](const auto& s) { return s.id == id; });
    require(it != declared.end(), ErrorCode::invalid_argument, "unknown dropout site '" + id + "'");
    selected[static_cast<std::size_t>(it - declared.begin())] = true;
  }
  return selected;
}

// Mask bits of a single member; identical to the member's row in a full build.
inline std::vector<std::vector<std::uint8_t>> generate_member(const PopulationConfig& config,
                                                              const std::vector<model::DropoutSite>& declared,
                                                              const std::vector<bool>& selected, MemberId m) {
  std::vector<std::vector<std::uint8_t>> out(declared.size());
  for (std::size_t s = 0; s < declared.size(); ++s) {
    if (!selected[s]) continue;
    out[s].resize(declared[s].size());
    for (std::size_t e = 0; e < out[s].size(); ++e)
      out[s][e] = mask_keeps(config.seed, m, declared[s].id, e, config.dropout_rate) ? 1 : 0;
  }
  return out;
}

inline MaskSet build_population(const PopulationConfig& config, const std::vector<model::DropoutSite>& declared,
                                std::uint64_t model_fingerprint) {
  config.validate();
  MaskSet set;
  set.config = config;
  set.model_fingerprint = model_fingerprint;
  set.declared = declared;
  set.selected = select_sites(config, declared);
  set.keep.reserve(config.size);
  for (MemberId m = 0; m < config.size; ++m) set.keep.push_back(generate_member(config, declared, set.selected, m));
  return set;
}

inline MaskSet build_population(const PopulationConfig& config, const model::ToyLMConfig& model_config) {
  return build_population(config, model_config.dropout_sites(), model_config.fingerprint());
}

}  // namespace popdrop::population
