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
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "popdrop/error.hpp"

namespace popdrop::experiments {

inline constexpr const char* kDefaultTypicalityTemplate = "{article} {item} is a {category} .";

struct TypicalityItem {
  std::string item;
  double rank = 0.0;
  std::optional<double> frequency;

  bool operator==(const TypicalityItem&) const = default;
};

struct TypicalityCategory {
  std::string name;
  std::vector<TypicalityItem> items;

  bool operator==(const TypicalityCategory&) const = default;
};

struct TypicalityDataset {
  std::vector<TypicalityCategory> categories;
  std::string prompt_template = kDefaultTypicalityTemplate;

  bool has_frequencies() const {
    for (const auto& c : categories)
      for (const auto& i : c.items)
        if (!i.frequency) return false;
    return !categories.empty();
  }

  std::size_t item_count() const {
    std::size_t n = 0;
    for (const auto& c : categories) n += c.items.size();
    return n;
  }

  // Stimulus id used on the score wire: "<category>/<item>".
  static std::string stimulus_id(const std::string& category, const std::string& item) {
    return category + "/" + item;
  }

  bool operator==(const TypicalityDataset&) const = default;
};

// Ranks within a category must be 1..n where each tie group occupying sorted
// positions a..b carries either rank a (competition ranking) or (a+b)/2
// (mid-ranks).
inline std::optional<std::string> check_rank_permutation(std::vector<double> ranks) {
  std::sort(ranks.begin(), ranks.end());
  std::size_t i = 0;
  while (i < ranks.size()) {
    std::size_t j = i;
    while (j + 1 < ranks.size() && ranks[j + 1] == ranks[i]) ++j;
    const double a = static_cast<double>(i + 1);
    const double b = static_cast<double>(j + 1);
    if (ranks[i] != a && ranks[i] != (a + b) / 2.0) {
      return "rank " + std::to_string(ranks[i]) + " does not fit a ranking of 1.." + std::to_string(ranks.size()) +
             " (expected " + std::to_string(a) + (i == j ? "" : " or " + std::to_string((a + b) / 2.0)) + ")";
    }
    i = j + 1;
  }
  return std::nullopt;
}

inline void validate(const TypicalityDataset& d) {
  require(!d.categories.empty(), ErrorCode::invalid_argument, "typicality dataset has no categories");
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& c : d.categories) {
    require(!c.name.empty(), ErrorCode::invalid_argument, "typicality dataset: empty category name");
    std::vector<double> ranks;
    for (const auto& it : c.items) {
      require(!it.item.empty(), ErrorCode::invalid_argument, "typicality dataset: empty item in " + c.name);
      require(seen.insert({c.name, it.item}).second, ErrorCode::invalid_argument,
              "typicality dataset: duplicate item " + c.name + "/" + it.item);
      require(!it.frequency || (std::isfinite(*it.frequency) && *it.frequency >= 0.0), ErrorCode::invalid_argument,
              "typicality dataset: frequency of " + c.name + "/" + it.item + " must be finite and >= 0");
      ranks.push_back(it.rank);
    }
    if (auto problem = check_rank_permutation(ranks))
      fail(ErrorCode::invalid_argument, "typicality dataset: category " + c.name + ": " + *problem);
  }
}

struct PrimingRecord {
  std::string prime_x;  // structure-matched prime
  std::string prime_y;  // alternative-structure prime
  std::string target;
  char group = 'A';

  bool operator==(const PrimingRecord&) const = default;
};

struct PrimingDataset {
  std::vector<PrimingRecord> records;

  // Stimulus id used on the score wire: zero-based record index.
  static std::string stimulus_id(std::size_t index) { return std::to_string(index); }

  bool operator==(const PrimingDataset&) const = default;
};

inline void validate(const PrimingDataset& d) {
  require(!d.records.empty(), ErrorCode::invalid_argument, "priming dataset has no records");
  bool a = false;
  bool b = false;
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    const auto& r = d.records[i];
    const std::string where = "priming record " + std::to_string(i);
    require(!r.prime_x.empty() && !r.prime_y.empty() && !r.target.empty(), ErrorCode::invalid_argument,
            where + ": empty field");
    require(r.prime_x != r.prime_y, ErrorCode::invalid_argument, where + ": prime_x equals prime_y");
    require(r.group == 'A' || r.group == 'B', ErrorCode::invalid_argument, where + ": group must be A or B");
    (r.group == 'A' ? a : b) = true;
  }
  require(a && b, ErrorCode::invalid_argument, "priming dataset must contain both groups A and B");
}

}  // namespace popdrop::experiments
