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
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "popdrop/error.hpp"
#include "popdrop/model/vocab.hpp"
#include "popdrop/rng.hpp"

namespace popdrop::model {

// "an" before a vowel-initial word, "a" otherwise.
inline std::string indefinite_article(std::string_view word) {
  if (!word.empty() && std::string_view("aeiouAEIOU").find(word.front()) != std::string_view::npos) return "an";
  return "a";
}

// Replaces {article}, {item} and {category}; {article} agrees with the item.
inline std::string expand_template(std::string_view tmpl, std::string_view item, std::string_view category) {
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const std::size_t close = tmpl.find('}', i);
      require(close != std::string_view::npos, ErrorCode::invalid_argument,
              "template '" + std::string(tmpl) + "' has an unterminated placeholder");
      const std::string_view key = tmpl.substr(i + 1, close - i - 1);
      if (key == "item") {
        out += item;
      } else if (key == "category") {
        out += category;
      } else if (key == "article") {
        out += indefinite_article(item);
      } else {
        fail(ErrorCode::invalid_argument, "template '" + std::string(tmpl) + "' has unknown placeholder {" +
                                              std::string(key) + "}");
      }
      i = close + 1;
    } else {
      out.push_back(tmpl[i++]);
    }
  }
  return out;
}

struct PlantedItem {
  std::string name;
  // Sentences pairing the item with its category.
  std::uint64_t count = 0;
  // Sentences pairing the item with the filler word instead.
  std::uint64_t filler_count = 0;
};

// Items listed in planted typicality order (rank 1 first).
// typicality_ranks, when present, assigns each item (in the same order) the
// rank a typicality norm would report; it defaults to the planted order.
struct PlantedCategory {
  std::string name;
  std::vector<PlantedItem> items;
  std::vector<std::size_t> typicality_ranks;

  std::size_t typicality_rank(std::size_t i) const { return typicality_ranks.empty() ? i + 1 : typicality_ranks[i]; }
};

struct SyntheticCorpusSpec {
  std::vector<PlantedCategory> categories;
  // Each must contain {item} and {category}; {article} is optional.
  std::vector<std::string> templates{"{article} {item} is a {category} ."};
  std::string filler_word = "thing";
  std::uint64_t seed = 0;

  std::uint64_t total_sentences() const {
    std::uint64_t n = 0;
    for (const auto& c : categories)
      for (const auto& it : c.items) n += it.count + it.filler_count;
    return n;
  }

  void validate() const {
    require(!categories.empty(), ErrorCode::invalid_argument, "corpus setup: no categories");
    require(!templates.empty(), ErrorCode::invalid_argument, "corpus setup: no templates");
    for (const auto& t : templates) {
      require(t.find("{item}") != std::string::npos, ErrorCode::invalid_argument,
              "corpus setup: template '" + t + "' is missing the {item} placeholder");
      require(t.find("{category}") != std::string::npos, ErrorCode::invalid_argument,
              "corpus setup: template '" + t + "' is missing the {category} placeholder");
      expand_template(t, "x", "y");
    }
    auto single_token = [](const std::string& w) { return tokenize(w).size() == 1 && tokenize(w)[0] == w; };
    require(single_token(filler_word), ErrorCode::invalid_argument,
            "corpus setup: filler word must be a single lowercase token");
    std::set<std::string> items;
    std::set<std::string> names;
    for (const auto& c : categories) {
      require(single_token(c.name), ErrorCode::invalid_argument,
              "corpus setup: category '" + c.name + "' must be a single lowercase token");
      require(names.insert(c.name).second, ErrorCode::invalid_argument, "corpus setup: duplicate category " + c.name);
      require(!c.items.empty(), ErrorCode::invalid_argument, "corpus setup: category " + c.name + " has no items");
      for (std::size_t i = 0; i < c.items.size(); ++i) {
        const auto& it = c.items[i];
        require(single_token(it.name), ErrorCode::invalid_argument,
                "corpus setup: item '" + it.name + "' must be a single lowercase token");
        require(items.insert(it.name).second, ErrorCode::invalid_argument,
                "corpus setup: item '" + it.name + "' appears more than once");
        require(it.count >= 1, ErrorCode::invalid_argument, "corpus setup: item '" + it.name + "' has zero count");
        require(i == 0 || it.count < c.items[i - 1].count, ErrorCode::invalid_argument,
                "corpus setup: counts in category " + c.name + " must strictly decrease with rank (item '" +
                    it.name + "')");
      }
      if (!c.typicality_ranks.empty()) {
        std::vector<std::size_t> sorted = c.typicality_ranks;
        std::sort(sorted.begin(), sorted.end());
        bool permutation = sorted.size() == c.items.size();
        for (std::size_t i = 0; permutation && i < sorted.size(); ++i) permutation = sorted[i] == i + 1;
        require(permutation, ErrorCode::invalid_argument,
                "corpus setup: typicality_ranks of " + c.name + " must be a permutation of 1..n");
      }
    }
  }
};

struct GroundTruthRow {
  std::string item;
  std::string category;
  std::size_t planted_rank = 0;
  std::uint64_t planted_frequency = 0;
  std::uint64_t filler_count = 0;

  bool operator==(const GroundTruthRow&) const = default;
};

struct Corpus {
  std::vector<std::string> sentences;
  std::vector<GroundTruthRow> truth;
};

// Emits every planted (item, category) pair exactly count times and every
// (item, filler) pair filler_count times, each through a template chosen by
// the counter stream, then shuffles. Output is a pure function of the argument.
inline Corpus generate_corpus(const SyntheticCorpusSpec& spec) {
  spec.validate();
  Corpus corpus;
  for (std::size_t c = 0; c < spec.categories.size(); ++c) {
    const auto& cat = spec.categories[c];
    for (std::size_t i = 0; i < cat.items.size(); ++i) {
      const auto& it = cat.items[i];
      corpus.truth.push_back({it.name, cat.name, i + 1, it.count, it.filler_count});
      for (std::uint64_t k = 0; k < it.count + it.filler_count; ++k) {
        CounterRng pick{spec.seed, 0x7e3u, c, i, k};
        const auto& tmpl = spec.templates[pick.below(spec.templates.size())];
        const bool filler = k >= it.count;
        corpus.sentences.push_back(expand_template(tmpl, it.name, filler ? spec.filler_word : cat.name));
      }
    }
  }
  CounterRng shuffle{spec.seed, 0x5b0ffu};
  for (std::size_t i = corpus.sentences.size(); i > 1; --i)
    std::swap(corpus.sentences[i - 1], corpus.sentences[shuffle.below(i)]);
  return corpus;
}

// ------------------------------------------------------------------ JSON

inline void to_json(nlohmann::json& j, const PlantedItem& it) {
  j = {{"name", it.name}, {"count", it.count}, {"filler_count", it.filler_count}};
}
inline void from_json(const nlohmann::json& j, PlantedItem& it) {
  j.at("name").get_to(it.name);
  j.at("count").get_to(it.count);
  it.filler_count = j.value("filler_count", std::uint64_t{0});
}
inline void to_json(nlohmann::json& j, const PlantedCategory& c) {
  j = {{"name", c.name}, {"items", c.items}};
  if (!c.typicality_ranks.empty()) j["typicality_ranks"] = c.typicality_ranks;
}
inline void from_json(const nlohmann::json& j, PlantedCategory& c) {
  j.at("name").get_to(c.name);
  j.at("items").get_to(c.items);
  c.typicality_ranks = j.value("typicality_ranks", std::vector<std::size_t>{});
}
inline void to_json(nlohmann::json& j, const SyntheticCorpusSpec& s) {
  j = {{"categories", s.categories}, {"templates", s.templates}, {"filler_word", s.filler_word}, {"seed", s.seed}};
}
inline void from_json(const nlohmann::json& j, SyntheticCorpusSpec& s) {
  j.at("categories").get_to(s.categories);
  if (j.contains("templates")) j.at("templates").get_to(s.templates);
  s.filler_word = j.value("filler_word", std::string("thing"));
  s.seed = j.value("seed", std::uint64_t{0});
}
inline void to_json(nlohmann::json& j, const GroundTruthRow& r) {
  j = {{"item", r.item},
       {"category", r.category},
       {"planted_rank", r.planted_rank},
       {"planted_frequency", r.planted_frequency},
       {"filler_count", r.filler_count}};
}
inline void from_json(const nlohmann::json& j, GroundTruthRow& r) {
  j.at("item").get_to(r.item);
  j.at("category").get_to(r.category);
  j.at("planted_rank").get_to(r.planted_rank);
  j.at("planted_frequency").get_to(r.planted_frequency);
  r.filler_count = j.value("filler_count", std::uint64_t{0});
}

}  // namespace popdrop::model
