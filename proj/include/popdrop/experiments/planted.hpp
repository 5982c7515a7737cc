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

// The bundled planted setup: a synthetic corpus whose category/item
// frequencies encode typicality for four frequent categories, and whose four
// rare categories carry typicality ranks unrelated to corpus frequency. Also
// the model shape and training schedule used for it.

#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "popdrop/datastore/model_io.hpp"
#include "popdrop/experiments/datasets.hpp"
#include "popdrop/model/corpus.hpp"
#include "popdrop/model/train.hpp"

namespace popdrop::experiments {

struct PlantedSetup {
  model::SyntheticCorpusSpec corpus;
  model::ToyLMConfig model;  // vocab_size is filled in from the corpus
  model::TrainSchedule schedule;
  // Categories whose mean planted count exceeds this are the frequent ones.
  double frequency_threshold = 30;
};

inline PlantedSetup builtin_planted_setup() {
  PlantedSetup s;
  s.corpus.seed = 3;
  auto category = [](std::string name, std::vector<std::pair<std::string, std::uint64_t>> items,
                     std::vector<std::size_t> ranks = {}) {
    model::PlantedCategory c{std::move(name), {}, std::move(ranks)};
    for (auto& [item, count] : items) c.items.push_back({item, count, 60});
    return c;
  };
  s.corpus.categories = {
      category("bird", {{"robin", 320}, {"sparrow", 270}, {"bluejay", 220}, {"canary", 170}, {"owl", 120}, {"penguin", 70}}),
      category("fruit", {{"apple", 260}, {"orange", 220}, {"banana", 180}, {"cherry", 140}, {"plum", 100}, {"olive", 60}}),
      category("vehicle", {{"car", 200}, {"truck", 170}, {"bus", 140}, {"tractor", 110}, {"sled", 80}, {"elevator", 50}}),
      category("furniture", {{"chair", 150}, {"sofa", 128}, {"table", 106}, {"desk", 84}, {"lamp", 62}, {"rug", 40}}),
      category("weapon", {{"gun", 14}, {"knife", 12}, {"sword", 10}, {"bomb", 8}, {"spear", 6}, {"whip", 4}},
               {4, 2, 6, 1, 5, 3}),
      category("tool", {{"hammer", 13}, {"saw", 11}, {"wrench", 9}, {"drill", 7}, {"chisel", 5}, {"shovel", 3}},
               {3, 5, 1, 6, 2, 4}),
      category("toy", {{"doll", 12}, {"ball", 10}, {"kite", 8}, {"puzzle", 6}, {"yoyo", 4}, {"top", 2}},
               {2, 6, 4, 1, 3, 5}),
      category("sport", {{"football", 11}, {"tennis", 9}, {"hockey", 7}, {"golf", 5}, {"archery", 3}, {"fishing", 1}},
               {3, 4, 1, 6, 5, 2}),
  };
  s.model.mode = model::LMMode::masked;
  s.schedule.steps = 1500;
  s.schedule.batch = 16;
  s.schedule.learning_rate = 3e-3;
  s.schedule.mask_rate = 0.3;
  s.schedule.seed = 1;
  return s;
}

// Typicality dataset implied by a planted corpus: rank from the category's
// typicality ranks, frequency = planted count.
inline TypicalityDataset planted_dataset(const model::SyntheticCorpusSpec& spec) {
  spec.validate();
  TypicalityDataset d;
  d.prompt_template = kDefaultTypicalityTemplate;
  for (const auto& c : spec.categories) {
    TypicalityCategory tc{c.name, {}};
    for (std::size_t i = 0; i < c.items.size(); ++i)
      tc.items.push_back({c.items[i].name, static_cast<double>(c.typicality_rank(i)),
                          static_cast<double>(c.items[i].count)});
    d.categories.push_back(std::move(tc));
  }
  return d;
}

inline std::vector<std::string> frequent_categories(const PlantedSetup& s) {
  std::vector<std::string> out;
  for (const auto& c : s.corpus.categories) {
    double total = 0;
    for (const auto& it : c.items) total += static_cast<double>(it.count);
    if (total / static_cast<double>(c.items.size()) > s.frequency_threshold) out.push_back(c.name);
  }
  return out;
}

inline nlohmann::json schedule_to_json(const model::TrainSchedule& t) {
  return {{"steps", t.steps},           {"batch", t.batch},       {"learning_rate", t.learning_rate},
          {"seed", t.seed},             {"mask_rate", t.mask_rate}, {"grad_clip", t.grad_clip},
          {"beta1", t.beta1},           {"beta2", t.beta2},       {"adam_eps", t.adam_eps},
          {"warmup_fraction", t.warmup_fraction}};
}

inline model::TrainSchedule schedule_from_json(const nlohmann::json& j) {
  model::TrainSchedule t;
  t.steps = j.value("steps", t.steps);
  t.batch = j.value("batch", t.batch);
  t.learning_rate = j.value("learning_rate", t.learning_rate);
  t.seed = j.value("seed", t.seed);
  t.mask_rate = j.value("mask_rate", t.mask_rate);
  t.grad_clip = j.value("grad_clip", t.grad_clip);
  t.beta1 = j.value("beta1", t.beta1);
  t.beta2 = j.value("beta2", t.beta2);
  t.adam_eps = j.value("adam_eps", t.adam_eps);
  t.warmup_fraction = j.value("warmup_fraction", t.warmup_fraction);
  return t;
}

inline nlohmann::json planted_setup_to_json(const PlantedSetup& s) {
  auto model = datastore::config_to_json(s.model);
  model.erase("vocab_size");
  return {{"schema", "popdrop.planted/1"},
          {"corpus", s.corpus},
          {"model", model},
          {"schedule", schedule_to_json(s.schedule)},
          {"frequency_threshold", s.frequency_threshold}};
}

inline PlantedSetup planted_setup_from_json(const nlohmann::json& j) {
  PlantedSetup s;
  try {
    j.at("corpus").get_to(s.corpus);
    auto m = j.at("model");
    m["vocab_size"] = 8;
    s.model = datastore::config_from_json(m);
    s.model.vocab_size = 0;
    s.schedule = schedule_from_json(j.at("schedule"));
    s.frequency_threshold = j.value("frequency_threshold", s.frequency_threshold);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse_error, std::string("planted setup: ") + e.what());
  }
  s.corpus.validate();
  return s;
}

struct TrainedPlanted {
  model::Corpus corpus;
  model::ToyLM lm;
  model::TrainResult training;
};

inline TrainedPlanted train_planted(const PlantedSetup& s) {
  TrainedPlanted out{model::generate_corpus(s.corpus), {}, {}};
  model::Vocab vocab = model::Vocab::from_texts(out.corpus.sentences);
  model::ToyLMConfig config = s.model;
  config.vocab_size = vocab.size();
  std::vector<std::vector<model::TokenId>> seqs;
  seqs.reserve(out.corpus.sentences.size());
  for (const auto& line : out.corpus.sentences) seqs.push_back(vocab.encode(line));
  out.training = model::train_toy_lm(config, vocab, seqs, s.schedule);
  out.lm = model::ToyLM{config, std::move(vocab), out.training.params};
  return out;
}

}  // namespace popdrop::experiments
