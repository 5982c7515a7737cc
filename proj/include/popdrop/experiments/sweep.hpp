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

// Dropout-rate sweep: the same typicality analysis repeated over a list of
// rates with a shared mask seed. A category is significant at a rate when its
// pooled population correlation is negative with p < alpha; its persistence
// is the largest swept rate up to which it stays significant at every rate.
// Rate 0 is evaluated as the base model alone.

#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "popdrop/experiments/typicality.hpp"
#include "popdrop/population/maskset.hpp"

namespace popdrop::experiments {

struct SweepOptions {
  std::vector<double> rates{0.1, 0.3, 0.5, 0.8};
  std::size_t population_size = Defaults::population_size;
  std::uint64_t seed = 0;
  std::vector<std::string> sites;
  TypicalityOptions typicality{};
};

struct SweepCell {
  std::optional<stats::TestResult> pooled;
  bool significant = false;
};

struct SweepAnalysis {
  std::vector<double> rates;
  std::vector<std::string> categories;
  std::vector<std::vector<SweepCell>> cells;  // [rate][category]
  std::vector<std::size_t> significant_counts;
  std::vector<std::optional<double>> persistence;  // per category
  std::vector<std::string> warnings;

  std::optional<double> persistence_of(const std::string& category) const {
    for (std::size_t c = 0; c < categories.size(); ++c)
      if (categories[c] == category) return persistence[c];
    fail(ErrorCode::invalid_argument, "unknown category " + category);
  }
};

inline void validate_rates(std::vector<double>& rates) {
  require(!rates.empty(), ErrorCode::invalid_argument, "sweep needs at least one rate");
  for (double r : rates)
    require(r >= 0.0 && r <= 0.9, ErrorCode::invalid_argument,
            "sweep rate " + datastore::format_number(r) + " outside [0, 0.9]");
  std::sort(rates.begin(), rates.end());
  require(std::adjacent_find(rates.begin(), rates.end()) == rates.end(), ErrorCode::invalid_argument,
          "sweep rates must be distinct");
}

inline SweepAnalysis dropout_sweep(const model::ToyLM& lm, const TypicalityDataset& d, SweepOptions opt,
                                   unsigned threads = 1) {
  validate_rates(opt.rates);
  const auto stimuli = typicality_stimuli(lm, d);
  const auto base = population::base_scores(lm, stimuli, population::ScoreKind::token_probability);
  SweepAnalysis out;
  out.rates = opt.rates;
  for (double rate : opt.rates) {
    population::ScoreMatrix pop;
    if (rate == 0.0) {
      pop = population::ScoreMatrix(1, {});
      pop.stimuli.clear();
      for (const auto& s : stimuli) pop.stimuli.push_back(s.id);
      pop.values = base;
    } else {
      population::PopulationConfig pc{opt.population_size, rate, opt.seed, opt.sites};
      const auto masks = population::build_population(pc, lm.config);
      pop = population::score_population(masks, lm, stimuli, population::ScoreKind::token_probability, threads);
    }
    const auto a = analyze_typicality(d, base, pop, opt.typicality);
    if (out.categories.empty())
      for (const auto& cs : a.categories) out.categories.push_back(cs.category);
    std::vector<SweepCell> row;
    std::size_t count = 0;
    for (const auto& cs : a.categories) {
      SweepCell cell{cs.pooled, cs.significant(opt.typicality.alpha)};
      count += cell.significant ? 1 : 0;
      row.push_back(cell);
    }
    out.cells.push_back(std::move(row));
    out.significant_counts.push_back(count);
  }
  for (std::size_t c = 0; c < out.categories.size(); ++c) {
    std::optional<double> last;
    for (std::size_t r = 0; r < out.rates.size() && out.cells[r][c].significant; ++r) last = out.rates[r];
    out.persistence.push_back(last);
  }
  return out;
}

inline AnalysisReport sweep_report(const TypicalityDataset& d, const SweepAnalysis& a, const SweepOptions& opt,
                                   std::uint64_t model_fingerprint) {
  AnalysisReport rep;
  rep.experiment = "dropout_sweep";
  rep.datasets["typicality"] = to_json(datastore::fingerprint(d));
  rep.config["rates"] = a.rates;
  rep.config["population_size"] = opt.population_size;
  rep.config["seed"] = opt.seed;
  rep.config["sites"] = opt.sites.empty() ? Json("all") : Json(opt.sites);
  rep.config["alpha"] = opt.typicality.alpha;
  rep.config["model_fingerprint"] = datastore::hex64(model_fingerprint);
  rep.config["significance"] = "pooled population Pearson(P, rank) < 0 with p < alpha";
  rep.config["rate_zero"] = "base model only";
  rep.warnings = a.warnings;
  Json rates = Json::array();
  PlotTable table{"sweep_significance.csv", "sweep_table", "pooled within-category correlation per dropout rate",
                  {"rate", "category", "r", "p_value", "significant"}, {}};
  for (std::size_t r = 0; r < a.rates.size(); ++r) {
    Json cats = Json::array();
    for (std::size_t c = 0; c < a.categories.size(); ++c) {
      const auto& cell_ = a.cells[r][c];
      cats.push_back({{"category", a.categories[c]}, {"pooled", to_json(cell_.pooled)}, {"significant", cell_.significant}});
      table.add({cell(a.rates[r]), a.categories[c], cell_.pooled ? cell(cell_.pooled->statistic) : "",
                 cell_.pooled ? cell(cell_.pooled->p_value) : "", cell_.significant ? "1" : "0"});
    }
    rates.push_back({{"rate", a.rates[r]}, {"significant_categories", a.significant_counts[r]}, {"categories", cats}});
  }
  PlotTable persist{"sweep_persistence.csv", "sweep_persistence", "largest rate at which each category stays significant",
                    {"category", "persistence_rate"}, {}};
  Json pers = Json::object();
  for (std::size_t c = 0; c < a.categories.size(); ++c) {
    pers[a.categories[c]] = a.persistence[c] ? Json(*a.persistence[c]) : Json(nullptr);
    persist.add({a.categories[c], cell(a.persistence[c])});
  }
  rep.results["rates"] = rates;
  rep.results["persistence"] = pers;
  rep.plots = {table, persist};
  return rep;
}

}  // namespace popdrop::experiments
