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

#include <string>
#include <vector>

#include "popdrop/experiments/report.hpp"
#include "popdrop/population/scoring.hpp"
#include "popdrop/stats/ks.hpp"

namespace popdrop::experiments {

inline constexpr const char* kKsPooling =
    "population: all members x stimuli flattened (K*N values); base: N unmasked scores";

inline constexpr std::size_t kKsMinStimuli = 20;

struct KsAnalysis {
  stats::TestResult test;
  std::size_t population_values = 0;
  std::size_t base_values = 0;
};

inline KsAnalysis analyze_ks(std::span<const double> base, const population::ScoreMatrix& pop) {
  require(base.size() == pop.columns(), ErrorCode::shape_mismatch, "KS check: base and population cover different stimuli");
  require(base.size() >= kKsMinStimuli, ErrorCode::invalid_argument,
          "KS check needs >= " + std::to_string(kKsMinStimuli) + " stimuli, got " + std::to_string(base.size()));
  return {stats::ks_two_sample(pop.values, base), pop.values.size(), base.size()};
}

inline AnalysisReport ks_report(const KsAnalysis& a) {
  AnalysisReport rep;
  rep.experiment = "ks_check";
  rep.config["pooling"] = kKsPooling;
  rep.results["ks"] = to_json(a.test);
  rep.results["D"] = number(a.test.statistic);
  rep.results["p_value"] = number(a.test.p_value);
  rep.results["population_values"] = a.population_values;
  rep.results["base_values"] = a.base_values;
  return rep;
}

struct KsRun {
  std::vector<double> base;
  population::ScoreMatrix population;
  KsAnalysis analysis;
  AnalysisReport report;
};

inline KsRun run_ks_check(const population::MaskSet& masks, const model::ToyLM& lm,
                          const std::vector<population::Stimulus>& stimuli,
                          population::ScoreKind kind = population::ScoreKind::token_probability, unsigned threads = 1) {
  require(stimuli.size() >= kKsMinStimuli, ErrorCode::invalid_argument,
          "KS check needs >= " + std::to_string(kKsMinStimuli) + " stimuli, got " + std::to_string(stimuli.size()));
  KsRun run;
  run.base = population::base_scores(lm, stimuli, kind);
  run.population = population::score_population(masks, lm, stimuli, kind, threads);
  run.analysis = analyze_ks(run.base, run.population);
  run.report = ks_report(run.analysis);
  run.report.config["population"] = population_echo(masks.config, masks.model_fingerprint);
  return run;
}

}  // namespace popdrop::experiments
