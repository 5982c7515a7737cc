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

// Structural priming protocol. Every member scores each target sentence
// three ways: unprimed (CT), after the structure-matched prime (PT) and after
// the meaning-matched alternative prime (AT). Per split-half group:
//   Wilcoxon signed-rank PT vs CT (one-sided, greater)
//   ratio mu(AT - CT) / mu(PT - CT) with a record-level bootstrap interval
//   Pearson(AT - CT, PT - CT)
// and across groups the largest absolute difference of each statistic.
// Cells are (member, record) pairs, visited in a canonical record order so
// that shuffling the dataset changes nothing.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "popdrop/datastore/datasets_io.hpp"
#include "popdrop/experiments/datasets.hpp"
#include "popdrop/experiments/report.hpp"
#include "popdrop/experiments/stimuli.hpp"
#include "popdrop/population/scoring.hpp"
#include "popdrop/stats.hpp"

namespace popdrop::experiments {

enum class PrimingScale { log_probability, probability };

inline const char* to_string(PrimingScale s) {
  return s == PrimingScale::log_probability ? "log_probability" : "probability";
}

struct PrimingOptions {
  double alpha = Defaults::alpha;
  stats::BootstrapOptions bootstrap{};
  double cross_validation_tolerance = Defaults::cross_validation_tolerance;
  std::size_t min_group_records = Defaults::min_group_records;
  PrimingScale scale = PrimingScale::log_probability;
};

// Log-probabilities, members x records, columns in dataset order.
struct TreatmentScores {
  population::ScoreMatrix ct;
  population::ScoreMatrix pt;
  population::ScoreMatrix at;
};

struct PrimingGroupStats {
  char group = 'A';
  std::size_t records = 0;
  std::size_t cells = 0;
  stats::WilcoxonResult wilcoxon;
  double mean_pt_minus_ct = 0.0;
  double mean_at_minus_ct = 0.0;
  bool ratio_undefined = false;
  std::optional<stats::IntervalEstimate> ratio;
  std::optional<stats::TestResult> pearson;
};

struct PrimingAnalysis {
  std::vector<PrimingGroupStats> groups;
  // PT vs CT over every cell of both groups.
  stats::WilcoxonResult overall;
  std::map<std::string, double> cross_validation_delta;
  bool cross_validation_flag = false;
  std::vector<std::string> warnings;

  const PrimingGroupStats& group(char g) const {
    for (const auto& s : groups)
      if (s.group == g) return s;
    fail(ErrorCode::invalid_argument, std::string("no priming group ") + g);
  }
};

namespace detail {

struct RecordSums {
  double at_minus_ct = 0.0;
  double pt_minus_ct = 0.0;
  double pt_abs = 0.0;
};

inline std::optional<double> ratio_of(std::span<const RecordSums> sample) {
  double a = 0.0;
  double p = 0.0;
  double mag = 0.0;
  for (const auto& r : sample) {
    a += r.at_minus_ct;
    p += r.pt_minus_ct;
    mag += r.pt_abs;
  }
  if (!(std::fabs(p) > 1e-9 * mag) || p == 0.0) return std::nullopt;
  return a / p;
}

// One-sided PT > CT test. With no nonzero difference there is no evidence of
// priming: W+ = 0 and p = 1.
inline stats::WilcoxonResult primed_greater(const std::vector<double>& pt, const std::vector<double>& ct,
                                            std::vector<std::string>& warnings, const std::string& label) {
  try {
    return stats::wilcoxon_signed_rank(pt, ct, stats::Alternative::greater);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::degenerate_pairs) throw;
    warnings.push_back(label + ": every PT - CT difference is zero");
    stats::WilcoxonResult w;
    w.test.n = pt.size();
    w.test.alternative = stats::Alternative::greater;
    w.test.method = "wilcoxon signed-rank (no nonzero differences)";
    w.zero_differences = pt.size();
    return w;
  }
}

}  // namespace detail

inline PrimingAnalysis analyze_priming(const PrimingDataset& d, const TreatmentScores& s, const PrimingOptions& opt = {}) {
  validate(d);
  const std::size_t n = d.records.size();
  const std::size_t k = s.ct.members;
  require(s.ct.columns() == n && s.pt.columns() == n && s.at.columns() == n && s.pt.members == k && s.at.members == k,
          ErrorCode::shape_mismatch, "treatment score matrices do not match the priming dataset");
  require(k >= 1, ErrorCode::invalid_argument, "priming analysis needs at least one member");
  PrimingAnalysis out;

  auto value = [&](const population::ScoreMatrix& m, std::size_t member, std::size_t rec) {
    const double v = m.at(member, rec);
    return opt.scale == PrimingScale::probability ? std::exp(v) : v;
  };

  // Canonical record order: by content, then by original position.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ra = d.records[a];
    const auto& rb = d.records[b];
    return std::tie(ra.prime_x, ra.prime_y, ra.target) < std::tie(rb.prime_x, rb.prime_y, rb.target);
  });

  std::vector<double> all_ct, all_pt;
  for (char g : {'A', 'B'}) {
    PrimingGroupStats gs;
    gs.group = g;
    std::vector<double> ct, pt, dpt, dat;
    std::vector<detail::RecordSums> sums;
    for (std::size_t rec : order) {
      if (d.records[rec].group != g) continue;
      ++gs.records;
      detail::RecordSums rs;
      for (std::size_t m = 0; m < k; ++m) {
        const double c = value(s.ct, m, rec);
        const double p = value(s.pt, m, rec);
        const double a = value(s.at, m, rec);
        ct.push_back(c);
        pt.push_back(p);
        dpt.push_back(p - c);
        dat.push_back(a - c);
        rs.pt_minus_ct += p - c;
        rs.at_minus_ct += a - c;
        rs.pt_abs += std::fabs(p - c);
      }
      sums.push_back(rs);
    }
    gs.cells = ct.size();
    all_ct.insert(all_ct.end(), ct.begin(), ct.end());
    all_pt.insert(all_pt.end(), pt.begin(), pt.end());
    const std::string label = std::string("group ") + g;
    if (gs.records < opt.min_group_records)
      out.warnings.push_back(label + " has " + std::to_string(gs.records) + " records, below the recommended " +
                             std::to_string(opt.min_group_records));
    gs.mean_pt_minus_ct = stats::mean(dpt);
    gs.mean_at_minus_ct = stats::mean(dat);
    gs.wilcoxon = detail::primed_greater(pt, ct, out.warnings, label);
    if (!detail::ratio_of(sums)) {
      gs.ratio_undefined = true;
      out.warnings.push_back(label + ": mu(PT - CT) is zero; ratio undefined");
    } else {
      stats::BootstrapOptions b = opt.bootstrap;
      b.seed = hash_words({opt.bootstrap.seed, static_cast<std::uint64_t>(g)});
      try {
        gs.ratio = stats::bootstrap_ci<detail::RecordSums>(detail::ratio_of, sums, b);
      } catch (const Error& e) {
        gs.ratio_undefined = true;
        out.warnings.push_back(label + ": ratio interval undefined (" + e.what() + ")");
      }
    }
    gs.pearson = detail::guarded(out.warnings, label + " difference correlation", [&] { return stats::pearson(dat, dpt); });
    out.groups.push_back(std::move(gs));
  }

  out.overall = detail::primed_greater(all_pt, all_ct, out.warnings, "all records");

  const auto& a = out.groups[0];
  const auto& b = out.groups[1];
  auto delta = [&](const std::string& name, double x, double y) {
    const double dlt = std::fabs(x - y);
    out.cross_validation_delta[name] = dlt;
    if (!(dlt <= opt.cross_validation_tolerance)) out.cross_validation_flag = true;
  };
  delta("fraction_greater", a.wilcoxon.fraction_greater, b.wilcoxon.fraction_greater);
  delta("normalized_rank_statistic", a.wilcoxon.normalized_rank_statistic, b.wilcoxon.normalized_rank_statistic);
  if (a.ratio && b.ratio) delta("ratio", a.ratio->point, b.ratio->point);
  if (a.pearson && b.pearson) delta("pearson_r", a.pearson->statistic, b.pearson->statistic);
  if (out.cross_validation_flag)
    out.warnings.push_back("split-half statistics differ by more than " +
                           datastore::format_number(opt.cross_validation_tolerance));
  return out;
}

inline AnalysisReport priming_report(const PrimingDataset& d, const PrimingAnalysis& a, const TreatmentScores& s,
                                     const PrimingOptions& opt) {
  AnalysisReport rep;
  rep.experiment = "priming";
  rep.datasets["priming"] = to_json(datastore::fingerprint(d));
  rep.config["alpha"] = opt.alpha;
  rep.config["scale"] = to_string(opt.scale);
  rep.config["bootstrap"] = {{"resamples", opt.bootstrap.resamples},
                             {"seed", opt.bootstrap.seed},
                             {"level", opt.bootstrap.level},
                             {"unit", "record (all members of a record resampled together)"}};
  rep.config["cross_validation_tolerance"] = opt.cross_validation_tolerance;
  rep.config["min_group_records"] = opt.min_group_records;
  rep.config["pairing"] = "cells are (member, record); CT, PT, AT share member and record";
  rep.warnings = a.warnings;
  Json groups = Json::array();
  PlotTable table{"priming_groups.csv", "priming_table", "per-group priming statistics",
                  {"group", "records", "cells", "fraction_greater", "normalized_rank_statistic", "wilcoxon_p", "ratio",
                   "ratio_lo", "ratio_hi", "pearson_r", "pearson_p"}, {}};
  for (const auto& g : a.groups) {
    Json j = {{"group", std::string(1, g.group)},
              {"records", g.records},
              {"cells", g.cells},
              {"wilcoxon_pt_vs_ct", to_json(g.wilcoxon)},
              {"mean_pt_minus_ct", number(g.mean_pt_minus_ct)},
              {"mean_at_minus_ct", number(g.mean_at_minus_ct)},
              {"ratio", g.ratio ? to_json(*g.ratio) : Json(nullptr)},
              {"ratio_undefined", g.ratio_undefined},
              {"difference_pearson", to_json(g.pearson)}};
    groups.push_back(j);
    table.add({std::string(1, g.group), cell(g.records), cell(g.cells), cell(g.wilcoxon.fraction_greater),
               cell(g.wilcoxon.normalized_rank_statistic), cell(g.wilcoxon.test.p_value),
               g.ratio ? cell(g.ratio->point) : "", g.ratio ? cell(g.ratio->lo) : "", g.ratio ? cell(g.ratio->hi) : "",
               g.pearson ? cell(g.pearson->statistic) : "", g.pearson ? cell(g.pearson->p_value) : ""});
  }
  rep.results["groups"] = groups;
  rep.results["overall_wilcoxon_pt_vs_ct"] = to_json(a.overall);
  Json cv = Json::object();
  for (const auto& [name, v] : a.cross_validation_delta) cv[name] = number(v);
  rep.results["cross_validation"] = {{"delta", cv}, {"flagged", a.cross_validation_flag}};

  PlotTable diffs{"priming_differences.csv", "priming_scatter", "per-cell treatment differences",
                  {"group", "record", "member", "pt_minus_ct", "at_minus_ct"}, {}};
  for (std::size_t r = 0; r < d.records.size(); ++r)
    for (std::size_t m = 0; m < s.ct.members; ++m) {
      double c = s.ct.at(m, r), p = s.pt.at(m, r), t = s.at.at(m, r);
      if (opt.scale == PrimingScale::probability) {
        c = std::exp(c);
        p = std::exp(p);
        t = std::exp(t);
      }
      diffs.add({std::string(1, d.records[r].group), cell(r), cell(m), cell(p - c), cell(t - c)});
    }
  rep.plots = {table, diffs};
  return rep;
}

inline TreatmentScores compute_treatment_scores(const population::MaskSet& masks, const model::ToyLM& lm,
                                                const PrimingDataset& d, unsigned threads = 1) {
  validate(d);
  using population::ScoreKind;
  return {population::score_population(masks, lm, priming_stimuli(lm, d, Treatment::CT), ScoreKind::sentence_logprob, threads),
          population::score_population(masks, lm, priming_stimuli(lm, d, Treatment::PT), ScoreKind::sentence_logprob, threads),
          population::score_population(masks, lm, priming_stimuli(lm, d, Treatment::AT), ScoreKind::sentence_logprob, threads)};
}

struct PrimingRun {
  TreatmentScores scores;
  PrimingAnalysis analysis;
  AnalysisReport report;
};

inline PrimingRun run_priming(const population::MaskSet& masks, const model::ToyLM& lm, const PrimingDataset& d,
                              const PrimingOptions& opt = {}, unsigned threads = 1) {
  PrimingRun run;
  run.scores = compute_treatment_scores(masks, lm, d, threads);
  run.analysis = analyze_priming(d, run.scores, opt);
  run.report = priming_report(d, run.analysis, run.scores, opt);
  run.report.config["population"] = population_echo(masks.config, masks.model_fingerprint);
  run.report.config["model_mode"] = model::to_string(lm.config.mode);
  return run;
}

}  // namespace popdrop::experiments
