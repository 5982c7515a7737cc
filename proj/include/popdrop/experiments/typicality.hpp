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

// Typicality protocol. For each category C and item i with typicality rank
// r_i the model is asked for P(C | prompt_i). Reported:
//   (a) within-category Pearson(P, r): base model, every member, and pooled
//       over all (member, item) pairs
//   (b) total correlation across categories, raw and with P standardized
//       within each category
//   (c) Spearman(coefficient of variation over members, r)
//   (d) confounds Pearson(f, r) and Spearman(cv, f) when frequencies exist
//   (e) OLS of typicality strength (-pooled r) on mean category frequency
//   (f) totals restricted to categories above a mean-frequency threshold

#pragma once

#include <cmath>
#include <functional>
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

struct TypicalityOptions {
  double alpha = Defaults::alpha;
  double frequency_threshold = Defaults::frequency_threshold;
  double well_represented_threshold = Defaults::well_represented_threshold;
  // Categories left out of the second frequency regression fit.
  std::vector<std::string> regression_exclude;
};

struct CategoryStats {
  std::string category;
  std::vector<std::size_t> columns;  // item columns in the score matrix
  double mean_frequency = std::nan("");
  std::optional<stats::TestResult> base;
  std::optional<stats::TestResult> pooled;
  std::vector<double> member_r;  // NaN where undefined
  std::vector<double> member_p;
  std::optional<stats::TestResult> uncertainty;
  std::optional<stats::TestResult> confound_frequency_rank;
  std::optional<stats::TestResult> confound_cv_frequency;
  bool above_threshold = false;
  bool well_represented = false;

  bool significant(double alpha) const { return pooled && pooled->statistic < 0.0 && pooled->p_value < alpha; }
};

struct TypicalityAnalysis {
  std::vector<CategoryStats> categories;
  std::vector<std::string> skipped;
  std::vector<std::string> warnings;
  std::vector<double> item_mean;
  std::vector<double> item_sd;
  std::vector<double> item_cv;  // NaN where undefined
  std::optional<stats::TestResult> base_total;
  std::optional<stats::TestResult> population_total;
  std::optional<stats::TestResult> base_total_standardized;
  std::optional<stats::TestResult> population_total_standardized;
  std::optional<stats::TestResult> uncertainty_total;
  std::optional<stats::TestResult> confound_frequency_rank_total;
  std::optional<stats::TestResult> confound_cv_frequency_total;
  std::optional<stats::OlsFit> frequency_regression;
  std::optional<stats::OlsFit> frequency_regression_excluding;
  std::vector<std::string> restricted_categories;
  std::optional<stats::TestResult> base_total_restricted;
  std::optional<stats::TestResult> population_total_restricted;

  const CategoryStats* find(const std::string& name) const {
    for (const auto& c : categories)
      if (c.category == name) return &c;
    return nullptr;
  }
};

namespace detail {

inline std::vector<double> standardize(std::span<const double> v) {
  const double mu = stats::mean(v);
  const double sd = stats::sample_sd(v);
  require(sd > 0.0, ErrorCode::constant_input, "no variation to standardize");
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - mu) / sd;
  return out;
}

}  // namespace detail

// base: one score per item; population: members x items. Columns follow the
// dataset's item order. Scores are probabilities.
inline TypicalityAnalysis analyze_typicality(const TypicalityDataset& d, std::span<const double> base,
                                             const population::ScoreMatrix& pop, const TypicalityOptions& opt = {}) {
  validate(d);
  const std::size_t n_items = d.item_count();
  require(base.size() == n_items && pop.columns() == n_items, ErrorCode::shape_mismatch,
          "typicality scores cover " + std::to_string(pop.columns()) + " items, dataset has " + std::to_string(n_items));
  const std::size_t k = pop.members;
  TypicalityAnalysis out;
  auto& warn = out.warnings;
  const bool freq = d.has_frequencies();

  std::vector<double> ranks;
  std::vector<double> freqs;
  for (const auto& c : d.categories)
    for (const auto& it : c.items) {
      ranks.push_back(it.rank);
      freqs.push_back(it.frequency.value_or(std::nan("")));
    }

  out.item_mean.resize(n_items);
  out.item_sd.resize(n_items, std::nan(""));
  out.item_cv.resize(n_items, std::nan(""));
  for (std::size_t j = 0; j < n_items; ++j) {
    const auto col = pop.column(j);
    out.item_mean[j] = stats::mean(col);
    if (k >= 2) {
      out.item_sd[j] = stats::sample_sd(col);
      if (std::fabs(out.item_mean[j]) >= 1e-12) out.item_cv[j] = stats::coeff_variation(col);
    }
  }
  if (k < 2) warn.push_back("population has one member: uncertainty statistics are undefined");

  // Pooled (P, r) pairs per category, member-major.
  auto pooled_pairs = [&](const std::vector<std::size_t>& cols, std::vector<double>& p, std::vector<double>& r) {
    for (std::size_t m = 0; m < k; ++m)
      for (std::size_t j : cols) {
        p.push_back(pop.at(m, j));
        r.push_back(ranks[j]);
      }
  };

  std::size_t col = 0;
  std::vector<std::size_t> used_columns;
  for (const auto& c : d.categories) {
    CategoryStats cs;
    cs.category = c.name;
    for (std::size_t i = 0; i < c.items.size(); ++i) cs.columns.push_back(col++);
    if (c.items.size() < 3) {
      out.skipped.push_back(c.name);
      warn.push_back("category " + c.name + " skipped: " + std::to_string(c.items.size()) + " items (need >= 3)");
      continue;
    }
    used_columns.insert(used_columns.end(), cs.columns.begin(), cs.columns.end());
    std::vector<double> r;
    std::vector<double> b;
    std::vector<double> cv;
    std::vector<double> f;
    for (std::size_t j : cs.columns) {
      r.push_back(ranks[j]);
      b.push_back(base[j]);
      cv.push_back(out.item_cv[j]);
      f.push_back(freqs[j]);
    }
    const std::string label = "category " + c.name;
    cs.base = detail::guarded(warn, label + " base correlation", [&] { return stats::pearson(b, r); });
    std::vector<double> pp;
    std::vector<double> pr;
    pooled_pairs(cs.columns, pp, pr);
    cs.pooled = detail::guarded(warn, label + " population correlation", [&] { return stats::pearson(pp, pr); });
    for (std::size_t m = 0; m < k; ++m) {
      std::vector<double> row;
      for (std::size_t j : cs.columns) row.push_back(pop.at(m, j));
      try {
        const auto t = stats::pearson(row, r);
        cs.member_r.push_back(t.statistic);
        cs.member_p.push_back(t.p_value);
      } catch (const Error&) {
        cs.member_r.push_back(std::nan(""));
        cs.member_p.push_back(std::nan(""));
      }
    }
    const bool cv_ok = std::all_of(cv.begin(), cv.end(), [](double v) { return std::isfinite(v); });
    if (cv_ok)
      cs.uncertainty = detail::guarded(warn, label + " uncertainty correlation", [&] { return stats::spearman(cv, r); });
    if (freq) {
      cs.mean_frequency = stats::mean(f);
      cs.above_threshold = cs.mean_frequency > opt.frequency_threshold;
      cs.well_represented = cs.mean_frequency >= opt.well_represented_threshold;
      cs.confound_frequency_rank =
          detail::guarded(warn, label + " frequency/rank confound", [&] { return stats::pearson(f, r); });
      if (cv_ok)
        cs.confound_cv_frequency =
            detail::guarded(warn, label + " uncertainty/frequency confound", [&] { return stats::spearman(cv, f); });
    }
    out.categories.push_back(std::move(cs));
  }

  // (b) totals over all analysed items.
  auto totals = [&](const std::vector<const CategoryStats*>& cats, const std::string& label,
                    std::optional<stats::TestResult>& base_raw, std::optional<stats::TestResult>& pop_raw,
                    std::optional<stats::TestResult>* base_std, std::optional<stats::TestResult>* pop_std) {
    std::vector<double> br, bp, pr, pp, bz, pz, pzr;
    for (const auto* cs : cats) {
      std::vector<double> cb;
      for (std::size_t j : cs->columns) {
        br.push_back(ranks[j]);
        bp.push_back(base[j]);
        cb.push_back(base[j]);
      }
      std::vector<double> cp;
      std::vector<double> cr;
      pooled_pairs(cs->columns, cp, cr);
      pp.insert(pp.end(), cp.begin(), cp.end());
      pr.insert(pr.end(), cr.begin(), cr.end());
      if (base_std) {
        try {
          const auto z = detail::standardize(cb);
          bz.insert(bz.end(), z.begin(), z.end());
        } catch (const Error&) {
          bz.insert(bz.end(), cb.size(), 0.0);
        }
        try {
          const auto z = detail::standardize(cp);
          pz.insert(pz.end(), z.begin(), z.end());
        } catch (const Error&) {
          pz.insert(pz.end(), cp.size(), 0.0);
        }
      }
    }
    base_raw = detail::guarded(warn, label + " base total correlation", [&] { return stats::pearson(bp, br); });
    pop_raw = detail::guarded(warn, label + " population total correlation", [&] { return stats::pearson(pp, pr); });
    if (base_std) {
      *base_std = detail::guarded(warn, label + " base standardized total", [&] { return stats::pearson(bz, br); });
      *pop_std = detail::guarded(warn, label + " population standardized total", [&] { return stats::pearson(pz, pr); });
    }
  };
  std::vector<const CategoryStats*> all;
  for (const auto& cs : out.categories) all.push_back(&cs);
  if (!all.empty())
    totals(all, "all categories", out.base_total, out.population_total, &out.base_total_standardized,
           &out.population_total_standardized);

  // (c)/(d) totals.
  std::vector<double> cv_all, r_all, f_all;
  for (std::size_t j : used_columns) {
    cv_all.push_back(out.item_cv[j]);
    r_all.push_back(ranks[j]);
    f_all.push_back(freqs[j]);
  }
  const bool cv_all_ok = !cv_all.empty() && std::all_of(cv_all.begin(), cv_all.end(), [](double v) { return std::isfinite(v); });
  if (cv_all_ok)
    out.uncertainty_total = detail::guarded(warn, "total uncertainty correlation", [&] { return stats::spearman(cv_all, r_all); });
  if (freq && !used_columns.empty()) {
    out.confound_frequency_rank_total =
        detail::guarded(warn, "total frequency/rank confound", [&] { return stats::pearson(f_all, r_all); });
    if (cv_all_ok)
      out.confound_cv_frequency_total =
          detail::guarded(warn, "total uncertainty/frequency confound", [&] { return stats::spearman(cv_all, f_all); });
  }

  // (e) frequency regression.
  if (freq) {
    auto fit = [&](const std::vector<std::string>& exclude) -> std::optional<stats::OlsFit> {
      std::vector<double> x, y;
      for (const auto& cs : out.categories) {
        if (!cs.pooled || std::find(exclude.begin(), exclude.end(), cs.category) != exclude.end()) continue;
        x.push_back(cs.mean_frequency);
        y.push_back(-cs.pooled->statistic);
      }
      if (x.size() < 3) {
        warn.push_back("frequency regression needs >= 3 categories with defined correlations, have " +
                       std::to_string(x.size()));
        return std::nullopt;
      }
      try {
        return stats::ols_regression(x, y);
      } catch (const Error& e) {
        warn.push_back(std::string("frequency regression undefined (") + e.what() + ")");
        return std::nullopt;
      }
    };
    out.frequency_regression = fit({});
    if (!opt.regression_exclude.empty()) out.frequency_regression_excluding = fit(opt.regression_exclude);

    // (f) restricted totals.
    std::vector<const CategoryStats*> restricted;
    for (const auto& cs : out.categories)
      if (cs.above_threshold) {
        restricted.push_back(&cs);
        out.restricted_categories.push_back(cs.category);
      }
    if (restricted.empty())
      warn.push_back("no category has mean frequency above " + datastore::format_number(opt.frequency_threshold) +
                     ": restricted totals undefined");
    else
      totals(restricted, "restricted", out.base_total_restricted, out.population_total_restricted, nullptr, nullptr);
  } else {
    warn.push_back("dataset has no frequencies: confound, regression and restricted statistics skipped");
  }
  return out;
}

inline AnalysisReport typicality_report(const TypicalityDataset& d, const TypicalityAnalysis& a, std::span<const double> base,
                                        const population::ScoreMatrix& pop, const TypicalityOptions& opt) {
  AnalysisReport rep;
  rep.experiment = "typicality";
  rep.datasets["typicality"] = to_json(datastore::fingerprint(d));
  rep.config["alpha"] = opt.alpha;
  rep.config["frequency_threshold"] = opt.frequency_threshold;
  rep.config["well_represented_threshold"] = opt.well_represented_threshold;
  rep.config["regression_exclude"] = opt.regression_exclude;
  rep.config["prompt_template"] = d.prompt_template;
  rep.config["population_correlation"] = "pooled (member, item) pairs; per-member correlations listed separately";
  rep.config["total_correlation"] = "raw probabilities pooled across categories; standardized variant z-scores within category";
  rep.config["regression_response"] = "negated pooled within-category Pearson r";
  rep.warnings = a.warnings;

  Json cats = Json::array();
  for (const auto& cs : a.categories) {
    Json members = Json::array();
    for (std::size_t m = 0; m < cs.member_r.size(); ++m)
      members.push_back({{"member", m}, {"r", number(cs.member_r[m])}, {"p_value", number(cs.member_p[m])}});
    std::vector<double> finite_r;
    for (double r : cs.member_r)
      if (std::isfinite(r)) finite_r.push_back(r);
    Json summary = {{"defined", finite_r.size()}};
    if (!finite_r.empty()) summary["mean_r"] = number(stats::mean(finite_r));
    if (finite_r.size() >= 2) summary["sd_r"] = number(stats::sample_sd(finite_r));
    Json j = {{"category", cs.category},
              {"items", cs.columns.size()},
              {"base", to_json(cs.base)},
              {"population_pooled", to_json(cs.pooled)},
              {"significant", cs.significant(opt.alpha)},
              {"member_summary", summary},
              {"members", members},
              {"uncertainty", to_json(cs.uncertainty)}};
    if (d.has_frequencies()) {
      j["mean_frequency"] = number(cs.mean_frequency);
      j["above_frequency_threshold"] = cs.above_threshold;
      j["well_represented"] = cs.well_represented;
      j["confound_frequency_rank"] = to_json(cs.confound_frequency_rank);
      j["confound_uncertainty_frequency"] = to_json(cs.confound_cv_frequency);
    }
    cats.push_back(j);
  }
  rep.results["categories"] = cats;
  rep.results["skipped_categories"] = a.skipped;
  rep.results["total"] = {{"base", to_json(a.base_total)},
                          {"population", to_json(a.population_total)},
                          {"base_standardized", to_json(a.base_total_standardized)},
                          {"population_standardized", to_json(a.population_total_standardized)}};
  rep.results["uncertainty_total"] = to_json(a.uncertainty_total);
  if (d.has_frequencies()) {
    rep.results["confound"] = {{"frequency_rank", to_json(a.confound_frequency_rank_total)},
                               {"uncertainty_frequency", to_json(a.confound_cv_frequency_total)}};
    rep.results["frequency_regression"] = a.frequency_regression ? to_json(*a.frequency_regression) : Json(nullptr);
    if (!opt.regression_exclude.empty())
      rep.results["frequency_regression_excluding"] =
          a.frequency_regression_excluding ? to_json(*a.frequency_regression_excluding) : Json(nullptr);
    rep.results["restricted_total"] = {{"categories", a.restricted_categories},
                                       {"base", to_json(a.base_total_restricted)},
                                       {"population", to_json(a.population_total_restricted)}};
  }

  // Plot data.
  PlotTable points{"typicality_items.csv", "rank_vs_probability", "per-item probabilities by typicality rank",
                   {"category", "item", "rank", "frequency", "base_probability", "population_mean", "population_sd",
                    "coefficient_of_variation"}, {}};
  PlotTable bands{"typicality_rank_band.csv", "rank_vs_probability",
                  "per-category OLS of pooled population probability on rank with 95% mean-response band",
                  {"category", "rank", "fit", "lo", "hi"}, {}};
  std::size_t col = 0;
  for (const auto& c : d.categories) {
    std::vector<double> rr, pp;
    for (const auto& it : c.items) {
      points.add({c.name, it.item, cell(it.rank), cell(it.frequency), cell(base[col]), cell(a.item_mean[col]),
                  cell(a.item_sd[col]), cell(a.item_cv[col])});
      for (std::size_t m = 0; m < pop.members; ++m) {
        rr.push_back(it.rank);
        pp.push_back(pop.at(m, col));
      }
      ++col;
    }
    if (c.items.size() < 3) continue;
    try {
      const auto fit = stats::ols_regression(rr, pp);
      std::vector<double> grid;
      for (const auto& it : c.items) grid.push_back(it.rank);
      std::sort(grid.begin(), grid.end());
      grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
      for (const auto& b : fit.band(grid)) bands.add({c.name, cell(b.x), cell(b.fit), cell(b.lo), cell(b.hi)});
    } catch (const Error&) {
    }
  }
  PlotTable bars{"typicality_correlations.csv", "category_correlations",
                 "within-category Pearson(P, rank) for base model and pooled population",
                 {"category", "mean_frequency", "base_r", "base_p", "population_r", "population_p", "member_r_mean",
                  "significant"}, {}};
  for (const auto& cs : a.categories) {
    std::vector<double> fr;
    for (double r : cs.member_r)
      if (std::isfinite(r)) fr.push_back(r);
    bars.add({cs.category, cell(cs.mean_frequency), cs.base ? cell(cs.base->statistic) : "",
              cs.base ? cell(cs.base->p_value) : "", cs.pooled ? cell(cs.pooled->statistic) : "",
              cs.pooled ? cell(cs.pooled->p_value) : "", fr.empty() ? "" : cell(stats::mean(fr)),
              cs.significant(opt.alpha) ? "1" : "0"});
  }
  rep.plots = {points, bands, bars};
  if (a.frequency_regression) {
    PlotTable reg{"frequency_regression.csv", "frequency_regression",
                  "typicality strength (-pooled r) against mean category frequency with 95% band",
                  {"kind", "category", "mean_frequency", "strength", "fit", "lo", "hi"}, {}};
    std::vector<double> xs;
    for (const auto& cs : a.categories)
      if (cs.pooled) {
        reg.add({"point", cs.category, cell(cs.mean_frequency), cell(-cs.pooled->statistic), "", "", ""});
        xs.push_back(cs.mean_frequency);
      }
    const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
    for (int s = 0; s <= 20; ++s) {
      const double x = *lo + (*hi - *lo) * s / 20.0;
      const auto b = a.frequency_regression->band_at(x);
      reg.add({"band", "", cell(x), "", cell(b.fit), cell(b.lo), cell(b.hi)});
    }
    rep.plots.push_back(reg);
  }
  return rep;
}

struct TypicalityRun {
  std::vector<double> base;
  population::ScoreMatrix population;
  TypicalityAnalysis analysis;
  AnalysisReport report;
};

inline TypicalityRun run_typicality(const population::MaskSet& masks, const model::ToyLM& lm, const TypicalityDataset& d,
                                    const TypicalityOptions& opt = {}, unsigned threads = 1) {
  const auto stimuli = typicality_stimuli(lm, d);
  TypicalityRun run;
  run.base = population::base_scores(lm, stimuli, population::ScoreKind::token_probability);
  run.population = population::score_population(masks, lm, stimuli, population::ScoreKind::token_probability, threads);
  run.analysis = analyze_typicality(d, run.base, run.population, opt);
  run.report = typicality_report(d, run.analysis, run.base, run.population, opt);
  run.report.config["population"] = population_echo(masks.config, masks.model_fingerprint);
  run.report.config["model_mode"] = model::to_string(lm.config.mode);
  run.report.config["flush"] = "each prompt is scored in a fresh forward pass";
  return run;
}

}  // namespace popdrop::experiments
