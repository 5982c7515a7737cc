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

// The popdrop command line. run() parses argv, dispatches to one subcommand
// and reports failures as a single JSON object on the error stream; the exit
// status is the numeric ErrorCode.

#pragma once

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "popdrop/datastore.hpp"
#include "popdrop/error.hpp"
#include "popdrop/experiments/ks_check.hpp"
#include "popdrop/experiments/planted.hpp"
#include "popdrop/experiments/priming.hpp"
#include "popdrop/experiments/sweep.hpp"
#include "popdrop/experiments/typicality.hpp"
#include "popdrop/population.hpp"

namespace popdrop::cli {

inline constexpr const char* kOutRootEnv = "POPDROP_OUT_ROOT";
inline constexpr const char* kDefaultOutRoot = "popdrop-out";
inline constexpr int kInternalErrorExit = 1;

struct RunConfig {
  std::string subcommand;
  std::string model_path;
  std::string maskset_path;
  population::PopulationConfig population{};
  std::string dataset_path;
  std::string scores_path;
  std::string setup_path;
  std::string out_dir;
  experiments::TypicalityOptions typicality{};
  experiments::PrimingOptions priming{};
  std::string priming_scale = "log";
  std::vector<double> rates{0.1, 0.3, 0.5, 0.8};
  unsigned threads = 1;
};

// Output directory for a subcommand when --out is absent.
inline std::string default_out_dir(const std::string& subcommand) {
  const char* root = std::getenv(kOutRootEnv);
  const std::filesystem::path base = root && *root ? root : kDefaultOutRoot;
  return (base / subcommand).string();
}

namespace detail {

using experiments::Json;

inline std::string hex_fp(std::uint64_t v) { return datastore::hex64(v); }

inline population::MaskSet masks_for(const RunConfig& c, const model::ToyLM& lm) {
  if (!c.maskset_path.empty()) {
    auto set = datastore::load_maskset(c.maskset_path);
    set.require_compatible(lm.config);
    return set;
  }
  return population::build_population(c.population, lm.config);
}

inline void finish(const RunConfig& c, experiments::AnalysisReport report, std::ostream& out,
                   std::vector<std::string> extra = {}) {
  report.config["subcommand"] = c.subcommand;
  report.config["threads_affect_results"] = false;
  auto written = experiments::write_report(c.out_dir, report);
  written.insert(written.begin(), extra.begin(), extra.end());
  out << Json({{"subcommand", c.subcommand}, {"out", c.out_dir}, {"written", written}}).dump() << "\n";
}

inline void tag_model(experiments::AnalysisReport& rep, const model::ToyLM& lm) {
  rep.config["model_fingerprint"] = hex_fp(lm.config.fingerprint());
  rep.config["model_mode"] = model::to_string(lm.config.mode);
}

inline experiments::PrimingOptions priming_options(const RunConfig& c) {
  auto o = c.priming;
  o.alpha = c.typicality.alpha;
  require(c.priming_scale == "log" || c.priming_scale == "prob", ErrorCode::invalid_argument,
          "--scale must be log or prob");
  o.scale = c.priming_scale == "log" ? experiments::PrimingScale::log_probability : experiments::PrimingScale::probability;
  return o;
}

inline std::string wide_matrix_csv(const population::ScoreMatrix& m, const std::vector<double>* base) {
  std::vector<std::string> header{"member"};
  header.insert(header.end(), m.stimuli.begin(), m.stimuli.end());
  std::string text = datastore::csv_line(header);
  auto row = [&](const std::string& label, auto get) {
    std::vector<std::string> r{label};
    for (std::size_t j = 0; j < m.columns(); ++j) r.push_back(datastore::format_number(get(j)));
    text += datastore::csv_line(r);
  };
  if (base) row("-1", [&](std::size_t j) { return (*base)[j]; });
  for (std::size_t i = 0; i < m.members; ++i) row(std::to_string(i), [&](std::size_t j) { return m.at(i, j); });
  return text;
}

}  // namespace detail

inline void cmd_train_toy(const RunConfig& c, std::ostream& out) {
  auto setup = c.setup_path.empty() ? experiments::builtin_planted_setup()
                                    : experiments::planted_setup_from_json(
                                          nlohmann::json::parse(datastore::read_text_file(c.setup_path)));
  const auto trained = experiments::train_planted(setup);
  std::filesystem::create_directories(c.out_dir);
  const std::filesystem::path dir = c.out_dir;
  const auto path = [&](const char* name) { return (dir / name).string(); };
  datastore::save_model(path("model.bin"), trained.lm);
  datastore::save_corpus(path("corpus.jsonl"), path("corpus_truth.jsonl"), trained.corpus);
  datastore::save_typicality(path("typicality.csv"), experiments::planted_dataset(setup.corpus));
  datastore::write_file(path("setup.json"), experiments::planted_setup_to_json(setup).dump(2) + "\n");

  experiments::AnalysisReport rep;
  rep.experiment = "train_toy";
  rep.config["setup"] = experiments::planted_setup_to_json(setup);
  detail::tag_model(rep, trained.lm);
  rep.datasets["corpus"] = experiments::to_json(datastore::fingerprint(trained.corpus));
  rep.results["steps"] = trained.training.losses.size();
  rep.results["head_loss"] = experiments::number(trained.training.head_loss());
  rep.results["tail_loss"] = experiments::number(trained.training.tail_loss());
  rep.results["vocab_size"] = trained.lm.vocab.size();
  experiments::PlotTable curve{"training_loss.csv", "training_loss", "mean per-token loss by step", {"step", "loss"}, {}};
  for (std::size_t i = 0; i < trained.training.losses.size(); ++i)
    curve.rows.push_back({std::to_string(i), experiments::cell(trained.training.losses[i])});
  rep.plots.push_back(std::move(curve));
  detail::finish(c, std::move(rep), out,
                 {path("model.bin"), path("corpus.jsonl"), path("corpus_truth.jsonl"), path("typicality.csv"),
                  path("setup.json")});
}

inline void cmd_build_pop(const RunConfig& c, std::ostream& out) {
  const auto lm = datastore::load_model(c.model_path);
  const auto masks = population::build_population(c.population, lm.config);
  std::filesystem::create_directories(c.out_dir);
  const auto file = (std::filesystem::path(c.out_dir) / "maskset.bin").string();
  datastore::save_maskset(file, masks);
  experiments::AnalysisReport rep;
  rep.experiment = "build_pop";
  rep.config["population"] = experiments::population_echo(masks.config, masks.model_fingerprint);
  detail::tag_model(rep, lm);
  rep.results["members"] = masks.members();
  const auto [zeros, total] = masks.zero_count();
  rep.results["mask_entries"] = total;
  rep.results["zero_fraction"] =
      experiments::number(total == 0 ? 0.0 : static_cast<double>(zeros) / static_cast<double>(total));
  detail::finish(c, std::move(rep), out, {file});
}

inline void cmd_run_typicality(const RunConfig& c, std::ostream& out) {
  const auto lm = datastore::load_model(c.model_path);
  const auto d = datastore::load_typicality(c.dataset_path);
  const auto masks = detail::masks_for(c, lm);
  auto run = experiments::run_typicality(masks, lm, d, c.typicality, c.threads);
  detail::tag_model(run.report, lm);
  detail::finish(c, std::move(run.report), out);
}

inline void cmd_run_priming(const RunConfig& c, std::ostream& out) {
  const auto lm = datastore::load_model(c.model_path);
  const auto d = datastore::load_priming(c.dataset_path);
  const auto masks = detail::masks_for(c, lm);
  auto run = experiments::run_priming(masks, lm, d, detail::priming_options(c), c.threads);
  detail::tag_model(run.report, lm);
  detail::finish(c, std::move(run.report), out);
}

inline void cmd_ks_check(const RunConfig& c, std::ostream& out) {
  const auto lm = datastore::load_model(c.model_path);
  const auto d = datastore::load_typicality(c.dataset_path);
  const auto masks = detail::masks_for(c, lm);
  auto run = experiments::run_ks_check(masks, lm, experiments::typicality_stimuli(lm, d),
                                       population::ScoreKind::token_probability, c.threads);
  run.report.datasets["typicality"] = experiments::to_json(datastore::fingerprint(d));
  run.report.config["score"] = "token probability of the category at the typicality prompt";
  detail::tag_model(run.report, lm);
  detail::finish(c, std::move(run.report), out);
}

inline void cmd_sweep(const RunConfig& c, std::ostream& out) {
  const auto lm = datastore::load_model(c.model_path);
  const auto d = datastore::load_typicality(c.dataset_path);
  experiments::SweepOptions opt;
  opt.rates = c.rates;
  opt.population_size = c.population.size;
  opt.seed = c.population.seed;
  opt.sites = c.population.sites;
  opt.typicality = c.typicality;
  const auto a = experiments::dropout_sweep(lm, d, opt, c.threads);
  auto rep = experiments::sweep_report(d, a, opt, lm.config.fingerprint());
  detail::tag_model(rep, lm);
  detail::finish(c, std::move(rep), out);
}

inline void cmd_ingest(const RunConfig& c, std::ostream& out) {
  const auto records = datastore::load_score_records(c.scores_path);
  require(!records.empty(), ErrorCode::invalid_argument, c.scores_path + ": no score records");
  const std::string experiment = records.front().experiment;
  datastore::ScoreGrid grid;
  experiments::AnalysisReport rep;
  datastore::IngestedScores ing;
  if (experiment == "typicality") {
    const auto d = datastore::load_typicality(c.dataset_path);
    std::vector<std::string> ids;
    for (const auto& cat : d.categories)
      for (const auto& it : cat.items) ids.push_back(experiments::TypicalityDataset::stimulus_id(cat.name, it.item));
    grid.stimuli = ids;
    grid.treatments = std::vector<std::string>{"plain"};
    ing = datastore::ingest_scores(records, grid);
    require(ing.base.count("plain"), ErrorCode::incomplete_grid,
            "typicality scores need base-model rows (member -1) for every stimulus");
    auto prob = ing.matrices.at("plain");
    for (double& v : prob.values) v = std::exp(v);
    std::vector<double> base = ing.base.at("plain");
    for (double& v : base) v = std::exp(v);
    const auto a = experiments::analyze_typicality(d, base, prob, c.typicality);
    rep = experiments::typicality_report(d, a, base, prob, c.typicality);
  } else if (experiment == "priming") {
    const auto d = datastore::load_priming(c.dataset_path);
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < d.records.size(); ++i) ids.push_back(experiments::PrimingDataset::stimulus_id(i));
    grid.stimuli = ids;
    grid.treatments = std::vector<std::string>{"AT", "CT", "PT"};
    ing = datastore::ingest_scores(records, grid);
    const experiments::TreatmentScores s{ing.matrices.at("CT"), ing.matrices.at("PT"), ing.matrices.at("AT")};
    const auto opt = detail::priming_options(c);
    rep = experiments::priming_report(d, experiments::analyze_priming(d, s, opt), s, opt);
  } else {
    fail(ErrorCode::invalid_argument, "score records carry experiment '" + experiment +
                                          "'; ingest analyses 'typicality' or 'priming'");
  }
  rep.datasets["scores"] = experiments::to_json(ing.fingerprint);
  rep.config["score_source"] = "external score records";
  std::filesystem::create_directories(c.out_dir);
  std::vector<std::string> written;
  for (const auto& [t, m] : ing.matrices) {
    const auto file = (std::filesystem::path(c.out_dir) / ("scores_" + t + ".csv")).string();
    const auto b = ing.base.find(t);
    datastore::write_file(file, detail::wide_matrix_csv(m, b == ing.base.end() ? nullptr : &b->second));
    written.push_back(file);
  }
  detail::finish(c, std::move(rep), out, written);
}

namespace detail {

inline std::string diagnostic(const std::string& subcommand, std::string_view code, int exit_code,
                              const std::string& message) {
  return Json({{"error", {{"code", code}, {"exit_code", exit_code}, {"subcommand", subcommand}, {"message", message}}}})
             .dump() +
         "\n";
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  using experiments::Defaults;
  RunConfig c;
  CLI::App app{"popdrop: typicality and priming experiments over dropout model populations", "popdrop"};
  app.require_subcommand(1, 1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  auto add_out = [&](CLI::App* s) {
    s->add_option("--out", c.out_dir,
                  std::string("Output directory (default: $") + kOutRootEnv + "/<subcommand> or " + kDefaultOutRoot +
                      "/<subcommand>)");
  };
  auto add_model = [&](CLI::App* s) {
    s->add_option("--model", c.model_path, "Model file written by train-toy")->required()->check(CLI::ExistingFile);
  };
  auto add_dataset = [&](CLI::App* s, const std::string& what) {
    s->add_option("--dataset", c.dataset_path, what)->required()->check(CLI::ExistingFile);
  };
  auto add_threads = [&](CLI::App* s) {
    s->add_option("--threads", c.threads, "Worker threads for scoring (results do not depend on it)")
        ->capture_default_str()
        ->check(CLI::Range(1u, 256u));
  };
  auto add_pop_params = [&](CLI::App* s) {
    std::vector<CLI::Option*> opts;
    opts.push_back(s->add_option("--population-size", c.population.size, "Population size K")
                       ->capture_default_str()
                       ->check(CLI::PositiveNumber));
    opts.push_back(s->add_option("--dropout-rate", c.population.dropout_rate, "Dropout rate p in [0, 1)")
                       ->capture_default_str());
    opts.push_back(s->add_option("--seed", c.population.seed, "Population seed")->capture_default_str());
    opts.push_back(s->add_option("--sites", c.population.sites, "Dropout site ids to mask (default: all)")
                       ->delimiter(','));
    return opts;
  };
  auto add_maskset_source = [&](CLI::App* s) {
    auto* maskset = s->add_option("--maskset", c.maskset_path, "Mask set file written by build-pop")
                        ->check(CLI::ExistingFile);
    for (auto* o : add_pop_params(s)) maskset->excludes(o);
  };
  auto add_alpha = [&](CLI::App* s) {
    s->add_option("--alpha", c.typicality.alpha, "Significance level")->capture_default_str()->check(
        CLI::Range(0.0, 1.0));
  };
  auto add_typicality = [&](CLI::App* s) {
    add_alpha(s);
    s->add_option("--freq-threshold", c.typicality.frequency_threshold,
                  "Mean item frequency above which a category enters the restricted totals")
        ->capture_default_str();
    s->add_option("--well-represented-threshold", c.typicality.well_represented_threshold,
                  "Mean item frequency at which a category counts as well represented")
        ->capture_default_str();
    s->add_option("--exclude", c.typicality.regression_exclude,
                  "Categories left out of the secondary frequency regression")
        ->delimiter(',');
  };
  auto add_priming = [&](CLI::App* s) {
    add_alpha(s);
    s->add_option("--bootstrap", c.priming.bootstrap.resamples, "Bootstrap resamples")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    s->add_option("--bootstrap-seed", c.priming.bootstrap.seed, "Bootstrap seed")->capture_default_str();
    s->add_option("--scale", c.priming_scale, "Scale of the priming differences: log or prob")
        ->capture_default_str()
        ->check(CLI::IsMember({"log", "prob"}));
  };

  auto* train = app.add_subcommand("train-toy", "Generate the planted corpus and train the toy model");
  train->add_option("--setup", c.setup_path, "Planted setup JSON (default: built-in setup)")->check(CLI::ExistingFile);
  add_out(train);

  auto* build = app.add_subcommand("build-pop", "Build and save a mask set for a model");
  add_model(build);
  add_pop_params(build);
  add_out(build);

  auto* typ = app.add_subcommand("run-typicality", "Typicality experiment on a population");
  add_model(typ);
  add_maskset_source(typ);
  add_dataset(typ, "Typicality CSV");
  add_typicality(typ);
  add_threads(typ);
  add_out(typ);

  auto* prim = app.add_subcommand("run-priming", "Structural priming experiment on a population");
  add_model(prim);
  add_maskset_source(prim);
  add_dataset(prim, "Priming CSV");
  add_priming(prim);
  add_threads(prim);
  add_out(prim);

  auto* ks = app.add_subcommand("ks-check", "Two-sample KS test of population against base scores");
  add_model(ks);
  add_maskset_source(ks);
  add_dataset(ks, "Typicality CSV supplying the stimuli");
  add_threads(ks);
  add_out(ks);

  auto* sweep = app.add_subcommand("sweep", "Typicality significance across dropout rates");
  add_model(sweep);
  add_dataset(sweep, "Typicality CSV");
  sweep->add_option("--rates", c.rates, "Dropout rates; 0 means the base model alone")
      ->delimiter(',')
      ->capture_default_str();
  sweep->add_option("--population-size", c.population.size, "Population size K per rate")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sweep->add_option("--seed", c.population.seed, "Population seed")->capture_default_str();
  sweep->add_option("--sites", c.population.sites, "Dropout site ids to mask (default: all)")->delimiter(',');
  add_typicality(sweep);
  add_threads(sweep);
  add_out(sweep);

  auto* ingest = app.add_subcommand("ingest", "Analyse score records produced by an external scorer");
  ingest->add_option("--scores", c.scores_path, "Score records (JSON lines)")->required()->check(CLI::ExistingFile);
  add_dataset(ingest, "Typicality or priming CSV matching the records' experiment");
  add_typicality(ingest);
  ingest->add_option("--bootstrap", c.priming.bootstrap.resamples, "Bootstrap resamples (priming)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  ingest->add_option("--bootstrap-seed", c.priming.bootstrap.seed, "Bootstrap seed (priming)")->capture_default_str();
  ingest->add_option("--scale", c.priming_scale, "Scale of the priming differences: log or prob")
      ->capture_default_str()
      ->check(CLI::IsMember({"log", "prob"}));
  add_out(ingest);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    const auto subs = app.get_subcommands();
    err << detail::diagnostic(subs.empty() ? "" : subs.front()->get_name(),
                              error_code_name(ErrorCode::invalid_argument), static_cast<int>(ErrorCode::invalid_argument),
                              e.what());
    return static_cast<int>(ErrorCode::invalid_argument);
  }

  c.subcommand = app.get_subcommands().front()->get_name();
  if (c.out_dir.empty()) c.out_dir = default_out_dir(c.subcommand);
  try {
    c.population.validate();
    if (c.subcommand == "train-toy") cmd_train_toy(c, out);
    else if (c.subcommand == "build-pop") cmd_build_pop(c, out);
    else if (c.subcommand == "run-typicality") cmd_run_typicality(c, out);
    else if (c.subcommand == "run-priming") cmd_run_priming(c, out);
    else if (c.subcommand == "ks-check") cmd_ks_check(c, out);
    else if (c.subcommand == "sweep") cmd_sweep(c, out);
    else cmd_ingest(c, out);
  } catch (const Error& e) {
    err << detail::diagnostic(c.subcommand, error_code_name(e.code()), static_cast<int>(e.code()), e.what());
    return static_cast<int>(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    err << detail::diagnostic(c.subcommand, error_code_name(ErrorCode::io_error), static_cast<int>(ErrorCode::io_error),
                              e.what());
    return static_cast<int>(ErrorCode::io_error);
  } catch (const nlohmann::json::exception& e) {
    err << detail::diagnostic(c.subcommand, error_code_name(ErrorCode::parse_error),
                              static_cast<int>(ErrorCode::parse_error), e.what());
    return static_cast<int>(ErrorCode::parse_error);
  } catch (const std::exception& e) {
    err << detail::diagnostic(c.subcommand, "internal_error", kInternalErrorExit, e.what());
    return kInternalErrorExit;
  }
  return 0;
}

}  // namespace popdrop::cli
