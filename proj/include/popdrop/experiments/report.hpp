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

// AnalysisReport: a JSON document plus plot tables. Writing a report emits
// report.json, one CSV per plot table and a figures.json manifest.

#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "popdrop/datastore/binary.hpp"
#include "popdrop/datastore/csv.hpp"
#include "popdrop/datastore/fingerprint.hpp"
#include "popdrop/population/maskset.hpp"
#include "popdrop/stats.hpp"

namespace popdrop::experiments {

using Json = nlohmann::ordered_json;

inline constexpr const char* kReportSchema = "popdrop.report/1";

// Defaults shared by the runners and the command line.
struct Defaults {
  static constexpr std::size_t population_size = 50;
  static constexpr double dropout_rate = 0.1;
  static constexpr double alpha = 0.05;
  static constexpr std::size_t bootstrap_resamples = 10000;
  static constexpr double frequency_threshold = 60000;
  static constexpr double well_represented_threshold = 80000;
  static constexpr double cross_validation_tolerance = 0.02;
  static constexpr std::size_t min_group_records = 200;
};

inline Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json to_json(const stats::TestResult& t) {
  Json j = {{"statistic", number(t.statistic)}, {"p_value", number(t.p_value)}, {"n", t.n}};
  if (t.n2) j["n2"] = t.n2;
  j["alternative"] = stats::to_string(t.alternative);
  j["method"] = t.method;
  return j;
}

inline Json to_json(const std::optional<stats::TestResult>& t) { return t ? to_json(*t) : Json(nullptr); }

inline Json to_json(const stats::IntervalEstimate& e) {
  return {{"point", number(e.point)}, {"lo", number(e.lo)},     {"hi", number(e.hi)},
          {"level", e.level},         {"method", e.method},     {"resamples", e.resamples},
          {"seed", e.seed},           {"redraws", e.redraws}};
}

inline Json to_json(const stats::WilcoxonResult& w) {
  Json j = to_json(w.test);
  j["fraction_greater"] = number(w.fraction_greater);
  j["normalized_rank_statistic"] = number(w.normalized_rank_statistic);
  j["zero_differences"] = w.zero_differences;
  j["exact"] = w.exact;
  return j;
}

inline Json to_json(const stats::OlsFit& f) {
  return {{"slope", number(f.slope)},         {"intercept", number(f.intercept)},
          {"r", number(f.r)},                 {"r_squared", number(f.r_squared)},
          {"slope_se", number(f.slope_se)},   {"slope_p_value", number(f.slope_p_value)},
          {"n", f.n},                         {"level", f.level}};
}

inline Json to_json(const datastore::DatasetFingerprint& f) {
  return {{"content_hash", f.content_hash}, {"record_count", f.record_count}, {"schema", f.schema}};
}

inline Json population_echo(const population::PopulationConfig& c, std::uint64_t model_fingerprint) {
  return {{"population_size", c.size},
          {"dropout_rate", c.dropout_rate},
          {"seed", c.seed},
          {"sites", c.sites.empty() ? Json("all") : Json(c.sites)},
          {"model_fingerprint", datastore::hex64(model_fingerprint)}};
}

namespace detail {

// Runs a statistic, turning degenerate-input errors into a warning.
inline std::optional<stats::TestResult> guarded(std::vector<std::string>& warnings, const std::string& label,
                                                const std::function<stats::TestResult()>& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    warnings.push_back(label + ": undefined (" + e.what() + ")");
    return std::nullopt;
  }
}

}  // namespace detail

struct PlotTable {
  std::string file;    // CSV file name inside the output directory
  std::string figure;  // figure id in the manifest
  std::string description;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row) { rows.push_back(std::move(row)); }
};

inline std::string cell(double v) { return std::isfinite(v) ? datastore::format_number(v) : std::string(); }
inline std::string cell(std::size_t v) { return std::to_string(v); }
inline std::string cell(const std::optional<double>& v) { return v ? cell(*v) : std::string(); }

struct AnalysisReport {
  std::string experiment;
  Json config = Json::object();
  Json datasets = Json::object();
  Json results = Json::object();
  std::vector<std::string> warnings;
  std::vector<PlotTable> plots;

  Json to_json() const {
    return {{"schema", kReportSchema}, {"experiment", experiment}, {"config", config},
            {"datasets", datasets},    {"results", results},       {"warnings", warnings}};
  }

  std::string dump() const { return to_json().dump(2) + "\n"; }
};

inline std::string table_csv(const PlotTable& t) {
  std::string out = datastore::csv_line(t.columns);
  for (const auto& r : t.rows) out += datastore::csv_line(r);
  return out;
}

// Writes report.json, the plot CSVs and figures.json into dir (created if
// needed). Returns the paths written.
inline std::vector<std::string> write_report(const std::filesystem::path& dir, const AnalysisReport& report) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  require(!ec, ErrorCode::io_error, "cannot create output directory '" + dir.string() + "': " + ec.message());
  std::vector<std::string> written;
  const auto put = [&](const std::string& name, const std::string& text) {
    const auto path = (dir / name).string();
    datastore::write_file(path, text);
    written.push_back(path);
  };
  put("report.json", report.dump());
  Json figures = Json::array();
  for (const auto& t : report.plots) {
    put(t.file, table_csv(t));
    figures.push_back({{"figure", t.figure}, {"file", t.file}, {"description", t.description}, {"columns", t.columns}});
  }
  put("figures.json", Json({{"schema", "popdrop.figures/1"}, {"experiment", report.experiment}, {"figures", figures}})
                          .dump(2) +
                          "\n");
  return written;
}

}  // namespace popdrop::experiments
