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

// ScoreRecord wire format: UTF-8 JSON lines, one record per line.
//   {"experiment":..,"logprob":..,"member":..,"stimulus":..,"target":..,"treatment":..}
// member -1 denotes the unmasked base model.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "popdrop/datastore/binary.hpp"
#include "popdrop/datastore/fingerprint.hpp"
#include "popdrop/population/score_matrix.hpp"

namespace popdrop::datastore {

inline constexpr const char* kScoreSchema = "popdrop.scores/1";
inline constexpr std::int64_t kBaseMember = -1;

struct ScoreRecord {
  std::string experiment;
  std::string stimulus;
  std::int64_t member = 0;
  std::string treatment;  // CT | PT | AT | plain
  std::string target;
  double logprob = 0.0;

  bool operator==(const ScoreRecord&) const = default;
};

inline bool valid_treatment(const std::string& t) { return t == "CT" || t == "PT" || t == "AT" || t == "plain"; }

inline nlohmann::json to_json_object(const ScoreRecord& r) {
  return {{"experiment", r.experiment}, {"stimulus", r.stimulus}, {"member", r.member},
          {"treatment", r.treatment},   {"target", r.target},     {"logprob", r.logprob}};
}

inline std::string to_jsonl(const ScoreRecord& r) { return to_json_object(r).dump() + "\n"; }

inline ScoreRecord parse_score_record(std::string_view line, const std::string& where) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse_error, where + "invalid JSON: " + e.what());
  }
  require(j.is_object(), ErrorCode::parse_error, where + "record must be a JSON object");
  static const std::set<std::string> fields{"experiment", "stimulus", "member", "treatment", "target", "logprob"};
  for (const auto& [key, value] : j.items())
    require(fields.count(key) == 1, ErrorCode::parse_error, where + "unknown field '" + key + "'");
  for (const auto& f : fields) require(j.contains(f), ErrorCode::parse_error, where + "missing field '" + f + "'");
  ScoreRecord r;
  auto text = [&](const char* key) {
    require(j.at(key).is_string(), ErrorCode::parse_error, where + "field '" + key + "' must be a string");
    return j.at(key).get<std::string>();
  };
  r.experiment = text("experiment");
  r.stimulus = text("stimulus");
  r.treatment = text("treatment");
  r.target = text("target");
  require(j.at("member").is_number_integer(), ErrorCode::parse_error, where + "field 'member' must be an integer");
  r.member = j.at("member").get<std::int64_t>();
  require(j.at("logprob").is_number(), ErrorCode::parse_error, where + "field 'logprob' must be a number");
  r.logprob = j.at("logprob").get<double>();
  require(!r.experiment.empty() && !r.stimulus.empty(), ErrorCode::parse_error, where + "empty experiment or stimulus");
  require(valid_treatment(r.treatment), ErrorCode::parse_error,
          where + "treatment must be CT, PT, AT or plain, got '" + r.treatment + "'");
  require(r.member >= kBaseMember, ErrorCode::parse_error, where + "member must be >= -1");
  require(std::isfinite(r.logprob) && r.logprob <= 0.0, ErrorCode::parse_error,
          where + "logprob must be finite and <= 0");
  return r;
}

inline std::vector<ScoreRecord> parse_score_records(std::string_view text, const std::string& source = "<scores>") {
  std::vector<ScoreRecord> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") != std::string_view::npos)
      out.push_back(parse_score_record(line, source + ":" + std::to_string(line_no) + ": "));
    start = end + 1;
  }
  return out;
}

inline std::vector<ScoreRecord> load_score_records(const std::string& path) {
  return parse_score_records(read_text_file(path), path);
}

inline void save_score_records(const std::string& path, const std::vector<ScoreRecord>& records) {
  std::string out;
  for (const auto& r : records) out += to_jsonl(r);
  write_file(path, out);
}

// Optional declaration of the expected grid. Unset parts are inferred from
// the records: members 0..max, stimuli and treatments sorted.
struct ScoreGrid {
  std::optional<std::size_t> members;
  std::optional<std::vector<std::string>> stimuli;
  std::optional<std::vector<std::string>> treatments;
};

struct IngestedScores {
  std::string experiment;
  std::vector<std::string> treatments;
  // Log-probabilities keyed by treatment.
  std::map<std::string, population::ScoreMatrix> matrices;
  // Base-model log-probabilities keyed by treatment, when member -1 records exist.
  std::map<std::string, std::vector<double>> base;
  DatasetFingerprint fingerprint;
};

inline IngestedScores ingest_scores(const std::vector<ScoreRecord>& records, const ScoreGrid& grid = {}) {
  require(!records.empty(), ErrorCode::invalid_argument, "no score records to ingest");
  using Key = std::tuple<std::string, std::string, std::int64_t>;  // treatment, stimulus, member
  std::map<Key, const ScoreRecord*> cells;
  std::set<std::string> experiments;
  for (const auto& r : records) {
    experiments.insert(r.experiment);
    auto [it, fresh] = cells.emplace(Key{r.treatment, r.stimulus, r.member}, &r);
    if (!fresh && !(*it->second == r))
      fail(ErrorCode::duplicate_record, "conflicting duplicate score for cell (treatment=" + r.treatment +
                                            ", stimulus=" + r.stimulus + ", member=" + std::to_string(r.member) + ")");
  }
  require(experiments.size() == 1, ErrorCode::invalid_argument,
          "score records mix " + std::to_string(experiments.size()) + " experiment ids");

  IngestedScores out;
  out.experiment = *experiments.begin();
  std::set<std::string> stim_set;
  std::set<std::string> treat_set;
  std::int64_t max_member = -1;
  bool any_base = false;
  for (const auto& [key, rec] : cells) {
    treat_set.insert(std::get<0>(key));
    stim_set.insert(std::get<1>(key));
    max_member = std::max(max_member, std::get<2>(key));
    any_base = any_base || std::get<2>(key) == kBaseMember;
  }
  const std::size_t k = grid.members.value_or(static_cast<std::size_t>(max_member + 1));
  const auto stimuli = grid.stimuli.value_or(std::vector<std::string>(stim_set.begin(), stim_set.end()));
  out.treatments = grid.treatments.value_or(std::vector<std::string>(treat_set.begin(), treat_set.end()));
  require(k >= 1, ErrorCode::incomplete_grid, "score records contain no population members (only base-model rows)");

  std::set<std::string> declared_stimuli(stimuli.begin(), stimuli.end());
  std::set<std::string> declared_treatments(out.treatments.begin(), out.treatments.end());
  for (const auto& [key, rec] : cells) {
    require(declared_treatments.count(std::get<0>(key)) && declared_stimuli.count(std::get<1>(key)) &&
                std::get<2>(key) < static_cast<std::int64_t>(k),
            ErrorCode::invalid_argument,
            "score record outside the declared grid: (treatment=" + std::get<0>(key) + ", stimulus=" + std::get<1>(key) +
                ", member=" + std::to_string(std::get<2>(key)) + ")");
  }

  std::vector<std::string> missing;
  std::size_t missing_total = 0;
  auto note_missing = [&](const std::string& t, const std::string& s, std::int64_t m) {
    if (missing.size() < 10)
      missing.push_back("(treatment=" + t + ", stimulus=" + s + ", member=" + std::to_string(m) + ")");
    ++missing_total;
  };
  for (const auto& t : out.treatments) {
    population::ScoreMatrix mat(k, stimuli);
    std::vector<double> base(any_base ? stimuli.size() : 0);
    for (std::size_t s = 0; s < stimuli.size(); ++s) {
      for (std::int64_t m = any_base ? kBaseMember : 0; m < static_cast<std::int64_t>(k); ++m) {
        auto it = cells.find(Key{t, stimuli[s], m});
        if (it == cells.end()) {
          note_missing(t, stimuli[s], m);
          continue;
        }
        if (m == kBaseMember)
          base[s] = it->second->logprob;
        else
          mat.at(static_cast<std::size_t>(m), s) = it->second->logprob;
      }
    }
    out.matrices.emplace(t, std::move(mat));
    if (any_base) out.base.emplace(t, std::move(base));
  }
  if (missing_total > 0) {
    std::string msg = "incomplete score grid: " + std::to_string(missing_total) + " missing cell(s); first: ";
    for (std::size_t i = 0; i < missing.size(); ++i) msg += (i ? ", " : "") + missing[i];
    fail(ErrorCode::incomplete_grid, msg);
  }

  std::vector<std::string> lines;
  lines.reserve(cells.size());
  for (const auto& [key, rec] : cells) lines.push_back(to_jsonl(*rec));
  std::sort(lines.begin(), lines.end());
  std::string canonical;
  for (const auto& l : lines) canonical += l;
  out.fingerprint = fingerprint_of(canonical, cells.size(), kScoreSchema);
  return out;
}

}  // namespace popdrop::datastore
