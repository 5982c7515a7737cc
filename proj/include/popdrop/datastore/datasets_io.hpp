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

// Typicality and priming dataset files.
//   typicality: category,item,rank[,frequency]
//   priming:    prime_x,prime_y,target,group

#pragma once

#include <map>
#include <string>

#include "popdrop/datastore/binary.hpp"
#include "popdrop/datastore/csv.hpp"
#include "popdrop/datastore/fingerprint.hpp"
#include "popdrop/experiments/datasets.hpp"

namespace popdrop::datastore {

inline constexpr const char* kTypicalitySchema = "popdrop.typicality/1";
inline constexpr const char* kPrimingSchema = "popdrop.priming/1";

namespace detail {

inline std::string at_line(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line) + ": ";
}

inline void check_width(const CsvRow& row, const CsvHeader& h, const std::string& source) {
  require(row.fields.size() == h.width(), ErrorCode::parse_error,
          at_line(source, row.line) + "expected " + std::to_string(h.width()) + " fields, found " +
              std::to_string(row.fields.size()));
}

}  // namespace detail

inline experiments::TypicalityDataset parse_typicality(std::string_view text, const std::string& source = "<typicality>") {
  const auto rows = parse_csv(text, source);
  require(!rows.empty(), ErrorCode::parse_error, source + ": empty file (a header row is required)");
  const CsvHeader h(rows[0], {"category", "item", "rank"}, {"frequency"}, source);
  const std::size_t ci = *h.index("category");
  const std::size_t ii = *h.index("item");
  const std::size_t ri = *h.index("rank");
  const auto fi = h.index("frequency");

  experiments::TypicalityDataset d;
  std::map<std::string, std::size_t> category_index;
  std::map<std::pair<std::string, std::string>, std::size_t> first_line;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    detail::check_width(row, h, source);
    const std::string where = detail::at_line(source, row.line);
    const std::string& cat = row.fields[ci];
    const std::string& item = row.fields[ii];
    require(!cat.empty() && !item.empty(), ErrorCode::parse_error, where + "empty category or item");
    auto [it, fresh] = first_line.emplace(std::make_pair(cat, item), row.line);
    require(fresh, ErrorCode::parse_error,
            where + "duplicate item " + cat + "/" + item + " (first seen on line " + std::to_string(it->second) + ")");
    const auto rank = parse_number(row.fields[ri]);
    require(rank && *rank >= 1.0, ErrorCode::parse_error, where + "malformed rank '" + row.fields[ri] + "'");
    experiments::TypicalityItem entry{item, *rank, std::nullopt};
    if (fi) {
      const auto f = parse_number(row.fields[*fi]);
      require(f && *f >= 0.0, ErrorCode::parse_error, where + "malformed frequency '" + row.fields[*fi] + "'");
      entry.frequency = *f;
    }
    auto [pos, added] = category_index.emplace(cat, d.categories.size());
    if (added) d.categories.push_back({cat, {}});
    d.categories[pos->second].items.push_back(std::move(entry));
  }
  try {
    experiments::validate(d);
  } catch (const Error& e) {
    fail(ErrorCode::parse_error, source + ": " + e.what());
  }
  return d;
}

inline std::string serialize_typicality(const experiments::TypicalityDataset& d) {
  const bool freq = d.has_frequencies();
  std::string out = freq ? csv_line({"category", "item", "rank", "frequency"}) : csv_line({"category", "item", "rank"});
  for (const auto& c : d.categories)
    for (const auto& it : c.items) {
      std::vector<std::string> f{c.name, it.item, format_number(it.rank)};
      if (freq) f.push_back(format_number(*it.frequency));
      out += csv_line(f);
    }
  return out;
}

inline DatasetFingerprint fingerprint(const experiments::TypicalityDataset& d) {
  return fingerprint_of(serialize_typicality(d) + "\n" + d.prompt_template, d.item_count(), kTypicalitySchema);
}

inline experiments::TypicalityDataset load_typicality(const std::string& path) {
  return parse_typicality(read_text_file(path), path);
}

inline void save_typicality(const std::string& path, const experiments::TypicalityDataset& d) {
  write_file(path, serialize_typicality(d));
}

inline experiments::PrimingDataset parse_priming(std::string_view text, const std::string& source = "<priming>") {
  const auto rows = parse_csv(text, source);
  require(!rows.empty(), ErrorCode::parse_error, source + ": empty file (a header row is required)");
  const CsvHeader h(rows[0], {"prime_x", "prime_y", "target", "group"}, {}, source);
  const std::size_t xi = *h.index("prime_x");
  const std::size_t yi = *h.index("prime_y");
  const std::size_t ti = *h.index("target");
  const std::size_t gi = *h.index("group");
  experiments::PrimingDataset d;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    detail::check_width(row, h, source);
    const std::string where = detail::at_line(source, row.line);
    for (std::size_t k = 0; k < row.fields.size(); ++k)
      require(!row.fields[k].empty(), ErrorCode::parse_error, where + "empty field in column " + std::to_string(k + 1));
    const std::string& g = row.fields[gi];
    require(g == "A" || g == "B", ErrorCode::parse_error, where + "group must be A or B, got '" + g + "'");
    require(row.fields[xi] != row.fields[yi], ErrorCode::parse_error, where + "prime_x equals prime_y");
    d.records.push_back({row.fields[xi], row.fields[yi], row.fields[ti], g[0]});
  }
  try {
    experiments::validate(d);
  } catch (const Error& e) {
    fail(ErrorCode::parse_error, source + ": " + e.what());
  }
  return d;
}

inline std::string serialize_priming(const experiments::PrimingDataset& d) {
  std::string out = csv_line({"prime_x", "prime_y", "target", "group"});
  for (const auto& r : d.records) out += csv_line({r.prime_x, r.prime_y, r.target, std::string(1, r.group)});
  return out;
}

inline DatasetFingerprint fingerprint(const experiments::PrimingDataset& d) {
  return fingerprint_of(serialize_priming(d), d.records.size(), kPrimingSchema);
}

inline experiments::PrimingDataset load_priming(const std::string& path) {
  return parse_priming(read_text_file(path), path);
}

inline void save_priming(const std::string& path, const experiments::PrimingDataset& d) {
  write_file(path, serialize_priming(d));
}

}  // namespace popdrop::datastore
