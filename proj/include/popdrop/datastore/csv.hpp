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

// Comma-separated text with RFC 4180 quoting.

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "popdrop/error.hpp"

namespace popdrop::datastore {

struct CsvRow {
  std::size_t line = 0;  // 1-based physical line where the record starts
  std::vector<std::string> fields;
};

inline std::vector<CsvRow> parse_csv(std::string_view text, const std::string& source) {
  std::vector<CsvRow> rows;
  std::size_t line = 1;
  std::size_t i = 0;
  if (text.substr(0, 3) == "\xEF\xBB\xBF") i = 3;
  while (i < text.size()) {
    CsvRow row;
    row.line = line;
    std::string field;
    bool in_quotes = false;
    bool quoted = false;
    bool done = false;
    while (!done) {
      if (i >= text.size()) {
        require(!in_quotes, ErrorCode::parse_error, source + ":" + std::to_string(row.line) + ": unterminated quote");
        row.fields.push_back(std::move(field));
        break;
      }
      const char c = text[i++];
      if (in_quotes) {
        if (c == '"') {
          if (i < text.size() && text[i] == '"') {
            field.push_back('"');
            ++i;
          } else {
            in_quotes = false;
          }
        } else {
          if (c == '\n') ++line;
          field.push_back(c);
        }
        continue;
      }
      switch (c) {
        case '"':
          require(field.empty() && !quoted, ErrorCode::parse_error,
                  source + ":" + std::to_string(line) + ": stray quote inside unquoted field");
          in_quotes = quoted = true;
          break;
        case ',':
          row.fields.push_back(std::move(field));
          field.clear();
          quoted = false;
          break;
        case '\r':
          if (i < text.size() && text[i] == '\n') break;
          [[fallthrough]];
        case '\n':
          ++line;
          row.fields.push_back(std::move(field));
          done = true;
          break;
        default:
          require(!quoted, ErrorCode::parse_error,
                  source + ":" + std::to_string(line) + ": text after closing quote");
          field.push_back(c);
      }
    }
    const bool blank = row.fields.size() == 1 && row.fields[0].empty();
    if (!blank) rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string csv_escape(std::string_view s) {
  const bool needs = s.find_first_of(",\"\r\n") != std::string_view::npos ||
                     (!s.empty() && (s.front() == ' ' || s.back() == ' '));
  if (!needs) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline std::string csv_line(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(',');
    out += csv_escape(fields[i]);
  }
  out.push_back('\n');
  return out;
}

// Integers print without a decimal point; everything else uses the shortest
// representation that parses back to the same double.
inline std::string format_number(double v) {
  if (std::isfinite(v) && v == std::floor(v) && std::fabs(v) < 1e15) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, static_cast<long long>(v));
    return std::string(buf, res.ptr);
  }
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::optional<double> parse_number(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

// Maps header names to column indices; rejects unknown, duplicate and
// missing required columns.
class CsvHeader {
 public:
  CsvHeader(const CsvRow& header, const std::vector<std::string>& required, const std::vector<std::string>& optional,
            const std::string& source) {
    for (std::size_t i = 0; i < header.fields.size(); ++i) {
      std::string name = header.fields[i];
      while (!name.empty() && name.back() == ' ') name.pop_back();
      while (!name.empty() && name.front() == ' ') name.erase(name.begin());
      const bool known = std::find(required.begin(), required.end(), name) != required.end() ||
                         std::find(optional.begin(), optional.end(), name) != optional.end();
      require(known, ErrorCode::parse_error, source + ":" + std::to_string(header.line) + ": unknown column '" + name + "'");
      for (const auto& [n, idx] : columns_)
        require(n != name, ErrorCode::parse_error, source + ":" + std::to_string(header.line) + ": duplicate column '" + name + "'");
      columns_.emplace_back(name, i);
    }
    width_ = header.fields.size();
    for (const auto& r : required)
      require(has(r), ErrorCode::parse_error, source + ":" + std::to_string(header.line) + ": missing column '" + r + "'");
  }

  bool has(const std::string& name) const { return index(name).has_value(); }
  std::optional<std::size_t> index(const std::string& name) const {
    for (const auto& [n, idx] : columns_)
      if (n == name) return idx;
    return std::nullopt;
  }
  std::size_t width() const { return width_; }

 private:
  std::vector<std::pair<std::string, std::size_t>> columns_;
  std::size_t width_ = 0;
};

}  // namespace popdrop::datastore
