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

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>

#include "popdrop/error.hpp"
#include "popdrop/stats/rank.hpp"
#include "popdrop/stats/result.hpp"
#include "popdrop/stats/special.hpp"

namespace popdrop::stats {

namespace detail {

inline void check_paired(std::span<const double> x, std::span<const double> y, const char* who) {
  require(x.size() == y.size(), ErrorCode::invalid_argument,
          std::string(who) + ": samples differ in length");
  require(x.size() >= 3, ErrorCode::invalid_argument,
          std::string(who) + ": need at least 3 pairs, got " + std::to_string(x.size()));
}

// Two-sided p for a correlation coefficient via t = r sqrt((n-2)/(1-r^2)).
inline double correlation_p_value(double r, std::size_t n) {
  const double df = static_cast<double>(n) - 2.0;
  if (std::fabs(r) >= 1.0) return 0.0;
  const double t = r * std::sqrt(df / (1.0 - r * r));
  return student_t_two_sided_p(t, df);
}

inline double pearson_coefficient(std::span<const double> x, std::span<const double> y, const char* who) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    fail(ErrorCode::constant_input, std::string(who) + ": constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace detail

inline TestResult pearson(std::span<const double> x, std::span<const double> y) {
  detail::check_paired(x, y, "pearson");
  TestResult r;
  r.statistic = detail::pearson_coefficient(x, y, "pearson");
  r.n = x.size();
  r.p_value = detail::correlation_p_value(r.statistic, r.n);
  r.method = "pearson_t";
  return r;
}

// Pearson on mid-ranks.
inline TestResult spearman(std::span<const double> x, std::span<const double> y) {
  detail::check_paired(x, y, "spearman");
  const auto rx = mid_ranks(x);
  const auto ry = mid_ranks(y);
  TestResult r;
  r.statistic = detail::pearson_coefficient(rx, ry, "spearman");
  r.n = x.size();
  r.p_value = detail::correlation_p_value(r.statistic, r.n);
  r.method = "spearman_t";
  return r;
}

}  // namespace popdrop::stats
