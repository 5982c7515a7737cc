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
#include <span>
#include <vector>

#include "popdrop/error.hpp"
#include "popdrop/stats/result.hpp"
#include "popdrop/stats/special.hpp"

namespace popdrop::stats {

// Two-sample Kolmogorov-Smirnov distance sup_x |F_a(x) - F_b(x)|, evaluated
// at every sample point after both ECDFs have absorbed all ties at x.
inline double ks_statistic(std::span<const double> a, std::span<const double> b) {
  require(!a.empty() && !b.empty(), ErrorCode::invalid_argument, "ks: empty sample");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < sa.size() && j < sb.size()) {
    const double x = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] == x) ++i;
    while (j < sb.size() && sb[j] == x) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

// Asymptotic p-value with effective size n1 n2 / (n1 + n2) and the
// small-sample correction lambda = (sqrt(ne) + 0.12 + 0.11 / sqrt(ne)) D.
inline double ks_p_value(double d, std::size_t n1, std::size_t n2) {
  const double ne = static_cast<double>(n1) * static_cast<double>(n2) /
                    static_cast<double>(n1 + n2);
  const double root = std::sqrt(ne);
  return kolmogorov_sf((root + 0.12 + 0.11 / root) * d);
}

inline TestResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  TestResult r;
  r.statistic = ks_statistic(a, b);
  r.p_value = ks_p_value(r.statistic, a.size(), b.size());
  r.n = a.size();
  r.n2 = b.size();
  r.method = "ks_two_sample_asymptotic";
  return r;
}

}  // namespace popdrop::stats
