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

// Brute-force reference implementations used only by the test suites. They
// deliberately take the slow, obvious route so they stay independent of the
// library code they check.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace popdrop::oracle {

// Mid-ranks by counting: rank = #{less} + (#{equal} + 1) / 2.
inline std::vector<double> ranks_by_counting(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0.0;
    double equal = 0.0;
    for (double w : v) {
      if (w < v[i]) less += 1.0;
      if (w == v[i]) equal += 1.0;
    }
    out[i] = less + (equal + 1.0) / 2.0;
  }
  return out;
}

struct SignedRankEnumeration {
  double w_plus = 0.0;
  double p_greater = 0.0;
  double p_less = 0.0;
  double p_two_sided = 0.0;
};

// Exhaustive enumeration over all 2^m sign patterns of the nonzero
// differences x - y.
inline SignedRankEnumeration wilcoxon_by_enumeration(const std::vector<double>& x,
                                                     const std::vector<double>& y) {
  std::vector<double> diffs;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] - y[i] != 0.0) diffs.push_back(x[i] - y[i]);
  std::vector<double> mags;
  for (double d : diffs) mags.push_back(std::fabs(d));
  const auto ranks = ranks_by_counting(mags);
  SignedRankEnumeration out;
  for (std::size_t i = 0; i < diffs.size(); ++i)
    if (diffs[i] > 0) out.w_plus += ranks[i];
  const std::uint64_t patterns = std::uint64_t{1} << diffs.size();
  std::uint64_t ge = 0;
  std::uint64_t le = 0;
  for (std::uint64_t mask = 0; mask < patterns; ++mask) {
    double w = 0.0;
    for (std::size_t i = 0; i < diffs.size(); ++i)
      if (mask & (std::uint64_t{1} << i)) w += ranks[i];
    if (w >= out.w_plus) ++ge;
    if (w <= out.w_plus) ++le;
  }
  out.p_greater = static_cast<double>(ge) / static_cast<double>(patterns);
  out.p_less = static_cast<double>(le) / static_cast<double>(patterns);
  out.p_two_sided = std::min(1.0, 2.0 * std::min(out.p_greater, out.p_less));
  return out;
}

// KS distance by evaluating both ECDFs (by counting) at every sample point.
inline double ks_by_step_points(const std::vector<double>& a, const std::vector<double>& b) {
  auto ecdf = [](const std::vector<double>& s, double x) {
    double c = 0.0;
    for (double v : s)
      if (v <= x) c += 1.0;
    return c / static_cast<double>(s.size());
  };
  double d = 0.0;
  for (const auto* s : {&a, &b})
    for (double x : *s) d = std::max(d, std::fabs(ecdf(a, x) - ecdf(b, x)));
  return d;
}

// Pearson r through the raw-sums formula.
inline double pearson_raw_sums(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  long double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += static_cast<long double>(x[i]) * x[i];
    syy += static_cast<long double>(y[i]) * y[i];
    sxy += static_cast<long double>(x[i]) * y[i];
  }
  const long double num = n * sxy - sx * sy;
  const long double den = std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
  return static_cast<double>(num / den);
}

// Spearman via 1 - 6 sum d^2 / (n (n^2 - 1)); valid without ties.
inline double spearman_no_ties(const std::vector<double>& x, const std::vector<double>& y) {
  const auto rx = ranks_by_counting(x);
  const auto ry = ranks_by_counting(y);
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
  const double n = static_cast<double>(x.size());
  return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

}  // namespace popdrop::oracle
