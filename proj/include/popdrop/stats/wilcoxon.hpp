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
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "popdrop/error.hpp"
#include "popdrop/stats/rank.hpp"
#include "popdrop/stats/result.hpp"
#include "popdrop/stats/special.hpp"

namespace popdrop::stats {

struct WilcoxonResult {
  // statistic = W+, the rank sum of positive differences.
  TestResult test;
  // |{i : x_i > y_i}| / n over all pairs, zero differences included.
  double fraction_greater = 0.0;
  // W+ / (m (m + 1) / 2) over the m nonzero differences; in [0, 1].
  double normalized_rank_statistic = 0.0;
  std::size_t zero_differences = 0;
  bool exact = false;
};

// Largest nonzero-difference count that uses the exact null distribution.
inline constexpr std::size_t kWilcoxonExactMax = 20;

namespace detail {

// Counts of the doubled signed-rank sum over all 2^m sign patterns. Doubling
// turns mid-ranks into integers so the distribution is tabulated exactly.
inline std::vector<std::uint64_t> doubled_rank_sum_counts(std::span<const std::uint64_t> doubled_ranks) {
  std::uint64_t total = 0;
  for (auto r : doubled_ranks) total += r;
  std::vector<std::uint64_t> counts(total + 1, 0);
  counts[0] = 1;
  std::uint64_t reach = 0;
  for (auto r : doubled_ranks) {
    for (std::uint64_t s = reach + 1; s-- > 0;) {
      if (counts[s] != 0) counts[s + r] += counts[s];
    }
    reach += r;
  }
  return counts;
}

}  // namespace detail

// Paired Wilcoxon signed-rank test of x against y. Zero differences are
// dropped before ranking; tied |differences| get mid-ranks. With at most 20
// nonzero differences the p-value comes from the exact permutation
// distribution, otherwise from the normal approximation with tie-corrected
// variance (no continuity correction).
inline WilcoxonResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y,
                                           Alternative alternative = Alternative::two_sided) {
  require(x.size() == y.size(), ErrorCode::invalid_argument,
          "wilcoxon: samples differ in length (" + std::to_string(x.size()) + " vs " +
              std::to_string(y.size()) + ")");
  require(!x.empty(), ErrorCode::invalid_argument, "wilcoxon: empty sample");

  WilcoxonResult out;
  std::vector<double> diffs;
  diffs.reserve(x.size());
  std::size_t greater = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    if (x[i] > y[i]) ++greater;
    if (d == 0.0) {
      ++out.zero_differences;
    } else {
      diffs.push_back(d);
    }
  }
  out.fraction_greater = static_cast<double>(greater) / static_cast<double>(x.size());
  if (diffs.empty()) fail(ErrorCode::degenerate_pairs, "wilcoxon: all differences are zero");

  const std::size_t m = diffs.size();
  std::vector<double> magnitudes(m);
  for (std::size_t i = 0; i < m; ++i) magnitudes[i] = std::fabs(diffs[i]);
  const std::vector<double> ranks = mid_ranks(magnitudes);

  double w_plus = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    if (diffs[i] > 0.0) w_plus += ranks[i];

  const double md = static_cast<double>(m);
  const double max_sum = md * (md + 1.0) / 2.0;

  out.test.statistic = w_plus;
  out.test.n = x.size();
  out.test.alternative = alternative;
  out.normalized_rank_statistic = w_plus / max_sum;

  if (m <= kWilcoxonExactMax) {
    std::vector<std::uint64_t> doubled(m);
    for (std::size_t i = 0; i < m; ++i) doubled[i] = static_cast<std::uint64_t>(std::llround(2.0 * ranks[i]));
    const auto counts = detail::doubled_rank_sum_counts(doubled);
    const auto observed = static_cast<std::uint64_t>(std::llround(2.0 * w_plus));
    std::uint64_t at_least = 0;
    std::uint64_t at_most = 0;
    for (std::uint64_t s = 0; s < counts.size(); ++s) {
      if (s >= observed) at_least += counts[s];
      if (s <= observed) at_most += counts[s];
    }
    const double patterns = std::ldexp(1.0, static_cast<int>(m));
    const double p_upper = static_cast<double>(at_least) / patterns;
    const double p_lower = static_cast<double>(at_most) / patterns;
    switch (alternative) {
      case Alternative::greater: out.test.p_value = p_upper; break;
      case Alternative::less: out.test.p_value = p_lower; break;
      case Alternative::two_sided: out.test.p_value = std::min(1.0, 2.0 * std::min(p_upper, p_lower)); break;
    }
    out.exact = true;
    out.test.method = "wilcoxon_signed_rank_exact";
    return out;
  }

  double tie_term = 0.0;
  for (std::size_t t : tie_group_sizes(magnitudes)) {
    const double td = static_cast<double>(t);
    tie_term += td * td * td - td;
  }
  const double mu = max_sum / 2.0;
  const double var = md * (md + 1.0) * (2.0 * md + 1.0) / 24.0 - tie_term / 48.0;
  const double z = (w_plus - mu) / std::sqrt(var);
  switch (alternative) {
    case Alternative::greater: out.test.p_value = normal_sf(z); break;
    case Alternative::less: out.test.p_value = normal_cdf(z); break;
    case Alternative::two_sided: out.test.p_value = std::min(1.0, 2.0 * normal_sf(std::fabs(z))); break;
  }
  out.test.method = "wilcoxon_signed_rank_normal";
  return out;
}

}  // namespace popdrop::stats
