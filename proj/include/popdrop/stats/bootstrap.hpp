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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "popdrop/error.hpp"
#include "popdrop/rng.hpp"
#include "popdrop/stats/result.hpp"

namespace popdrop::stats {

struct BootstrapOptions {
  double level = 0.95;
  std::size_t resamples = 10000;
  std::uint64_t seed = 0;
  // Redraws allowed per resample before giving up.
  std::size_t max_redraws = 100;
};

// Linear-interpolation quantile of sorted data (Hyndman-Fan type 7).
inline double sorted_quantile(std::span<const double> sorted, double q) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

// Percentile bootstrap. statistic: std::optional<double>(std::span<const T>);
// std::nullopt (or a non-finite value) marks the statistic undefined on that
// resample, which is then redrawn. Resample b, attempt a draws its indices
// from the counter stream keyed by (seed, b, a), so the interval does not
// depend on evaluation order. If the percentile interval misses the point
// estimate it is widened to include it.
template <typename T, typename Statistic>
IntervalEstimate bootstrap_ci(Statistic&& statistic, std::span<const T> data,
                              const BootstrapOptions& options = {}) {
  require(!data.empty(), ErrorCode::invalid_argument, "bootstrap: empty data");
  require(options.resamples >= 1, ErrorCode::invalid_argument, "bootstrap: resamples must be >= 1");
  require(options.level > 0.0 && options.level < 1.0, ErrorCode::invalid_argument,
          "bootstrap: level outside (0, 1)");

  auto evaluate = [&](std::span<const T> sample) -> std::optional<double> {
    std::optional<double> v = statistic(sample);
    if (v && !std::isfinite(*v)) return std::nullopt;
    return v;
  };

  const std::optional<double> point = evaluate(data);
  if (!point) fail(ErrorCode::undefined_statistic, "bootstrap: statistic undefined on the full data");

  IntervalEstimate out;
  out.point = *point;
  out.level = options.level;
  out.method = "bootstrap_percentile";
  out.resamples = options.resamples;
  out.seed = options.seed;

  std::vector<double> stats;
  stats.reserve(options.resamples);
  std::vector<T> sample(data.size());
  for (std::size_t b = 0; b < options.resamples; ++b) {
    std::optional<double> value;
    for (std::size_t attempt = 0; !value; ++attempt) {
      if (attempt > options.max_redraws)
        fail(ErrorCode::undefined_statistic,
             "bootstrap: statistic undefined on " + std::to_string(attempt) +
                 " consecutive draws of resample " + std::to_string(b));
      if (attempt > 0) ++out.redraws;
      CounterRng rng{options.seed, static_cast<std::uint64_t>(b), static_cast<std::uint64_t>(attempt)};
      for (auto& slot : sample) slot = data[rng.below(data.size())];
      value = evaluate(sample);
    }
    stats.push_back(*value);
  }
  std::sort(stats.begin(), stats.end());
  const double alpha = 1.0 - options.level;
  out.lo = std::min(sorted_quantile(stats, alpha / 2.0), out.point);
  out.hi = std::max(sorted_quantile(stats, 1.0 - alpha / 2.0), out.point);
  return out;
}

template <typename T, typename Statistic>
IntervalEstimate bootstrap_ci(Statistic&& statistic, const std::vector<T>& data,
                              const BootstrapOptions& options = {}) {
  return bootstrap_ci<T>(std::forward<Statistic>(statistic), std::span<const T>(data), options);
}

}  // namespace popdrop::stats
