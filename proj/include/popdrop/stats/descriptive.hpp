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

#include <cmath>
#include <span>
#include <string>

#include "popdrop/error.hpp"

namespace popdrop::stats {

inline double mean(std::span<const double> values) {
  require(!values.empty(), ErrorCode::invalid_argument, "mean of empty sample");
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

// Sample standard deviation, n - 1 denominator.
inline double sample_sd(std::span<const double> values) {
  require(values.size() >= 2, ErrorCode::invalid_argument, "sample_sd needs at least 2 values");
  const double mu = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - mu) * (v - mu);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

// Coefficient of variation: sample standard deviation over the mean.
inline double coeff_variation(std::span<const double> values) {
  require(values.size() >= 2, ErrorCode::invalid_argument,
          "coeff_variation needs at least 2 values, got " + std::to_string(values.size()));
  const double mu = mean(values);
  require(std::fabs(mu) >= 1e-12, ErrorCode::undefined_statistic,
          "coeff_variation: mean is zero");
  return sample_sd(values) / mu;
}

}  // namespace popdrop::stats
