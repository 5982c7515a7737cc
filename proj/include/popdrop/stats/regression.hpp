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
#include <string>
#include <vector>

#include "popdrop/error.hpp"
#include "popdrop/stats/result.hpp"
#include "popdrop/stats/special.hpp"

namespace popdrop::stats {

struct BandPoint {
  double x = 0.0;
  double fit = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

struct OlsFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  // Pearson r of the fitted pairs; sign follows the slope.
  double r = 0.0;
  double slope_se = 0.0;
  // Two-sided t test of slope = 0 on n - 2 degrees of freedom.
  double slope_p_value = 1.0;
  std::size_t n = 0;
  double level = 0.95;
  // Pieces of the mean-response band, kept so it can be evaluated anywhere.
  double x_mean = 0.0;
  double sxx = 0.0;
  double residual_sd = 0.0;
  double t_critical = 0.0;

  double predict(double x) const { return intercept + slope * x; }

  // Pointwise confidence band for the mean response at x.
  BandPoint band_at(double x) const {
    const double fit = predict(x);
    const double half = t_critical * residual_sd *
                        std::sqrt(1.0 / static_cast<double>(n) + (x - x_mean) * (x - x_mean) / sxx);
    return {x, fit, fit - half, fit + half};
  }

  std::vector<BandPoint> band(std::span<const double> xs) const {
    std::vector<BandPoint> out;
    out.reserve(xs.size());
    for (double x : xs) out.push_back(band_at(x));
    return out;
  }
};

inline OlsFit ols_regression(std::span<const double> x, std::span<const double> y, double level = 0.95) {
  require(x.size() == y.size(), ErrorCode::invalid_argument, "ols: samples differ in length");
  require(x.size() >= 3, ErrorCode::invalid_argument,
          "ols: need at least 3 points, got " + std::to_string(x.size()));
  require(level > 0.0 && level < 1.0, ErrorCode::invalid_argument, "ols: level outside (0, 1)");
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) fail(ErrorCode::constant_input, "ols: degenerate x (zero variance)");

  OlsFit fit;
  fit.n = x.size();
  fit.level = level;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - fit.predict(x[i]);
    sse += e * e;
  }
  fit.r_squared = syy == 0.0 ? 1.0 : std::clamp(1.0 - sse / syy, 0.0, 1.0);
  fit.r = syy == 0.0 ? 0.0 : std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double df = n - 2.0;
  fit.residual_sd = std::sqrt(sse / df);
  fit.slope_se = fit.residual_sd / std::sqrt(sxx);
  if (fit.slope_se == 0.0) {
    fit.slope_p_value = fit.slope == 0.0 ? 1.0 : 0.0;
  } else {
    fit.slope_p_value = student_t_two_sided_p(fit.slope / fit.slope_se, df);
  }
  fit.x_mean = mx;
  fit.sxx = sxx;
  fit.t_critical = student_t_quantile(0.5 + level / 2.0, df);
  return fit;
}

}  // namespace popdrop::stats
