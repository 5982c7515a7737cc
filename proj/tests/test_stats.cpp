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

#include <gtest/gtest.h>

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "oracles.hpp"
#include "popdrop/rng.hpp"
#include "popdrop/stats.hpp"

namespace popdrop::stats {
namespace {

using V = std::vector<double>;

// ----------------------------------------------------------------- KS

TEST(KsTwoSample, IdenticalSamplesHaveZeroDistance) {
  const V a{3.0, 1.0, 2.0, 2.0};
  const auto r = ks_two_sample(a, a);
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_EQ(r.p_value, 1.0);
}

TEST(KsTwoSample, InterleavedStepPoints) {
  const V a{0, 1, 2, 3};
  const V b{0.5, 1.5, 2.5, 3.5};
  EXPECT_DOUBLE_EQ(oracle::ks_by_step_points(a, b), 0.25);
  EXPECT_DOUBLE_EQ(ks_two_sample(a, b).statistic, 0.25);
}

TEST(KsTwoSample, DisjointSupportsGiveOne) {
  const V a{-3, -2, -1};
  const V b{0, 5, 7, 9};
  EXPECT_EQ(ks_two_sample(a, b).statistic, 1.0);
}

TEST(KsTwoSample, EmptySampleRejected) {
  const V a{1.0};
  const V empty;
  EXPECT_THROW(ks_two_sample(a, empty), Error);
  EXPECT_THROW(ks_two_sample(empty, a), Error);
}

TEST(KsTwoSample, MatchesScipyDistance) {
  // scipy.stats.ks_2samp(a, b).statistic == 0.5
  const V a{0.1, 0.4, 0.7, 1.3, 2.2, 2.5, 3.1};
  const V b{0.5, 0.9, 1.7, 2.8, 3.3, 3.9, 4.4, 5.0};
  EXPECT_DOUBLE_EQ(ks_two_sample(a, b).statistic, 0.5);
}

TEST(KolmogorovSf, AgreesWithThetaRepresentation) {
  // Independent route: K(l) = sqrt(2 pi)/l sum_k exp(-(2k-1)^2 pi^2 / (8 l^2)).
  for (double lambda : {0.4, 0.6, 0.8, 1.0, 1.36, 1.63, 2.0, 3.0}) {
    double cdf = 0.0;
    for (int k = 1; k < 200; ++k) {
      const double t = (2.0 * k - 1.0) * std::numbers::pi;
      cdf += std::exp(-t * t / (8.0 * lambda * lambda));
    }
    cdf *= std::sqrt(2.0 * std::numbers::pi) / lambda;
    EXPECT_NEAR(kolmogorov_sf(lambda), 1.0 - cdf, 1e-9) << "lambda=" << lambda;
  }
  // Textbook critical values.
  EXPECT_NEAR(kolmogorov_sf(1.3581), 0.05, 1e-4);
  EXPECT_NEAR(kolmogorov_sf(1.6276), 0.01, 1e-4);
}

TEST(KsTwoSample, PValueUsesEffectiveSizeCorrection) {
  const V a{0, 1, 2, 3};
  const V b{0.5, 1.5, 2.5, 3.5};
  const double ne = 2.0;
  const double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * 0.25;
  EXPECT_DOUBLE_EQ(ks_two_sample(a, b).p_value, kolmogorov_sf(lambda));
}

// ----------------------------------------------------------- Wilcoxon

TEST(Wilcoxon, AllPositiveSmallSample) {
  const V x{1, 2, 3};
  const V y{0, 0, 0};
  const auto r = wilcoxon_signed_rank(x, y, Alternative::greater);
  EXPECT_EQ(r.test.statistic, 6.0);
  EXPECT_EQ(r.test.p_value, 0.125);
  EXPECT_TRUE(r.exact);
  EXPECT_EQ(r.fraction_greater, 1.0);
  EXPECT_EQ(r.normalized_rank_statistic, 1.0);
}

TEST(Wilcoxon, EqualSamplesAreDegenerate) {
  const V x{1, 2, 3};
  try {
    wilcoxon_signed_rank(x, x, Alternative::greater);
    FAIL() << "expected degenerate pairs";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::degenerate_pairs);
  }
}

TEST(Wilcoxon, SymmetricDifferencesTwoSidedIsOne) {
  const V x{1, -1};
  const V y{0, 0};
  EXPECT_EQ(wilcoxon_signed_rank(x, y).test.p_value, 1.0);
}

TEST(Wilcoxon, ZeroDifferencesDroppedButCountedInFraction) {
  const V x{1, 2, 3, 5};
  const V y{0, 0, 0, 5};
  const auto r = wilcoxon_signed_rank(x, y, Alternative::greater);
  EXPECT_EQ(r.zero_differences, 1u);
  EXPECT_EQ(r.test.p_value, 0.125);
  EXPECT_EQ(r.fraction_greater, 0.75);
}

TEST(Wilcoxon, NormalApproximationMatchesScipy) {
  // scipy.stats.wilcoxon(d, method='approx', correction=False): greater
  // p = 0.3975422749558472, two-sided p = 0.7950845499116944.
  const V d{-0.5, -1.0, 0.1, 0.7, 1.4, 0.4, -0.3, -0.5, 1.0, 1.9, 0.6, -0.9, -0.7, 1.9, 0.5,
            -1.4, 0.2, -0.9, -0.3, -0.2, -0.4, 0.9, 0.2, -0.3, 0.7, 1.1, -1.3, 0.0, -0.7, 0.1};
  const V zero(d.size(), 0.0);
  const auto g = wilcoxon_signed_rank(d, zero, Alternative::greater);
  EXPECT_FALSE(g.exact);
  EXPECT_DOUBLE_EQ(g.test.statistic, 229.5);
  EXPECT_NEAR(g.test.p_value, 0.3975422749558472, 1e-12);
  EXPECT_NEAR(wilcoxon_signed_rank(d, zero).test.p_value, 0.7950845499116944, 1e-12);
}

TEST(Wilcoxon, ExactMatchesEnumerationWithTies) {
  const V x{1.0, 2.0, 2.0, -2.0, 3.0, -1.0, 4.0};
  const V y(x.size(), 0.0);
  const auto want = oracle::wilcoxon_by_enumeration(x, y);
  for (auto alt : {Alternative::greater, Alternative::less, Alternative::two_sided}) {
    const auto got = wilcoxon_signed_rank(x, y, alt);
    EXPECT_EQ(got.test.statistic, want.w_plus);
    const double p = alt == Alternative::greater ? want.p_greater
                     : alt == Alternative::less  ? want.p_less
                                                 : want.p_two_sided;
    EXPECT_EQ(got.test.p_value, p);
  }
}

TEST(Wilcoxon, LengthMismatchRejected) {
  const V x{1, 2};
  const V y{1};
  EXPECT_THROW(wilcoxon_signed_rank(x, y), Error);
}

// ------------------------------------------------------- correlations

TEST(Pearson, PerfectLinear) {
  const V x{1, 2, 3, 4, 5};
  V y;
  for (double v : x) y.push_back(2.0 * v);
  EXPECT_DOUBLE_EQ(pearson(x, y).statistic, 1.0);
  EXPECT_EQ(pearson(x, y).p_value, 0.0);
  V neg;
  for (double v : x) neg.push_back(-v);
  EXPECT_DOUBLE_EQ(pearson(x, neg).statistic, -1.0);
}

TEST(Pearson, HandComputedValue) {
  const V x{1, 2, 3, 4};
  const V y{1, 3, 2, 4};
  // cov = 4, var_x = var_y = 5 (sums of squares) -> r = 0.8
  EXPECT_NEAR(pearson(x, y).statistic, 0.8, 1e-15);
}

TEST(Pearson, MatchesScipyPValue) {
  // scipy.stats.pearsonr -> (0.7917946548886297, 0.06051140336275659)
  const V x{1, 2, 3, 4, 5, 6};
  const V y{2, 1, 4, 3, 7, 5};
  const auto r = pearson(x, y);
  EXPECT_NEAR(r.statistic, 0.7917946548886297, 1e-14);
  EXPECT_NEAR(r.p_value, 0.06051140336275659, 1e-12);
}

TEST(Pearson, ConstantInputRejected) {
  const V x{1, 1, 1, 1};
  const V y{1, 2, 3, 4};
  try {
    pearson(x, y);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::constant_input);
  }
  EXPECT_THROW(pearson(y, x), Error);
}

TEST(Pearson, TooFewPairsRejected) {
  const V x{1, 2};
  EXPECT_THROW(pearson(x, x), Error);
}

TEST(Pearson, PValueMatchesBoostStudentT) {
  CounterRng rng{99};
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 3 + rng.below(40);
    V x(n);
    V y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rng.normal();
      y[i] = 0.3 * x[i] + rng.normal();
    }
    const auto r = pearson(x, y);
    const double df = static_cast<double>(n) - 2.0;
    const double t = r.statistic * std::sqrt(df / (1.0 - r.statistic * r.statistic));
    boost::math::students_t dist(df);
    const double want = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
    EXPECT_NEAR(r.p_value, want, 1e-11 + 1e-9 * want) << "n=" << n;
  }
}

TEST(Spearman, MonotoneIsOne) {
  const V x{1, 2, 3, 4, 5};
  const V y{1, 8, 27, 64, 125};
  EXPECT_DOUBLE_EQ(spearman(x, y).statistic, 1.0);
}

TEST(Spearman, AdjacentSwap) {
  const V x{1, 2, 3, 4};
  const V y{1, 3, 2, 4};
  EXPECT_NEAR(oracle::spearman_no_ties(x, y), 0.8, 1e-15);
  EXPECT_NEAR(spearman(x, y).statistic, 0.8, 1e-15);
}

TEST(Spearman, AllTiedRejected) {
  const V x{2, 2, 2, 2};
  const V y{1, 2, 3, 4};
  EXPECT_THROW(spearman(x, y), Error);
}

TEST(Spearman, TiesMatchScipy) {
  // scipy.stats.spearmanr -> (0.8088235294117647, 0.051329063199674334)
  const V x{1, 2, 2, 4, 5, 6};
  const V y{2, 1, 4, 4, 7, 5};
  const auto r = spearman(x, y);
  EXPECT_NEAR(r.statistic, 0.8088235294117647, 1e-14);
  EXPECT_NEAR(r.p_value, 0.051329063199674334, 1e-12);
}

// ---------------------------------------------------------- descriptive

TEST(CoeffVariation, ConstantIsZero) {
  const V v{2, 2, 2};
  EXPECT_EQ(coeff_variation(v), 0.0);
}

TEST(CoeffVariation, TwoValues) {
  const V v{1, 3};
  // sd = sqrt(((1-2)^2 + (3-2)^2) / 1) = sqrt(2), mean = 2
  EXPECT_NEAR(coeff_variation(v), std::sqrt(2.0) / 2.0, 1e-15);
  EXPECT_NEAR(coeff_variation(v), 0.70711, 1e-5);
}

TEST(CoeffVariation, ScaleInvariant) {
  const V v{0.3, 0.7, 1.9, 0.2};
  V scaled;
  for (double x : v) scaled.push_back(4.5 * x);
  EXPECT_NEAR(coeff_variation(v), coeff_variation(scaled), 1e-14);
}

TEST(CoeffVariation, ZeroMeanRejected) {
  const V v{-1, 1};
  EXPECT_THROW(coeff_variation(v), Error);
  const V one{1};
  EXPECT_THROW(coeff_variation(one), Error);
}

// ---------------------------------------------------------- regression

TEST(Ols, ExactLine) {
  const V x{0, 1, 2, 3, 4};
  V y;
  for (double v : x) y.push_back(3.0 * v + 1.0);
  const auto fit = ols_regression(x, y);
  EXPECT_NEAR(fit.slope, 3.0, 1e-14);
  EXPECT_NEAR(fit.intercept, 1.0, 1e-14);
  EXPECT_NEAR(fit.r_squared, 1.0, 1e-14);
  for (const auto& b : fit.band(x)) EXPECT_NEAR(b.hi - b.lo, 0.0, 1e-12);
}

TEST(Ols, NormalEquationsByHand) {
  const V x{0, 1, 2};
  const V y{0, 1, 1};
  const auto fit = ols_regression(x, y);
  EXPECT_NEAR(fit.slope, 0.5, 1e-15);
  EXPECT_NEAR(fit.intercept, 1.0 / 6.0, 1e-15);
}

TEST(Ols, TranslatingYShiftsInterceptOnly) {
  const V x{0.5, 1.5, 2.0, 4.0, 7.0};
  const V y{1.0, 0.2, 2.2, 3.9, 5.0};
  V shifted;
  for (double v : y) shifted.push_back(v + 10.0);
  const auto a = ols_regression(x, y);
  const auto b = ols_regression(x, shifted);
  EXPECT_NEAR(a.slope, b.slope, 1e-12);
  EXPECT_NEAR(a.intercept + 10.0, b.intercept, 1e-12);
  EXPECT_NEAR(a.r_squared, b.r_squared, 1e-12);
  EXPECT_NEAR(a.slope_p_value, b.slope_p_value, 1e-10);
}

TEST(Ols, BandUsesStudentCriticalValue) {
  const V x{0, 1, 2, 3, 4, 5};
  const V y{0.1, 1.2, 1.9, 3.2, 3.8, 5.3};
  const auto fit = ols_regression(x, y);
  boost::math::students_t dist(4.0);
  EXPECT_NEAR(fit.t_critical, boost::math::quantile(dist, 0.975), 1e-10);
  EXPECT_NEAR(fit.t_critical, 2.7764451051977987, 1e-10);
  // Band is narrowest at the mean of x.
  const auto mid = fit.band_at(fit.x_mean);
  const auto edge = fit.band_at(5.0);
  EXPECT_LT(mid.hi - mid.lo, edge.hi - edge.lo);
  // Slope test agrees with Pearson on the same data.
  EXPECT_NEAR(fit.slope_p_value, pearson(x, y).p_value, 1e-10);
}

TEST(Ols, DegenerateXRejected) {
  const V x{2, 2, 2};
  const V y{1, 2, 3};
  EXPECT_THROW(ols_regression(x, y), Error);
}

TEST(StudentT, QuantileMatchesBoost) {
  for (double df : {1.0, 2.0, 5.0, 30.0, 200.0})
    for (double q : {0.6, 0.9, 0.975, 0.995}) {
      boost::math::students_t dist(df);
      EXPECT_NEAR(student_t_quantile(q, df), boost::math::quantile(dist, q), 1e-9)
          << "df=" << df << " q=" << q;
    }
}

// ----------------------------------------------------------- bootstrap

std::optional<double> mean_of(std::span<const double> s) { return mean(s); }

TEST(Bootstrap, ConstantDataCollapses) {
  const V data(20, 4.0);
  const auto ci = bootstrap_ci(mean_of, data, {.resamples = 1000, .seed = 1});
  EXPECT_EQ(ci.lo, 4.0);
  EXPECT_EQ(ci.point, 4.0);
  EXPECT_EQ(ci.hi, 4.0);
}

TEST(Bootstrap, DeterministicGivenSeed) {
  V data;
  for (int i = 1; i <= 50; ++i) data.push_back(std::sqrt(static_cast<double>(i)));
  const auto a = bootstrap_ci(mean_of, data, {.resamples = 2000, .seed = 17});
  const auto b = bootstrap_ci(mean_of, data, {.resamples = 2000, .seed = 17});
  EXPECT_EQ(a.lo, b.lo);
  EXPECT_EQ(a.hi, b.hi);
  const auto c = bootstrap_ci(mean_of, data, {.resamples = 2000, .seed = 18});
  EXPECT_NE(a.lo, c.lo);
}

TEST(Bootstrap, MeanOfOneToHundred) {
  V small(100);
  std::iota(small.begin(), small.end(), 1.0);
  V large;
  for (int rep = 0; rep < 4; ++rep) large.insert(large.end(), small.begin(), small.end());
  const auto a = bootstrap_ci(mean_of, small, {.resamples = 10000, .seed = 5});
  const auto b = bootstrap_ci(mean_of, large, {.resamples = 10000, .seed = 5});
  EXPECT_TRUE(a.contains(50.5));
  EXPECT_TRUE(b.contains(50.5));
  EXPECT_LE(a.lo, a.point);
  EXPECT_LE(a.point, a.hi);
  // Analytic sd of the mean is 28.87/sqrt(n); the percentile interval should
  // be close to +-1.96 of that and halve when n quadruples.
  EXPECT_NEAR(a.width(), 2 * 1.96 * 28.866 / 10.0, 1.0);
  EXPECT_NEAR(b.width() / a.width(), 0.5, 0.06);
}

TEST(Bootstrap, UndefinedResamplesAreRedrawn) {
  // The statistic is undefined whenever the resample is constant.
  const V data{1.0, 1.0, 1.0, 2.0};
  auto stat = [](std::span<const double> s) -> std::optional<double> {
    for (double v : s)
      if (v != s[0]) return mean(s);
    return std::nullopt;
  };
  const auto ci = bootstrap_ci(stat, data, {.resamples = 2000, .seed = 3});
  // P(all four draws equal) = (3/4)^4 + (1/4)^4 ~= 0.32
  EXPECT_GT(ci.redraws, 400u);
  EXPECT_LT(ci.redraws, 1300u);
  EXPECT_GT(ci.lo, 1.0);
}

// ------------------------------------------------ fuzz and invariances

TEST(StatsFuzz, OracleAgreementSmallSamples) {
  CounterRng rng{20260101};
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(8);
    V x(n);
    V y(n);
    for (std::size_t i = 0; i < n; ++i) {
      // Coarse grid so ties and zero differences occur.
      x[i] = static_cast<double>(rng.below(7)) - 3.0;
      y[i] = static_cast<double>(rng.below(7)) - 3.0;
    }
    bool degenerate = true;
    for (std::size_t i = 0; i < n; ++i) degenerate &= x[i] == y[i];
    if (!degenerate) {
      const auto want = oracle::wilcoxon_by_enumeration(x, y);
      EXPECT_EQ(wilcoxon_signed_rank(x, y, Alternative::greater).test.p_value, want.p_greater);
      EXPECT_EQ(wilcoxon_signed_rank(x, y, Alternative::less).test.p_value, want.p_less);
      EXPECT_EQ(wilcoxon_signed_rank(x, y).test.p_value, want.p_two_sided);
    }
    const std::size_t m = 1 + rng.below(8);
    V b(m);
    for (auto& v : b) v = static_cast<double>(rng.below(9)) - 4.0;
    EXPECT_EQ(ks_two_sample(x, b).statistic, oracle::ks_by_step_points(x, b));
  }
}

TEST(StatsFuzz, PValuesInUnitInterval) {
  CounterRng rng{77};
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t n = 3 + rng.below(30);
    V x(n);
    V y(n);
    const double coupling = rng.uniform() * 2.0 - 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = std::round(rng.normal() * 4.0) / 4.0;
      y[i] = coupling * x[i] + std::round(rng.normal() * 4.0) / 4.0;
    }
    auto in_unit = [](double p) { return p >= 0.0 && p <= 1.0; };
    try {
      EXPECT_TRUE(in_unit(pearson(x, y).p_value));
      EXPECT_TRUE(in_unit(spearman(x, y).p_value));
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::constant_input);
    }
    EXPECT_TRUE(in_unit(ks_two_sample(x, y).p_value));
    try {
      for (auto alt : {Alternative::greater, Alternative::less, Alternative::two_sided})
        EXPECT_TRUE(in_unit(wilcoxon_signed_rank(x, y, alt).test.p_value));
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::degenerate_pairs);
    }
  }
}

TEST(StatsInvariance, AffineMonotoneMaps) {
  CounterRng rng{5150};
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 5 + rng.below(20);
    V x(n);
    V y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rng.normal();
      y[i] = x[i] + rng.normal();
    }
    const double scale = 0.1 + 5.0 * rng.uniform();
    const double shift = rng.normal() * 10.0;
    V x_affine;
    V x_cubed;
    V y_exp;
    for (std::size_t i = 0; i < n; ++i) {
      x_affine.push_back(scale * x[i] + shift);
      x_cubed.push_back(x[i] * x[i] * x[i]);
      y_exp.push_back(std::exp(y[i]));
    }
    EXPECT_NEAR(pearson(x, y).statistic, pearson(x_affine, y).statistic, 1e-12);
    EXPECT_EQ(spearman(x, y).statistic, spearman(x_cubed, y_exp).statistic);
    EXPECT_NEAR(pearson(x, y).statistic, oracle::pearson_raw_sums(x, y), 1e-12);
    EXPECT_EQ(ks_two_sample(x, y).statistic, ks_two_sample(x_cubed, [&] {
                V t;
                for (double v : y) t.push_back(v * v * v);
                return t;
              }()).statistic);
  }
}

}  // namespace
}  // namespace popdrop::stats
