// Copyright 2026 The molddpm Authors
// SPDX-License-Identifier: Apache-2.0

#include "molddpm/error.hpp"
#include "molddpm/schedule.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace molddpm {
namespace {

// Computed with 50-digit arithmetic (mpmath) for the linear 1e-4..0.02 schedule.
constexpr double kAlphaBar1000 = 0.000040358297653756833148;
constexpr double kAlphaBar50 = 0.60295159732971490345;

TEST(Schedule, TwoStepExample) {
  const NoiseSchedule s({0.1, 0.2});
  EXPECT_DOUBLE_EQ(s.alpha(1), 0.9);
  EXPECT_DOUBLE_EQ(s.alpha(2), 0.8);
  EXPECT_DOUBLE_EQ(s.alpha_bar(1), 0.9);
  EXPECT_NEAR(s.alpha_bar(2), 0.72, 1e-15);
}

TEST(Schedule, LinearEndpoints) {
  const NoiseSchedule s = linear_schedule(1000, 1e-4, 0.02);
  EXPECT_EQ(s.steps(), 1000);
  EXPECT_DOUBLE_EQ(s.beta(1), 1e-4);
  EXPECT_DOUBLE_EQ(s.beta(1000), 0.02);
  EXPECT_NEAR(s.beta(2) - s.beta(1), (0.02 - 1e-4) / 999, 1e-15);
}

TEST(Schedule, SingleStepUsesBetaStart) {
  const NoiseSchedule s = linear_schedule(1, 0.3, 0.3);
  EXPECT_DOUBLE_EQ(s.alpha_bar(1), 0.7);
}

TEST(Schedule, FrozenProductsMatchHighPrecision) {
  const NoiseSchedule s1000 = linear_schedule(1000, 1e-4, 0.02);
  EXPECT_NEAR(s1000.alpha_bar(1000) / kAlphaBar1000, 1.0, 1e-12);
  EXPECT_NEAR(prior_convergence_gap(s1000), 4.03583e-5, 5e-11);
  const NoiseSchedule s50 = linear_schedule(50, 1e-4, 0.02);
  EXPECT_NEAR(s50.alpha_bar(50) / kAlphaBar50, 1.0, 1e-12);
}

TEST(Schedule, ProductsAreRunningProducts) {
  for (int steps : {1, 2, 50, 1000}) {
    const NoiseSchedule s = linear_schedule(steps, 1e-4, 0.02);
    long double product = 1.0L;
    for (int t = 1; t <= steps; ++t) {
      product *= static_cast<long double>(s.alpha(t));
      EXPECT_NEAR(s.alpha_bar(t), static_cast<double>(product), 1e-12 * static_cast<double>(product));
      EXPECT_DOUBLE_EQ(s.alpha(t), 1.0 - s.beta(t));
      if (t > 1) {
        EXPECT_LT(s.alpha_bar(t), s.alpha_bar(t - 1));
      }
    }
  }
}

TEST(Schedule, RejectsInvalidBetas) {
  for (const auto& betas : {std::vector<double>{}, std::vector<double>{0.0},
                            std::vector<double>{1.0}, std::vector<double>{0.1, -0.1},
                            std::vector<double>{NAN}}) {
    try {
      NoiseSchedule s(betas);
      ADD_FAILURE();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidRange);
    }
  }
  EXPECT_THROW(linear_schedule(0, 1e-4, 0.02), Error);
  EXPECT_THROW(linear_schedule(10, 0.02, 1e-4), Error);
}

TEST(Schedule, StepOutOfRange) {
  const NoiseSchedule s({0.1, 0.2});
  for (int t : {0, 3, -1}) {
    try {
      (void)s.beta(t);
      ADD_FAILURE();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::StepOutOfRange);
    }
  }
}

}  // namespace
}  // namespace molddpm
