// Copyright 2026 The molddpm Authors
// SPDX-License-Identifier: Apache-2.0

#include "molddpm/diagnostics.hpp"
#include "molddpm/error.hpp"
#include "molddpm/latent_diffusion.hpp"

#include <gtest/gtest.h>

namespace molddpm {
namespace {

DenoiserParams small_denoiser(int d, int steps) {
  Rng rng = make_rng(21);
  return DenoiserParams::init(DenoiserConfig{16}, d, steps, rng);
}

TEST(ForwardChain, ZeroNoiseComposesToMarginal) {
  const NoiseSchedule s = linear_schedule(50, 1e-4, 0.02);
  Rng rng = make_rng(1);
  EXPECT_TRUE(check_chain_zero_noise(s, 4, rng).passed);

  const Eigen::MatrixXd z0 = standard_normal(3, 4, rng);
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(3, 4);
  Eigen::MatrixXd z = std::sqrt(s.alpha(1)) * z0;
  for (int t = 2; t <= 50; ++t) z = forward_step(z, t, s, zero);
  EXPECT_LT((z - marginal_sample(z0, 50, s, zero)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(ForwardChain, MarginalVarianceMonteCarlo) {
  const NoiseSchedule s = linear_schedule(50, 1e-4, 0.02);
  Rng rng = make_rng(2);
  const CheckResult r = check_chain_variance(s, 5, 4, 100000, rng);
  EXPECT_TRUE(r.passed) << r.measured;
}

TEST(ForwardChain, StepOutOfRange) {
  const NoiseSchedule s({0.1, 0.2});
  const Eigen::MatrixXd z = Eigen::MatrixXd::Zero(1, 2);
  for (int t : {1, 3}) {
    try {
      forward_step(z, t, s, z);
      ADD_FAILURE();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::StepOutOfRange);
    }
  }
}

TEST(ReverseChain, MeanMatchesClosedForm) {
  const NoiseSchedule s({0.1, 0.2});
  Eigen::MatrixXd z(1, 1), eps(1, 1);
  z << 1.5;
  eps << -0.5;
  const double expected = (1.5 - 0.2 / std::sqrt(1.0 - 0.72) * -0.5) / std::sqrt(0.8);
  EXPECT_NEAR(reverse_mean_from_noise(z, 2, s, eps)(0, 0), expected, 1e-15);
}

TEST(ReverseChain, ZeroNoiseIsTheMean) {
  const NoiseSchedule s = linear_schedule(50, 1e-4, 0.02);
  Rng rng = make_rng(3);
  EXPECT_TRUE(check_reverse_zero_noise(s, 4, rng).passed);
}

TEST(ReverseChain, FinalStepAddsNoNoise) {
  const NoiseSchedule s = linear_schedule(10, 1e-4, 0.02);
  const DenoiserParams den = small_denoiser(3, 10);
  Rng rng = make_rng(4);
  const Eigen::MatrixXd z = standard_normal(2, 3, rng);
  const Eigen::MatrixXd noise = standard_normal(2, 3, rng);
  EXPECT_EQ(reverse_step(z, 1, s, den, noise), reverse_mean(z, 1, s, den));
}

TEST(ReverseChain, VarianceMonteCarlo) {
  const NoiseSchedule s = linear_schedule(50, 1e-4, 0.02);
  const DenoiserParams den = small_denoiser(4, 50);
  Rng rng = make_rng(5);
  const CheckResult r = check_reverse_variance(s, den, 25, 100000, rng);
  EXPECT_TRUE(r.passed) << r.measured;
}

TEST(ReverseChain, AncestralSampleShapesAndDeterminism) {
  const NoiseSchedule s = linear_schedule(10, 1e-4, 0.02);
  const DenoiserParams den = small_denoiser(3, 10);
  Rng a = make_rng(6), b = make_rng(6);
  const Eigen::MatrixXd za = ancestral_sample(s, den, 4, a);
  EXPECT_EQ(za.rows(), 4);
  EXPECT_EQ(za.cols(), 3);
  EXPECT_EQ(za, ancestral_sample(s, den, 4, b));
  EXPECT_THROW(ancestral_sample(s, den, za, {}), Error);
}

TEST(Denoiser, TimeFeaturesDifferAcrossSteps) {
  const Eigen::MatrixXd f1 = time_features(1, 50, 16), f2 = time_features(2, 50, 16);
  EXPECT_EQ(f1.rows(), 1);
  EXPECT_EQ(f1.cols(), 16);
  EXPECT_GT((f1 - f2).norm(), 0.0);
  EXPECT_LE(f1.cwiseAbs().maxCoeff(), 1.0);
}

TEST(Denoiser, RejectsStepsOutsideSchedule) {
  const DenoiserParams den = small_denoiser(3, 10);
  const Eigen::MatrixXd z = Eigen::MatrixXd::Zero(1, 3);
  EXPECT_EQ(predict_noise(z, 10, den).cols(), 3);
  for (int t : {0, 11}) {
    try {
      predict_noise(z, t, den);
      ADD_FAILURE();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::StepOutOfRange);
    }
  }
  EXPECT_THROW((DenoiserConfig{3}.validate()), Error);
}

TEST(PriorKl, MonteCarloAgreesWithClosedForm) {
  const NoiseSchedule s = linear_schedule(50, 1e-4, 0.02);
  Rng rng = make_rng(7);
  const CheckResult r = check_prior_kl(s, 5, 4, 200000, rng);
  EXPECT_TRUE(r.passed) << r.measured;
}

}  // namespace
}  // namespace molddpm
