#include <gtest/gtest.h>

#include "models.hpp"

using namespace rwre;
using rwre::testing::tv;

TEST(Classical, LmgfTiltAndVelocity) {
  const auto p = tv({0.7, 0.3});
  EXPECT_NEAR(classical_lmgf(p, {0.5}), 0.289728, 1e-6);
  const auto q = classical_tilt(p, {0.5});
  EXPECT_NEAR(q[0], 0.8638095, 1e-6);
  EXPECT_NEAR(q[0] + q[1], 1.0, 1e-15);
  EXPECT_NEAR(classical_tilted_velocity(p, {0.5})[0], 0.7276191, 1e-6);
  EXPECT_DOUBLE_EQ(classical_lmgf(p, {0.0}), 0.0);
}

TEST(Classical, RateAtTiltedVelocity) {
  const auto p = tv({0.7, 0.3});
  const double xi = classical_tilted_velocity(p, {0.5})[0];
  EXPECT_NEAR(0.5 * xi - classical_lmgf(p, {0.5}), 0.0741, 1e-4);
  EXPECT_NEAR(kl_divergence(classical_tilt(p, {0.5}), p), 0.5 * xi - classical_lmgf(p, {0.5}), 1e-12);
}

TEST(Classical, TiltGroupProperty) {
  const auto p = rwre::testing::mixture_d4().law.components[0];
  const Vec a{0.2, -0.1, 0.3, 0.0}, b{-0.05, 0.4, 0.1, 0.2};
  Vec ab(4);
  for (int i = 0; i < 4; ++i) ab[i] = a[i] + b[i];
  const auto two = classical_tilt(classical_tilt(p, a), b);
  const auto one = classical_tilt(p, ab);
  for (int z = 0; z < 8; ++z) EXPECT_NEAR(two[z], one[z], 1e-14);
}

TEST(Classical, GradientIsTiltedVelocity) {
  const auto p = rwre::testing::mixture_d4().law.components[1];
  const Vec theta{0.3, 0.1, -0.2, 0.05};
  const auto v = classical_tilted_velocity(p, theta);
  for (int k = 0; k < 4; ++k) {
    Vec hi = theta, lo = theta;
    hi[k] += 1e-6;
    lo[k] -= 1e-6;
    EXPECT_NEAR(v[k], (classical_lmgf(p, hi) - classical_lmgf(p, lo)) / 2e-6, 1e-8);
  }
}

TEST(Enumeration, OneStepIsClassicalUnderTheMeanKernel) {
  const auto m = rwre::testing::symmetric_d1();
  const double e = enumerate_averaged_mgf(m, {0.7}, 1);
  EXPECT_NEAR(e, 0.5 * std::exp(0.7) + 0.5 * std::exp(-0.7), 1e-14);
}

TEST(Enumeration, TwoStepsByHand) {
  // No site is used twice in two steps.
  const auto m = rwre::testing::symmetric_d1();
  const double e = enumerate_averaged_mgf(m, {1.0}, 2);
  EXPECT_NEAR(e, 0.25 * std::exp(2.0) + 0.5 + 0.25 * std::exp(-2.0), 1e-14);
}

TEST(Enumeration, PathReuseWeight) {
  const auto m = rwre::testing::symmetric_d1();
  const std::vector<int> rlr{0, 1, 0};
  EXPECT_NEAR(averaged_path_weight(m, rlr), 0.17, 1e-15);
  const auto weights = enumerate_path_weights(m, 3);
  ASSERT_EQ(weights.size(), 8u);
  EXPECT_NEAR(weights.at(rlr), 0.17, 1e-15);
  EXPECT_NEAR(weights.at({0, 0, 0}), 0.125, 1e-15);
  double total = 0.0;
  for (const auto& [path, w] : weights) {
    EXPECT_NEAR(w, averaged_path_weight(m, path), 1e-15);
    total += w;
  }
  EXPECT_NEAR(total, 1.0, 1e-14);
}

TEST(Enumeration, PathWeightsAgreeInFourDimensions) {
  const auto m = rwre::testing::mixture_d4();
  for (const auto& [path, w] : enumerate_path_weights(m, 4)) EXPECT_NEAR(w, averaged_path_weight(m, path), 1e-15);
}

TEST(Enumeration, ZeroThetaIsTotalProbability) {
  for (int n : {1, 3, 6, 10}) EXPECT_NEAR(enumerate_averaged_mgf(rwre::testing::symmetric_d1(), {0.0}, n), 1.0, 1e-13);
  for (int n : {1, 2, 4, 6}) EXPECT_NEAR(enumerate_averaged_mgf(rwre::testing::mixture_d4(), Vec(4, 0.0), n), 1.0, 1e-13);
}

TEST(Enumeration, ConstantEnvironmentIsClassicalPower) {
  const auto m = rwre::testing::classical_d1();
  for (int n : {2, 5, 9}) EXPECT_NEAR(std::log(enumerate_averaged_mgf(m, {0.5}, n)), n * 0.28972804, 1e-6);
  EnvironmentRealization env(m, 11);
  EXPECT_NEAR(enumerate_quenched_mgf(env, {0.5}, 40), 40 * classical_lmgf(m.law.components[0], {0.5}), 1e-10);
}

TEST(Enumeration, MonotoneInPositiveDriftComponent) {
  const auto m = rwre::testing::mixture_d4();
  double prev = 0.0;
  for (double t = 0.0; t <= 1.0; t += 0.1) {
    const double e = enumerate_averaged_mgf(m, {t, 0.0, 0.0, 0.0}, 5);
    EXPECT_GT(e, prev);
    prev = e;
  }
}

TEST(Enumeration, Guards) {
  EXPECT_THROW((void)enumerate_averaged_mgf(rwre::testing::mixture_d4(), Vec(4, 0.0), 20), TooLarge);
  EnvironmentRealization env(rwre::testing::mixture_d4(), 1);
  EXPECT_THROW((void)enumerate_quenched_mgf(env, Vec(4, 0.0), 100), TooLarge);
  EXPECT_THROW((void)averaged_path_weight(rwre::testing::classical_d1(), std::vector<int>{2}), DimensionMismatch);
}

TEST(Enumeration, QuenchedJensen) {
  const auto m = rwre::testing::symmetric_d1();
  const Vec theta{0.6};
  const int n = 12;
  double mean_q = 0.0;
  const int envs = 200;
  for (int s = 0; s < envs; ++s) mean_q += enumerate_quenched_mgf(EnvironmentRealization(m, 100 + s), theta, n);
  mean_q /= envs;
  EXPECT_LE(mean_q / n, std::log(enumerate_averaged_mgf(m, theta, n)) / n + 1e-3);
}

TEST(Enumeration, QuenchedAveragesToAveraged) {
  const auto m = rwre::testing::symmetric_d1();
  const Vec theta{0.4};
  const int n = 6;
  EstimatorSummary s;
  for (int k = 0; k < 20000; ++k) s.add(std::exp(enumerate_quenched_mgf(EnvironmentRealization(m, 5000 + k), theta, n)));
  EXPECT_NEAR(s.mean(), enumerate_averaged_mgf(m, theta, n), 4 * s.std_error());
}

TEST(Enumeration, MonteCarloAgreement) {
  const auto m = rwre::testing::symmetric_d1();
  Rng r(77);
  const auto est = direct_lmgf_averaged(m, {0.5}, 6, 200000, r);
  EXPECT_NEAR(est.value, std::log(enumerate_averaged_mgf(m, {0.5}, 6)) / 6, 4 * est.se);
}
