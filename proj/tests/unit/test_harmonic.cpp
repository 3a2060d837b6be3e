#include <gtest/gtest.h>

#include <sstream>

#include "models.hpp"

using namespace rwre;

namespace {

constexpr double kNoBacktrack = 4.0 / 7.0;  // P(beta = infinity) for p(+1) = 0.7

double classical_lambda(double theta) { return std::log(0.7 * std::exp(theta) + 0.3 * std::exp(-theta)); }

}  // namespace

TEST(Harmonic, DeterministicWalkIsOne) {
  EnvironmentRealization env(rwre::testing::deterministic_right(2), 1);
  Rng r(1);
  const auto e = cesaro_h(env, Site{}, {0.4, 0.3}, 0.4, 8, 10, 5, r);
  EXPECT_NEAR(e.h, 1.0, 1e-12);
  EXPECT_NEAR(e.g, 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(e.h_se, 0.0);
  const auto hn = estimate_h_n(env, Site{}, {0.4, 0.3}, 0.4, 5, 10, 5, r);
  EXPECT_NEAR(hn.mean, 1.0, 1e-12);
}

TEST(Harmonic, ConstantEnvironmentIsNoBacktrackProbability) {
  EnvironmentRealization env(rwre::testing::classical_d1(), 1);
  Rng r(2);
  for (double theta : {0.0, 0.5}) {
    const auto e = cesaro_h(env, Site{}, {theta}, classical_lambda(theta), 16, 20000, 60, r);
    EXPECT_NEAR(e.h / kNoBacktrack, 1.0, 4 * e.h_se / kNoBacktrack) << "theta " << theta;
    EXPECT_EQ(e.exhausted, 0u);
  }
}

TEST(Harmonic, SingleLevelMatchesNoBacktrackProbability) {
  EnvironmentRealization env(rwre::testing::classical_d1(), 3);
  Rng r(3);
  const auto e = estimate_hg_n(env, Site{}, {0.5}, classical_lambda(0.5), 6, 40000, 60, r);
  EXPECT_NEAR(e.h, kNoBacktrack, 4 * e.h_se);
}

TEST(Harmonic, GNeverExceedsH) {
  EnvironmentRealization env(rwre::testing::mixture_d4(), 5);
  Rng r(4);
  for (int k = 0; k < 5; ++k) {
    Site s{};
    s[1] = k;
    const auto e = cesaro_h(env, s, {0.2, 0.1, 0.0, 0.0}, 0.05, 8, 300, 40, r);
    EXPECT_LE(e.g, e.h);
    EXPECT_GT(e.h, 0.0);
    const auto l = estimate_hg_n(env, s, {0.2, 0.1, 0.0, 0.0}, 0.05, 5, 300, 40, r);
    EXPECT_LE(l.g, l.h);
  }
}

TEST(Harmonic, Errors) {
  EnvironmentRealization env(rwre::testing::classical_d1(), 1);
  Rng r(5);
  EXPECT_THROW((void)cesaro_h(env, Site{}, {0.0}, 0.0, 1, 10, 10, r), InsufficientSamples);
  EXPECT_THROW((void)cesaro_h(env, Site{}, {0.0}, 0.0, 4, 0, 10, r), InsufficientSamples);
  EXPECT_THROW((void)estimate_hg_n(env, Site{}, {0.0}, 0.0, 0, 10, 10, r), InsufficientSamples);
}

TEST(Residual, ExactForConstantH) {
  EnvironmentRealization env(rwre::testing::classical_d1(), 1);
  const double lam = classical_lambda(0.5);
  HarmonicEntry here{Site{}, 2.0, 0.0};
  std::vector<HarmonicEntry> nb{{unit_site(0), 2.0, 0.0}, {unit_site(1), 2.0, 0.0}};
  const auto res = harmonic_residual(env, Site{}, here, nb, {0.5}, lam);
  EXPECT_NEAR(res.residual, 0.0, 1e-14);
  EXPECT_NEAR(res.normalized, 0.0, 1e-14);
}

TEST(Residual, HandComputed) {
  EnvironmentRealization env(rwre::testing::classical_d1(), 1);
  HarmonicEntry here{Site{}, 1.0, 0.1};
  std::vector<HarmonicEntry> nb{{unit_site(0), 2.0, 0.2}, {unit_site(1), 0.5, 0.0}};
  const auto res = harmonic_residual(env, Site{}, here, nb, {0.0}, 0.0);
  EXPECT_NEAR(res.residual, 1.0 - (0.7 * 2.0 + 0.3 * 0.5), 1e-14);
  EXPECT_NEAR(res.normalized, res.residual, 1e-14);
  EXPECT_NEAR(res.se, std::sqrt(0.01 + 0.49 * 0.04), 1e-14);
}

TEST(Residual, MissingOrMisplacedNeighbors) {
  EnvironmentRealization env(rwre::testing::classical_d1(), 1);
  HarmonicEntry here{Site{}, 1.0, 0.0};
  std::vector<HarmonicEntry> one{{unit_site(0), 1.0, 0.0}};
  EXPECT_THROW((void)harmonic_residual(env, Site{}, here, one, {0.0}, 0.0), MissingNeighbor);
  std::vector<HarmonicEntry> swapped{{unit_site(1), 1.0, 0.0}, {unit_site(0), 1.0, 0.0}};
  EXPECT_THROW((void)harmonic_residual(env, Site{}, here, swapped, {0.0}, 0.0), MissingNeighbor);
}

TEST(Field, ConstantEnvironmentResidualVanishes) {
  EnvironmentRealization env(rwre::testing::classical_d1(), 1);
  HarmonicParams p;
  p.n_max = 12;
  p.walks = 5000;
  p.confirm_horizon = 60;
  HarmonicField field(env, {0.5}, classical_lambda(0.5), p);
  const auto res = field.residual_at(Site{});
  EXPECT_NEAR(res.residual, 0.0, 4 * res.se);
  EXPECT_EQ(field.sites_estimated(), 3u);
}

TEST(Field, CachedAndShiftConsistent) {
  EnvironmentRealization env(rwre::testing::mixture_d4(), 9);
  HarmonicParams p;
  p.n_max = 6;
  p.walks = 50;
  p.master_seed = 17;
  const Vec theta{0.2, 0.1, 0.0, 0.0};
  HarmonicField field(env, theta, 0.05, p);
  Site s{};
  s[0] = 3;
  s[2] = -2;
  const auto first = field.at(s);
  const auto again = field.at(s);
  EXPECT_EQ(first.h, again.h);
  EXPECT_EQ(field.sites_estimated(), 1u);

  Site y{};
  y[0] = 1;
  y[2] = -2;
  HarmonicField shifted(env.shifted(y), theta, 0.05, p);
  Site rel{};
  rel[0] = 2;
  const auto via_shift = shifted.at(rel);
  EXPECT_EQ(via_shift.h, first.h);
  EXPECT_EQ(via_shift.g, first.g);
}

TEST(Field, QueryOrderDoesNotMatter) {
  EnvironmentRealization env(rwre::testing::mixture_d4(), 10);
  HarmonicParams p;
  p.n_max = 4;
  p.walks = 30;
  const Vec theta{0.1, 0.0, 0.0, 0.0};
  HarmonicField a(env, theta, 0.02, p), b(env, theta, 0.02, p);
  std::vector<Site> sites;
  for (int k = 0; k < 5; ++k) {
    Site s{};
    s[0] = k;
    s[3] = -k;
    sites.push_back(s);
  }
  std::vector<double> fwd, rev(sites.size());
  for (const auto& s : sites) fwd.push_back(a.at(s).h);
  for (std::size_t i = sites.size(); i-- > 0;) rev[i] = b.at(sites[i]).h;
  EXPECT_EQ(fwd, rev);
}

TEST(Field, BudgetExhausted) {
  EnvironmentRealization env(rwre::testing::classical_d1(), 1);
  HarmonicParams p;
  p.n_max = 4;
  p.walks = 10;
  HarmonicField field(env, {0.0}, 0.0, p, 2);
  (void)field.at(Site{});
  (void)field.at(unit_site(0));
  (void)field.at(Site{});
  EXPECT_THROW((void)field.at(unit_site(1)), BudgetExhausted);
}

TEST(Field, ZeroEstimatesAreFlaggedNotCached) {
  EnvironmentRealization env(rwre::testing::classical_d1(), 1);
  HarmonicParams p;
  p.n_max = 6;
  p.walks = 5;
  p.step_cap = 1;
  HarmonicField field(env, {0.0}, 0.0, p);
  const auto e = field.at(Site{});
  EXPECT_FALSE(e.positive());
  EXPECT_EQ(e.exhausted, 5u);
  EXPECT_EQ(field.sites_estimated(), 0u);
  EXPECT_EQ(field.undersampled(), 1u);
}

TEST(Field, Csv) {
  std::vector<HarmonicEntry> es{{Site{1, -2}, 0.5, 0.01, 0.25, 0.02, 8, 200, 0}};
  std::ostringstream os;
  write_harmonic_csv(os, es, 2);
  EXPECT_EQ(os.str(), "x_1,x_2,h,stderr,g,n_max,walks\n1,-2,0.5,0.01,0.25,8,200\n");
}
