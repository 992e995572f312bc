#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "sacheck/error.hpp"
#include "sacheck/scenario.hpp"
#include "sacheck/special.hpp"

using namespace sacheck;

TEST(Scenario, NamesRoundTrip) {
  for (auto id : {ScenarioId::Sc1, ScenarioId::Sc2, ScenarioId::Sc3}) EXPECT_EQ(parse_scenario(to_string(id)), id);
  EXPECT_EQ(parse_scenario("SC2"), ScenarioId::Sc2);
  EXPECT_THROW(parse_scenario("sc4"), ParameterError);
}

TEST(Scenario, TauAtSpecialPoints) {
  const Scenario sc1(ScenarioId::Sc1), sc2(ScenarioId::Sc2), sc3(ScenarioId::Sc3);
  EXPECT_EQ(sc1.tau(Eigen::RowVector2d(0.3, 0.8)), 0.5);
  EXPECT_NEAR(sc2.tau(Eigen::RowVector2d(0.0, 0.0)), 0.5, 1e-15);
  // x1 + cos(6 x2) = 0.45 at x2 = pi / 12, x1 = 0.45.
  EXPECT_NEAR(sc3.tau(Eigen::RowVector2d(0.45, std::numbers::pi / 12)), 0.5, 1e-15);
  const double x1 = 0.2, x2 = 0.7;
  EXPECT_NEAR(sc2.tau(Eigen::RowVector2d(x1, x2)), 0.5 + 0.25 * std::sin(10 * (x1 + 3 * x2) / std::sqrt(10.0)),
              1e-15);
  EXPECT_NEAR(sc3.tau(Eigen::RowVector2d(x1, x2)), 0.5 + 0.25 * 2 * (x1 + std::cos(6 * x2) - 0.45) / 3, 1e-15);
}

TEST(Scenario, MeansMatchDefinitions) {
  const Scenario s(ScenarioId::Sc1);
  const Eigen::RowVector2d x(0.35, 0.6);
  EXPECT_NEAR(s.mean1(x), 0.6 * std::sin(5 * 0.35) - 0.9 * std::sin(2 * 0.6), 1e-15);
  EXPECT_NEAR(s.mean2(x), 0.6 * std::sin(3 * 0.35 + 5 * 0.6), 1e-15);
}

TEST(Scenario, Sc1IsConstantTauEverywhere) {
  const Scenario s(ScenarioId::Sc1);
  Rng r(1);
  for (int i = 0; i < 200; ++i) EXPECT_EQ(s.tau(Eigen::RowVector2d(r.uniform(), r.uniform())), 0.5);
}

TEST(Scenario, Sc1PitKendallTau) {
  const Scenario s(ScenarioId::Sc1);
  Rng r(2);
  const auto d = s.generate(20000, r);
  const auto pits = fixture::true_pits(s, d);
  std::vector<std::pair<double, double>> xy;
  for (const auto& p : pits) xy.emplace_back(p.u1, p.u2);
  EXPECT_NEAR(oracle::kendall_tau(xy), 0.5, 0.01);
}

TEST(Scenario, StandardizedResidualsAreNormal) {
  for (auto id : {ScenarioId::Sc1, ScenarioId::Sc3}) {
    const Scenario s(id);
    Rng r(3);
    const auto d = s.generate(20000, r);
    std::vector<double> u1, u2;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const auto x = d.X.row(static_cast<Eigen::Index>(i));
      u1.push_back(gaussian_cdf((d.y1[i] - s.mean1(x)) / s.sigma1()));
      u2.push_back(gaussian_cdf((d.y2[i] - s.mean2(x)) / s.sigma2()));
    }
    EXPECT_LT(oracle::ks_uniform(u1), oracle::ks_critical_01(d.size()));
    EXPECT_LT(oracle::ks_uniform(u2), oracle::ks_critical_01(d.size()));
  }
}

TEST(Scenario, CovariatesAreUnitUniformAndPadded) {
  const Scenario s(ScenarioId::Sc2, 0.25, 3);
  EXPECT_EQ(s.dim(), 5);
  Rng r(4);
  const auto d = s.generate(2000, r);
  EXPECT_EQ(d.dim(), 5u);
  EXPECT_GT(d.X.minCoeff(), 0.0);
  EXPECT_LT(d.X.maxCoeff(), 1.0);
  for (int c = 0; c < 5; ++c) EXPECT_NEAR(d.X.col(c).mean(), 0.5, 0.03);
}

TEST(Scenario, OutOfBandTauIsRejectedUnlessClipped) {
  EXPECT_THROW(Scenario(ScenarioId::Sc2, 0.6), ParameterError);
  EXPECT_THROW(Scenario(ScenarioId::Sc1, 0.25, 0, false, 0.0), ParameterError);
  const Scenario clipped(ScenarioId::Sc2, 0.6, 0, true);
  EXPECT_TRUE(clipped.clipped());
  Rng r(5);
  for (int i = 0; i < 500; ++i) {
    const double t = clipped.tau(Eigen::RowVector2d(r.uniform(), r.uniform()));
    EXPECT_GE(t, Scenario::kTauLo);
    EXPECT_LE(t, Scenario::kTauHi);
  }
  EXPECT_FALSE(Scenario(ScenarioId::Sc2).clipped());
  EXPECT_FALSE(Scenario(ScenarioId::Sc3).clipped());
}

TEST(Scenario, Deterministic) {
  const Scenario s(ScenarioId::Sc3);
  Rng a(6), b(6);
  const auto x = s.generate(100, a);
  const auto y = s.generate(100, b);
  EXPECT_EQ(x.X, y.X);
  EXPECT_EQ(x.y1, y.y1);
  EXPECT_EQ(x.y2, y.y2);
}
