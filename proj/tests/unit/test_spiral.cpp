#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "scex/spiral.hpp"

using namespace scex;

TEST(Spiral, LineAdvancesAlongHeading) {
  const Pose2 p = advance_line({1.0, 2.0, std::numbers::pi / 6}, 10.0);
  EXPECT_NEAR(p.x, 1.0 + 10.0 * std::sqrt(3.0) / 2.0, 1e-12);
  EXPECT_NEAR(p.y, 7.0, 1e-12);
  EXPECT_DOUBLE_EQ(p.hdg, std::numbers::pi / 6);
}

TEST(Spiral, ArcMatchesCircleGeometry) {
  // Quarter circle of radius 20 turning left from the origin.
  const Pose2 p = advance_arc({0.0, 0.0, 0.0}, 0.05, 10.0 * std::numbers::pi);
  EXPECT_NEAR(p.x, 20.0, 1e-9);
  EXPECT_NEAR(p.y, 20.0, 1e-9);
  EXPECT_NEAR(p.hdg, std::numbers::pi / 2, 1e-12);
  const Pose2 q = advance_arc({3.0, 4.0, 1.0}, 0.0, 5.0);
  const Pose2 l = advance_line({3.0, 4.0, 1.0}, 5.0);
  EXPECT_NEAR(q.x, l.x, 1e-12);
  EXPECT_NEAR(q.y, l.y, 1e-12);
}

TEST(Spiral, ConstantCurvatureSpiralEqualsArc) {
  const Pose2 a = advance_arc({5.0, -2.0, 0.3}, -0.02, 70.0);
  const Pose2 s = advance_spiral({5.0, -2.0, 0.3}, -0.02, -0.02, 70.0);
  EXPECT_NEAR(s.x, a.x, 1e-9);
  EXPECT_NEAR(s.y, a.y, 1e-9);
  EXPECT_NEAR(s.hdg, a.hdg, 1e-12);
}

TEST(Spiral, MatchesSimpsonIntegrationOracle) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> k(-0.03, 0.03), len(1.0, 200.0), h(-3.0, 3.0), xy(-500, 500);
  for (int i = 0; i < 200; ++i) {
    const double k0 = k(rng), k1 = k(rng), l = len(rng);
    const Pose2 start{xy(rng), xy(rng), h(rng)};
    const Pose2 got = advance_spiral(start, k0, k1, l);
    const oracle::PlanPose want = oracle::integrate_clothoid({start.x, start.y, start.hdg}, k0, k1, l);
    EXPECT_NEAR(got.x, want.x, 1e-4);
    EXPECT_NEAR(got.y, want.y, 1e-4);
    EXPECT_NEAR(got.hdg, want.hdg, 1e-9);
  }
}
