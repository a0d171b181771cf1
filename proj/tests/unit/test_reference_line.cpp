#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "scex/error.hpp"
#include "scex/reference_line.hpp"
#include "scex/road_model.hpp"

using namespace scex;

namespace {

std::vector<Vec2> circle_path(double radius, double sweep, std::size_t n) {
  std::vector<Vec2> p;
  for (std::size_t i = 0; i <= n; ++i) {
    const double a = sweep * static_cast<double>(i) / static_cast<double>(n);
    p.push_back({radius * std::sin(a), radius * (1.0 - std::cos(a))});
  }
  return p;
}

std::vector<Vec2> wavy_path() {
  std::vector<Vec2> p;
  for (int i = 0; i <= 3000; ++i) {
    const double x = 0.1 * i;
    p.push_back({x, 6.0 * std::sin(x / 40.0)});
  }
  return p;
}

}  // namespace

TEST(ReferenceLine, QuarterCircleArcLength) {
  const double r = 50.0;
  const auto path = circle_path(r, std::numbers::pi / 2, 200000);
  const ReferenceLine line = build_reference_line(std::span<const Vec2>(path), 0.5, 1.0);
  // Vertices lie on the circle with chord 0.5, i.e. arc 2 r asin(0.25 / r) apart.
  const double arc_per_chord = 2.0 * r * std::asin(0.25 / r);
  const auto chords = static_cast<std::size_t>(std::floor(r * std::numbers::pi / 2 / arc_per_chord + 1e-9));
  EXPECT_EQ(line.size(), chords + 1);
  EXPECT_DOUBLE_EQ(line.length(), 0.5 * static_cast<double>(chords));
  for (const Vec2& v : line.vertices()) EXPECT_NEAR(std::hypot(v.x, v.y - r), r, 1e-6);
  for (std::size_t i = 1; i < line.size(); ++i) {
    EXPECT_NEAR(distance(line.vertices()[i - 1], line.vertices()[i]), 0.5, 1e-9);
  }
}

TEST(ReferenceLine, HeadingGradientRecoversCircleCurvature) {
  const auto path = circle_path(80.0, 1.5, 100000);
  const ReferenceLine line = build_reference_line(std::span<const Vec2>(path), 0.5, 1.0);
  const auto k = heading_gradient(line);
  // The last vertex repeats the final chord heading, so its neighbour sees half.
  for (std::size_t i = 1; i + 2 < k.size(); ++i) EXPECT_NEAR(k[i], 1.0 / 80.0, 1e-6);
}

TEST(ReferenceLine, StationaryLogIsRejected) {
  std::vector<EgoPose> poses(10, EgoPose{0.0, 3.0, 4.0, 0.0, 0.0});
  for (std::size_t i = 0; i < poses.size(); ++i) poses[i].t = 0.1 * static_cast<double>(i);
  EXPECT_THROW(build_reference_line(poses, 0.5, 1.0), InputError);
  poses.back().x += 0.3;  // 0.3 m of motion is still below the 1 m minimum
  EXPECT_THROW(build_reference_line(poses, 0.5, 1.0), InputError);
}

TEST(ReferenceLine, ProjectionMatchesDenseSamplingOracle) {
  const auto path = wavy_path();
  const ReferenceLine line = build_reference_line(std::span<const Vec2>(path), 0.5, 1.0);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> us(10.0, line.length() - 10.0), ut(-8.0, 8.0);
  for (int i = 0; i < 200; ++i) {
    // Offset a point normal to the oracle's own interpolation of the vertices.
    const double s = us(rng);
    const auto k = static_cast<std::size_t>(s / 0.5);
    const Vec2 a = line.vertices()[k], b = line.vertices()[k + 1];
    const double u = (s - 0.5 * static_cast<double>(k)) / 0.5;
    const Vec2 d = b - a;
    const Vec2 n{-d.y / norm(d), d.x / norm(d)};
    const Vec2 p = a + d * u + n * ut(rng);
    const auto want = oracle::dense_project(line.vertices(), p, s - 20.0, s + 20.0);
    const Projection got = to_frenet(p, line);
    EXPECT_FALSE(got.clamped);
    EXPECT_NEAR(got.pose.s, want.s, 2e-3);
    EXPECT_NEAR(got.pose.t, want.t, 2e-3);
  }
}

TEST(ReferenceLine, FromFrenetInvertsProjection) {
  const auto path = wavy_path();
  const ReferenceLine line = build_reference_line(std::span<const Vec2>(path), 0.5, 1.0);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ux(5.0, 295.0), uy(-10.0, 10.0);
  for (int i = 0; i < 300; ++i) {
    const Vec2 p{ux(rng), uy(rng) + 6.0 * std::sin(ux(rng) / 40.0)};
    const Projection pr = line.project(p);
    // Feet on a vertex (outer side of a bend) have no perpendicular inverse.
    const double frac = std::fmod(pr.pose.s, 0.5);
    if (pr.clamped || frac < 1e-9 || frac > 0.5 - 1e-9) continue;
    const Vec2 q = line.from_frenet(pr.pose);
    EXPECT_NEAR(q.x, p.x, 1e-9);
    EXPECT_NEAR(q.y, p.y, 1e-9);
  }
}

TEST(ReferenceLine, EndsClampAndLateralBoundApplies) {
  const std::vector<Vec2> path{{0.0, 0.0}, {100.0, 0.0}};
  const ReferenceLine line = build_reference_line(std::span<const Vec2>(path), 0.5, 1.0);
  const Projection before = line.project({-5.0, 2.0});
  EXPECT_TRUE(before.clamped);
  EXPECT_DOUBLE_EQ(before.pose.s, 0.0);
  EXPECT_DOUBLE_EQ(before.pose.t, 2.0);
  const Projection after = line.project({130.0, -1.0});
  EXPECT_TRUE(after.clamped);
  EXPECT_DOUBLE_EQ(after.pose.s, line.length());
  EXPECT_DOUBLE_EQ(after.pose.t, -1.0);
  EXPECT_FALSE(line.try_project({50.0, 60.0}).has_value());
  EXPECT_THROW(to_frenet({50.0, -60.0}, line), InputError);
  const Projection mid = line.project({42.25, 3.0});
  EXPECT_FALSE(mid.clamped);
  EXPECT_NEAR(mid.pose.s, 42.25, 1e-12);
  EXPECT_DOUBLE_EQ(mid.pose.t, 3.0);
}

TEST(ReferenceLine, TiesResolveToSmallerArcLength) {
  // A U-turn: the point on the axis of symmetry is equidistant from both legs.
  std::vector<Vec2> path;
  for (int i = 0; i <= 200; ++i) path.push_back({0.1 * i, 5.0});
  for (int i = 1; i <= 3000; ++i) {
    const double a = std::numbers::pi * i / 3000.0;
    path.push_back({20.0 + 5.0 * std::sin(a), 5.0 * std::cos(a)});
  }
  for (int i = 1; i <= 200; ++i) path.push_back({20.0 - 0.1 * i, -5.0});
  const ReferenceLine line = build_reference_line(std::span<const Vec2>(path), 0.5, 1.0);
  const Projection pr = line.project({10.0, 0.0});
  EXPECT_LT(pr.pose.s, 15.0);
  EXPECT_NEAR(std::abs(pr.pose.t), 5.0, 1e-9);
}
