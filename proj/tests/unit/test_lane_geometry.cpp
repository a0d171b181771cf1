#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "scex/lane_geometry.hpp"
#include "support.hpp"

using namespace scex;

namespace {

// One lidar ring of radius 12 m: flat road inside |y| <= edge, a 0.15 m curb
// beyond it.
SensorFrame ring_frame(double edge) {
  SensorFrame f;
  for (int i = -100; i <= 100; ++i) {
    const double az = 1.3 * i / 100.0;
    const double x = 12.0 * std::cos(az), y = 12.0 * std::sin(az);
    f.points.push_back({x, y, std::abs(y) > edge ? 0.15 : 0.0, 0.2});
  }
  return f;
}

LaneLine straight_lane(double y, double x0, double x1, double step = 0.5) {
  LaneLine l;
  for (double x = x0; x <= x1 + 1e-9; x += step) l.polyline.push_back({x, y});
  l.segments.push_back({{x0, y, 0.9, 0}, {x1, y, 0.9, 0}});
  return l;
}

ReferenceLine straight_ref(double length) {
  const std::vector<Vec2> path{{0.0, 0.0}, {length, 0.0}};
  return build_reference_line(std::span<const Vec2>(path), 0.5, 1.0);
}

std::vector<int> cluster_labels(const std::vector<std::vector<LanePoint>>& scans, std::size_t n,
                                const ClusterConfig& cfg) {
  std::vector<MarkCluster> active;
  std::vector<MarkCluster> done;
  for (const auto& scan : scans) {
    for (auto& c : ingest_scan_points(scan, active, cfg)) done.push_back(std::move(c));
  }
  for (auto& c : active) done.push_back(std::move(c));
  std::vector<int> label(n, -1);
  for (std::size_t c = 0; c < done.size(); ++c) {
    for (const LanePoint& p : done[c].points) label[static_cast<std::size_t>(p.intensity)] = static_cast<int>(c);
  }
  return label;
}

}  // namespace

TEST(CurbFilter, KeepsOnlyTheRoadSurface) {
  const SensorFrame f = ring_frame(5.0);
  const auto road = filter_road_points(f, CurbConfig{});
  std::size_t expected = 0;
  for (const auto& p : f.points) expected += std::abs(p.y) <= 5.0;
  ASSERT_EQ(road.size(), expected);
  for (const auto& p : road) EXPECT_EQ(p.z, 0.0);
  // Right side reversed, then left: ascending azimuth overall.
  for (std::size_t i = 1; i < road.size(); ++i) {
    EXPECT_LT(std::atan2(road[i - 1].y, road[i - 1].x), std::atan2(road[i].y, road[i].x));
  }
}

TEST(CurbFilter, FlatRingIsKeptWhole) {
  const SensorFrame f = ring_frame(100.0);
  EXPECT_EQ(filter_road_points(f, CurbConfig{}).size(), f.points.size());
}

TEST(IntensityRule, AdaptiveThresholdSelectsBrightPoints) {
  std::vector<LidarPoint> pts(20, LidarPoint{5.0, 0.0, 0.0, 0.2});
  pts.push_back({6.0, 1.0, 0.0, 0.9});
  pts.push_back({7.0, -1.0, 0.0, 0.9});
  const EgoPose pose{0.0, 100.0, 50.0, std::numbers::pi / 2, 0.0};
  const auto lane = extract_lane_points(pts, pose, 7, IntensityRule{});
  ASSERT_EQ(lane.size(), 2u);
  EXPECT_NEAR(lane[0].x, 99.0, 1e-12);
  EXPECT_NEAR(lane[0].y, 56.0, 1e-12);
  EXPECT_EQ(lane[0].scan_index, 7);

  IntensityRule strict;
  strict.min_points = 30;
  EXPECT_TRUE(extract_lane_points(pts, pose, 0, strict).empty());
  IntensityRule absolute;
  absolute.absolute_threshold = 0.1;
  EXPECT_EQ(extract_lane_points(pts, pose, 0, absolute).size(), pts.size());
}

TEST(ProjectedDistance, SlopeInterceptExamples) {
  EXPECT_DOUBLE_EQ(projected_distance({{0, 0, 0, 0}, {2, 1, 0, 0}}, {4.0, 3.0}), 1.0);
  EXPECT_DOUBLE_EQ(projected_distance({{0, 0, 0, 0}, {2, 1, 0, 0}}, {-2.0, -1.0}), 0.0);
  // Vertical segment: distance measured along x after the axis swap.
  EXPECT_NEAR(projected_distance({{1, 0, 0, 0}, {1, 5, 0, 0}}, {1.3, 7.0}), 0.3, 1e-12);
}

TEST(MergeSegment, AppendsWithinMergeDistanceElseOpensLane) {
  std::vector<LaneLine> lanes;
  EXPECT_EQ(merge_segment({{0, 0, 0, 0}, {10, 0, 0, 0}}, lanes, 0.25), 0u);
  EXPECT_EQ(merge_segment({{0, 3.5, 0, 0}, {10, 3.5, 0, 0}}, lanes, 0.25), 1u);
  EXPECT_EQ(merge_segment({{12, 0.2, 0, 0}, {20, 0.2, 0, 0}}, lanes, 0.25), 0u);
  EXPECT_EQ(merge_segment({{22, 0.6, 0, 0}, {30, 0.6, 0, 0}}, lanes, 0.25), 2u);
  ASSERT_EQ(lanes.size(), 3u);
  EXPECT_EQ(lanes[0].segments.size(), 2u);
}

TEST(Clustering, InactiveClustersArePromotedAfterLimit) {
  ClusterConfig cfg{1.0, 2};
  std::vector<MarkCluster> active;
  const std::vector<LanePoint> a{{0.0, 0.0, 0.9, 0}, {0.5, 0.0, 0.9, 0}};
  EXPECT_TRUE(ingest_scan_points(a, active, cfg).empty());
  ASSERT_EQ(active.size(), 1u);
  EXPECT_EQ(active[0].points.size(), 2u);
  const std::vector<LanePoint> none;
  EXPECT_TRUE(ingest_scan_points(none, active, cfg).empty());  // count 1
  EXPECT_TRUE(ingest_scan_points(none, active, cfg).empty());  // count 2
  const auto promoted = ingest_scan_points(none, active, cfg);  // count 3 > 2
  ASSERT_EQ(promoted.size(), 1u);
  EXPECT_FALSE(promoted[0].active);
  EXPECT_TRUE(active.empty());
}

TEST(Clustering, TouchResetsInactivityAndFarPointsOpenClusters) {
  ClusterConfig cfg{1.0, 1};
  std::vector<MarkCluster> active;
  ingest_scan_points(std::vector<LanePoint>{{0, 0, 0.9, 0}}, active, cfg);
  ingest_scan_points(std::vector<LanePoint>{{5, 0, 0.9, 1}}, active, cfg);
  ASSERT_EQ(active.size(), 2u);
  EXPECT_EQ(active[0].inactive_count, 1);
  ingest_scan_points(std::vector<LanePoint>{{0.9, 0, 0.9, 2}}, active, cfg);
  EXPECT_EQ(active[0].inactive_count, 0);
  EXPECT_EQ(active[0].points.size(), 2u);
  EXPECT_EQ(active[1].inactive_count, 1);
}

TEST(Clustering, MatchesBatchSingleLinkageOnRandomCases) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 40; ++trial) {
    std::uniform_int_distribution<int> groups_d(1, 5), size_d(2, 30);
    std::uniform_real_distribution<double> step(-0.6, 0.6);
    std::vector<std::vector<Vec2>> groups(static_cast<std::size_t>(groups_d(rng)));
    for (std::size_t g = 0; g < groups.size(); ++g) {
      Vec2 p{60.0 * static_cast<double>(g), 0.0};
      const int n = size_d(rng);
      for (int i = 0; i < n; ++i) {
        groups[g].push_back(p);
        p = p + Vec2{step(rng), step(rng)};
      }
    }
    // Arrival: each group's points in chain order, spread over random scans.
    std::vector<Vec2> all;
    std::vector<std::vector<LanePoint>> scans(40);
    for (const auto& g : groups) {
      std::vector<int> scan_of(g.size());
      std::uniform_int_distribution<int> sd(0, 39);
      for (auto& s : scan_of) s = sd(rng);
      std::sort(scan_of.begin(), scan_of.end());
      for (std::size_t i = 0; i < g.size(); ++i) {
        scans[static_cast<std::size_t>(scan_of[i])].push_back(
            {g[i].x, g[i].y, static_cast<double>(all.size()), scan_of[i]});
        all.push_back(g[i]);
      }
    }
    const auto got = cluster_labels(scans, all.size(), {1.0, 1000});
    const auto want = oracle::single_linkage(all, 1.0);
    EXPECT_TRUE(oracle::same_partition(got, want)) << "trial " << trial;
  }
}

TEST(LaneletMap, SectionsCoverTheReferenceLine) {
  const ReferenceLine ref = straight_ref(60.0);
  const LaneletMapModel m = build_lanelet_map({}, ref, LaneletConfig{});
  ASSERT_EQ(m.sections.size(), 3u);
  EXPECT_DOUBLE_EQ(m.sections[2].s_start, 50.0);
  EXPECT_DOUBLE_EQ(m.sections[2].length, 10.0);
  for (const auto& s : m.sections) EXPECT_TRUE(s.degenerate);
}

TEST(LaneletMap, WideGapIsFilledEvenly) {
  const ReferenceLine ref = straight_ref(50.0);
  const std::vector<LaneLine> lanes{straight_lane(-1.75, 0.0, 50.0), straight_lane(12.25, 0.0, 50.0)};
  const LaneletMapModel m = build_lanelet_map(lanes, ref, LaneletConfig{});
  // Gap 14 m > 5 m: ceil(14 / 5) - 1 = 2 inserted per section, at thirds.
  EXPECT_EQ(m.inserted_linestrings, 4u);
  for (const auto& sec : m.sections) {
    ASSERT_EQ(sec.linestrings.size(), 4u);
    EXPECT_NEAR(sec.linestrings[1].mean_t, -1.75 + 14.0 / 3.0, 1e-9);
    EXPECT_NEAR(sec.linestrings[2].mean_t, -1.75 + 28.0 / 3.0, 1e-9);
    EXPECT_TRUE(sec.linestrings[1].interpolated);
    EXPECT_FALSE(sec.linestrings[3].interpolated);
    EXPECT_EQ(sec.lanelets.size(), 3u);
    EXPECT_FALSE(sec.degenerate);
    // Inserted points every metre plus the section end.
    EXPECT_EQ(sec.linestrings[1].points.size(), 26u);
  }
}

TEST(LaneletMap, NearCoincidentLinestringsMerge) {
  const ReferenceLine ref = straight_ref(25.0);
  const std::vector<LaneLine> lanes{straight_lane(1.70, 0.0, 12.0), straight_lane(1.90, 12.5, 24.5),
                                    straight_lane(-1.75, 0.0, 24.5)};
  const LaneletMapModel m = build_lanelet_map(lanes, ref, LaneletConfig{});
  ASSERT_EQ(m.sections.size(), 1u);
  const auto& ls = m.sections[0].linestrings;
  ASSERT_EQ(ls.size(), 2u);
  // 25 points at 1.70 and 25 at 1.90.
  EXPECT_NEAR(ls[1].mean_t, 1.80, 1e-12);
  EXPECT_EQ(ls[1].points.size(), 50u);
  EXPECT_TRUE(std::is_sorted(ls[1].points.begin(), ls[1].points.end(),
                             [](const Vec2& a, const Vec2& b) { return a.x < b.x; }));
}

TEST(LaneletMap, PointsBeyondEndsOrBoundAreIgnored) {
  const ReferenceLine ref = straight_ref(25.0);
  const std::vector<LaneLine> lanes{straight_lane(-1.75, -10.0, -1.0), straight_lane(80.0, 0.0, 24.0),
                                    straight_lane(1.75, 0.0, 0.0)};
  const LaneletMapModel m = build_lanelet_map(lanes, ref, LaneletConfig{});
  EXPECT_TRUE(m.sections[0].linestrings.empty());
}

TEST(MergeSegment, SlopeInterceptProjectionExample) {
  // Last segment y = 0.02 x + 1; projected point (100, 3.0) is 0.3 m away.
  std::vector<LaneLine> lanes{LaneLine{{{{90, 2.8, 0, 0}, {95, 2.9, 0, 0}}}, {}}};
  EXPECT_NEAR(projected_distance(lanes[0].segments[0], {100.0, 3.3}), 0.3, 1e-12);
  EXPECT_EQ(merge_segment({{100, 3.3, 0, 0}, {105, 3.4, 0, 0}}, lanes, 0.25), 1u);
}

TEST(MergeSegment, OnlyTheNearestLaneIsTested) {
  // A skewed dash on the right marking extrapolates onto the left marking
  // 130 m ahead; the new dash must join the left marking's own lane.
  std::vector<LaneLine> lanes;
  merge_segment({{12.35, -1.78, 0, 0}, {14.75, -1.72, 0, 0}}, lanes, 0.25);
  merge_segment({{132.35, 1.75, 0, 0}, {134.75, 1.75, 0, 0}}, lanes, 0.25);
  ASSERT_EQ(lanes.size(), 2u);
  EXPECT_LT(projected_distance(lanes[0].segments.back(), {144.35, 1.75}), 0.25);
  EXPECT_EQ(merge_segment({{144.35, 1.75, 0, 0}, {146.75, 1.75, 0, 0}}, lanes, 0.25), 1u);
  // A solid marking starting far behind is not pulled onto a dashed lane.
  EXPECT_EQ(merge_segment({{12.0, -5.28, 0, 0}, {370.0, -5.22, 0, 0}}, lanes, 0.25), 2u);
}

TEST(LaneLines, NoiseFreeStraightRoadPolylinesFollowMarkings) {
  const SynthResult s = scex::testing::synth_fixture("extra/straight_clean.json");
  const LaneBuildResult r = build_lane_lines(s.log, LaneBuildConfig{});
  ASSERT_FALSE(r.lanes.empty());
  const double tol = 2.0 * 0.0 + 0.05;
  for (const LaneLine& lane : r.lanes) {
    std::size_t near = 0;
    for (const Vec2& p : lane.polyline) {
      double best = 1e9;
      for (double m : s.truth.marking_offsets) best = std::min(best, std::abs(p.y - m));
      near += best <= tol;
    }
    EXPECT_GE(static_cast<double>(near), 0.95 * static_cast<double>(lane.polyline.size()));
    // Every lane stays on one marking.
    double lo = 1e9, hi = -1e9;
    for (const Vec2& p : lane.polyline) {
      lo = std::min(lo, p.y);
      hi = std::max(hi, p.y);
    }
    EXPECT_LT(hi - lo, 0.5);
  }
}

TEST(LaneletMap, GapFillingIsIdempotent) {
  const ReferenceLine ref = straight_ref(75.0);
  const std::vector<LaneLine> lanes{straight_lane(-1.75, 0.0, 75.0), straight_lane(12.25, 0.0, 75.0),
                                    straight_lane(25.0, 30.0, 75.0)};
  const LaneletMapModel first = build_lanelet_map(lanes, ref, LaneletConfig{});
  // Feed every linestring back as a lane line, section by section.
  std::vector<LaneLine> again;
  for (const auto& sec : first.sections) {
    for (const auto& ls : sec.linestrings) {
      LaneLine l;
      l.polyline = ls.points;
      again.push_back(l);
    }
  }
  const LaneletMapModel second = build_lanelet_map(again, ref, LaneletConfig{});
  EXPECT_GT(first.inserted_linestrings, 0u);
  EXPECT_EQ(second.inserted_linestrings, 0u);
  for (std::size_t i = 0; i < first.sections.size(); ++i) {
    EXPECT_EQ(second.sections[i].linestrings.size(), first.sections[i].linestrings.size());
  }
}
