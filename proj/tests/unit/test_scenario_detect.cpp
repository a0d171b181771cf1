#include <cmath>
#include <functional>
#include <random>

#include <gtest/gtest.h>

#include "scex/error.hpp"
#include "scex/scenario_detect.hpp"

using namespace scex;

namespace {

// Straight road along +x, three lanes (+1, -1, -2) of 3.5 m; s = x + 50.
RoadModel straight_model() {
  RoadModel m;
  const std::vector<Vec2> path{{-50.0, 0.0}, {2000.0, 0.0}};
  m.ref_line = build_reference_line(std::span<const Vec2>(path), 0.5, 1.0);
  RoadSection sec;
  sec.length = m.ref_line.length();
  sec.width = 3.5;
  sec.no_of_lanes = 3;
  sec.left_lanes = 1;
  m.sections = {sec};
  m.lane_width = 3.5;
  return m;
}

using Trajectory = std::function<Vec2(double)>;  // odom position over time

// Ego at 10 m/s along y = 0; actors reported with finite-difference velocity.
DriveLog make_log(double duration, const std::map<std::int64_t, Trajectory>& actors, double ego_speed = 10.0) {
  DriveLog log;
  const int n = static_cast<int>(std::lround(duration * 25.0));
  for (int k = 0; k <= n; ++k) {
    SensorFrame f;
    f.t = k / 25.0;
    f.ego = {f.t, ego_speed * f.t, 0.0, 0.0, ego_speed};
    for (const auto& [id, traj] : actors) {
      const Vec2 p = traj(f.t);
      const Vec2 v = (traj(f.t + 1e-4) - traj(f.t - 1e-4)) * (1.0 / 2e-4);
      f.tracks.push_back({id, ObjectClass::car, p.x - f.ego.x, p.y, v});
    }
    log.frames.push_back(f);
  }
  return log;
}

// Lateral move from y0 to y1, linear over [t0, t0 + d], at gap ahead of ego.
Trajectory lateral_move(double gap, double speed, double y0, double y1, double t0, double d) {
  return [=](double t) {
    const double u = std::clamp((t - t0) / d, 0.0, 1.0);
    return Vec2{gap + speed * t, y0 + (y1 - y0) * u};
  };
}

DetectionResult detect(const DriveLog& log, const RoadModel& m, Histories* out = nullptr) {
  Histories h = build_histories(log, m, HistoryConfig{});
  auto r = detect_events(h, log.start_time(), log.end_time(), DetectConfig{});
  if (out) *out = std::move(h);
  return r;
}

}  // namespace

TEST(Histories, ConstantSpeedEgoOdometer) {
  const RoadModel m = straight_model();
  const Histories h = build_histories(make_log(10.0, {}), m, HistoryConfig{});
  ASSERT_EQ(h.ego.samples.size(), 11u);
  for (std::size_t i = 0; i < 11; ++i) {
    EXPECT_NEAR(h.ego.samples[i].s_traveled, 10.0 * static_cast<double>(i), 1e-9);
    EXPECT_NEAR(h.ego.samples[i].speed, 10.0, 1e-12);
    EXPECT_NEAR(h.ego.samples[i].frenet.s, 50.0 + 10.0 * static_cast<double>(i), 1e-9);
    EXPECT_EQ(h.ego.samples[i].lane, -1);
  }
}

TEST(Histories, ShortTracksAreDropped) {
  const RoadModel m = straight_model();
  DriveLog log = make_log(10.0, {{5, lateral_move(10, 10, 3.5, 3.5, 0, 1)}});
  for (auto& f : log.frames) {
    if (f.t > 1.5) f.tracks.clear();
  }
  const Histories h = build_histories(log, m, HistoryConfig{});
  EXPECT_EQ(h.dropped_tracks, 1u);
  EXPECT_TRUE(h.tracks.empty());
}

TEST(Histories, SpeedFallsBackToFiniteDifference) {
  const RoadModel m = straight_model();
  DriveLog log = make_log(6.0, {{5, lateral_move(10, 12, -3.5, -3.5, 0, 1)}});
  for (auto& f : log.frames) f.tracks[0].velocity.reset();
  const Histories h = build_histories(log, m, HistoryConfig{});
  for (const auto& s : h.tracks.at(5).samples) {
    EXPECT_NEAR(s.speed, 12.0, 1e-6);
    EXPECT_EQ(s.lane, -2);
  }
}

TEST(Detect, ScriptedCutInIsMarkedAtTheBoundaryCrossing) {
  const RoadModel m = straight_model();
  // 3.5 -> 0 over [10, 13]: |t| = 1.75 at 11.5 s.
  const auto r = detect(make_log(30.0, {{7, lateral_move(8, 12, 3.5, 0.0, 10, 3)}}), m);
  ASSERT_EQ(r.marks.size(), 1u);
  const ScenarioMark& mk = r.marks[0];
  EXPECT_EQ(mk.kind, ScenarioKind::cut_in);
  EXPECT_EQ(mk.adversary_id, 7);
  EXPECT_NEAR(mk.t_cut, 11.5, 1e-9);
  EXPECT_NEAR(mk.t_detect, 13.0, 1e-9);
  EXPECT_NEAR(mk.window_start, 3.5, 1e-9);
  EXPECT_NEAR(mk.window_end, 16.5, 1e-9);
  EXPECT_FALSE(mk.clipped_start || mk.clipped_end || mk.junction);
}

TEST(Detect, ScriptedCutOutIsMarked) {
  const RoadModel m = straight_model();
  const auto r = detect(make_log(30.0, {{9, lateral_move(20, 9, 0.0, -3.5, 12, 3)}}), m);
  ASSERT_EQ(r.marks.size(), 1u);
  EXPECT_EQ(r.marks[0].kind, ScenarioKind::cut_out);
  EXPECT_NEAR(r.marks[0].t_cut, 13.5, 1e-9);
  // |t| = 2.33 > 1.5 at the 14 s sample.
  EXPECT_NEAR(r.marks[0].t_detect, 14.0, 1e-9);
}

TEST(Detect, VehiclesBehindTheEgoAreNotCandidates) {
  const RoadModel m = straight_model();
  const auto r = detect(make_log(30.0, {{7, lateral_move(-30, 10, 3.5, 0.0, 10, 3)}}), m);
  EXPECT_TRUE(r.marks.empty());
}

TEST(Detect, LaneKeepingTrafficProducesNothing) {
  const RoadModel m = straight_model();
  const auto r = detect(make_log(30.0, {{1, lateral_move(15, 10, 3.4, 3.6, 5, 20)},
                                        {2, lateral_move(-5, 11, -3.5, -3.5, 0, 1)},
                                        {3, lateral_move(30, 10, 0.2, -0.2, 3, 20)}}),
                        m);
  EXPECT_TRUE(r.marks.empty());
}

TEST(Detect, NearBoundaryWindowsAreClippedOrDropped) {
  const RoadModel m = straight_model();
  auto r = detect(make_log(30.0, {{4, lateral_move(8, 12, 3.5, 0.0, 1.5, 3)}}), m);
  ASSERT_EQ(r.marks.size(), 1u);
  EXPECT_TRUE(r.marks[0].clipped_start);
  EXPECT_DOUBLE_EQ(r.marks[0].window_start, 0.0);

  r = detect(make_log(2.8, {{4, lateral_move(8, 12, 2.5, 0.0, 0.0, 2)}}), m);
  EXPECT_TRUE(r.marks.empty());
  EXPECT_EQ(r.short_windows, 1u);
}

TEST(Detect, SideRoadJoinCarriesJunctionFlag) {
  const RoadModel m = straight_model();
  // Starts 9 m right of the ego path, beyond the mapped lanes.
  const auto r = detect(make_log(30.0, {{3, lateral_move(15, 10, -9.0, 0.0, 10, 4)}}), m);
  ASSERT_EQ(r.marks.size(), 1u);
  EXPECT_EQ(r.marks[0].kind, ScenarioKind::cut_in);
  EXPECT_TRUE(r.marks[0].junction);
}

TEST(Detect, ThresholdConsistencyOnRandomManoeuvres) {
  const RoadModel m = straight_model();
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> gap(-10, 40), y(-6.0, 6.0), t0(2, 20), dur(1.5, 6);
  std::map<std::int64_t, Trajectory> actors;
  for (std::int64_t id = 1; id <= 12; ++id) actors[id] = lateral_move(gap(rng), 10, y(rng), y(rng), t0(rng), dur(rng));
  Histories h;
  const auto r = detect(make_log(30.0, actors), m, &h);
  for (const ScenarioMark& mk : r.marks) {
    const auto& smp = h.tracks.at(mk.adversary_id).samples;
    const auto at = h.tracks.at(mk.adversary_id).at(mk.t_detect, 2.0);
    ASSERT_TRUE(at.has_value());
    bool earlier = false;
    for (const auto& s : smp) {
      if (s.t < mk.t_detect) {
        earlier = earlier || (mk.kind == ScenarioKind::cut_in ? std::abs(s.frenet.t) > 1.5 : std::abs(s.frenet.t) < 0.5);
      }
    }
    EXPECT_TRUE(earlier);
    if (mk.kind == ScenarioKind::cut_in) {
      EXPECT_LT(std::abs(at->frenet.t), 0.5);
    } else {
      EXPECT_GT(std::abs(at->frenet.t), 1.5);
    }
    EXPECT_LE(mk.t_cut, mk.t_detect);
  }
}

TEST(Extract, ConstantSpeedAdversaryDistances) {
  const RoadModel m = straight_model();
  Histories h;
  const auto r = detect(make_log(30.0, {{7, lateral_move(8, 15, 3.5, 0.0, 10, 3)}}), m, &h);
  ASSERT_EQ(r.marks.size(), 1u);
  const ScenarioParameters p = extract_parameters(r.marks[0], h, m, ExtractConfig{});
  ASSERT_EQ(p.adversary.distance.size(), 10u);
  for (int i = 0; i < 10; ++i) {
    EXPECT_NEAR(p.adversary.distance[static_cast<std::size_t>(i)], 15.0 * i * 13.0 / 9.0, 0.2);
    EXPECT_NEAR(p.ego.distance[static_cast<std::size_t>(i)], 10.0 * i * 13.0 / 9.0, 1e-6);
    EXPECT_NEAR(p.ego.speed[static_cast<std::size_t>(i)], 10.0, 1e-9);
  }
  EXPECT_EQ(p.adversary.initial_lane, 1);
  EXPECT_EQ(p.ego.initial_lane, -1);
  EXPECT_EQ(p.final_lane, -1);
  EXPECT_NEAR(p.adversary.initial_speed, 15.0, 1e-6);
  // Lane change initiates at t_cut - 1.5 s = 10 s: gap 8 + 5 * 10 m.
  EXPECT_NEAR(p.triggering_distance, 58.0, 1e-6);
}

TEST(Extract, SamplingTimesAreEvenlySpaced) {
  const RoadModel m = straight_model();
  Histories h;
  const auto r = detect(make_log(30.0, {{7, lateral_move(8, 15, 3.5, 0.0, 10, 3)}}), m, &h);
  ExtractConfig cfg;
  cfg.m = 14;
  const ScenarioParameters p = extract_parameters(r.marks[0], h, m, cfg);
  ASSERT_EQ(p.ego.distance.size(), 14u);
  for (std::size_t i = 1; i < 14; ++i) EXPECT_NEAR(p.ego.distance[i] - p.ego.distance[i - 1], 10.0 * 1.0, 1e-6);
}

TEST(Extract, InvalidRequestsAreInputErrors) {
  const RoadModel m = straight_model();
  Histories h;
  const auto r = detect(make_log(30.0, {{7, lateral_move(8, 15, 3.5, 0.0, 10, 3)}}), m, &h);
  ExtractConfig cfg;
  cfg.m = 1;
  EXPECT_THROW(extract_parameters(r.marks[0], h, m, cfg), InputError);
  ScenarioMark missing = r.marks[0];
  missing.adversary_id = 99;
  EXPECT_THROW(extract_parameters(missing, h, m, ExtractConfig{}), InputError);
  ScenarioMark late = r.marks[0];
  late.window_end = 40.0;
  EXPECT_THROW(extract_parameters(late, h, m, ExtractConfig{}), InputError);
}
