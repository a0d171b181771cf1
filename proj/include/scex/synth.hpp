#pragma once

// Scripted synthetic drives: a road with a piecewise-linear curvature profile,
// an ego vehicle driving its centreline, a planar lidar ring and tracked
// actors executing lane changes. Ground truth is returned for test oracles.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "scex/geometry.hpp"
#include "scex/ingest.hpp"
#include "scex/scenario_kind.hpp"

namespace scex {

struct MarkingSpec {
  bool dashed = false;
  // Stretches [s0, s1] along the centreline where the marking is absent.
  std::vector<std::pair<double, double>> missing;
};

// Lane ids are ego-relative and follow the OpenDRIVE sign convention: the ego
// drives lane -1 (centre t = 0); lane -k is centred at -(k-1)*w, lane +k at k*w.
struct RoadSpec {
  int lanes_left = 0;
  int lanes_right = 1;
  double lane_width = 3.5;
  // (s, kappa) knots, linear in between and constant beyond the ends.
  std::vector<std::pair<double, double>> curvature;
  // Left to right, lanes_left + lanes_right + 2 entries; empty means all solid.
  std::vector<MarkingSpec> markings;
  bool curb = true;

  int lane_count() const { return lanes_left + lanes_right + 1; }
  bool has_lane(int id) const;
  double lane_center(int id) const;
  std::vector<double> marking_offsets() const;
};

struct SpeedProfile {
  double base = 10.0;
  double amplitude = 0.0;
  double period = 10.0;
  double phase = 0.0;

  double at(double t) const;
};

enum class ManeuverType { cut_in, cut_out, keep_lane, side_join };

struct Maneuver {
  ManeuverType type = ManeuverType::keep_lane;
  double start = 0.0;
  double duration = 3.0;
  std::optional<int> target_lane;
};

struct ActorSpec {
  std::int64_t id = 1;
  ObjectClass cls = ObjectClass::car;
  std::optional<int> lane;        // starting lane
  std::optional<double> lateral;  // starting offset, overrides lane
  SpeedProfile speed;
  double initial_gap = 20.0;  // s_actor - s_ego at t = 0
  // (time, gap): choose the start so that s_actor - s_ego = gap at that time.
  std::optional<std::pair<double, double>> gap_at;
  double visible_from = -1e9;
  double visible_to = 1e9;
  std::vector<Maneuver> maneuvers;
};

struct DriveSpec {
  std::string name = "drive";
  double duration = 10.0;
  double frame_rate_hz = 25.0;
  double noise_sigma = 0.05;
  std::uint64_t seed = 1;
  RoadSpec road;
  SpeedProfile ego_speed;
  std::vector<ActorSpec> actors;
  bool track_velocity = true;
};

struct TrueEvent {
  std::int64_t actor = 0;
  ScenarioKind kind = ScenarioKind::cut_in;
  double t_cross = 0.0;  // midpoint of the lateral transition
  double start = 0.0;
  double duration = 0.0;
  int from_lane = 0;
  int to_lane = 0;
};

struct ActorSample {
  double t = 0.0;
  double s = 0.0;
  double lateral = 0.0;
  double speed = 0.0;
};

struct GroundTruth {
  std::vector<TrueEvent> events;
  std::vector<double> marking_offsets;
  double lane_width = 0.0;
  std::map<std::int64_t, std::vector<ActorSample>> actors;  // at frame times, visible or not
  std::vector<ActorSample> ego;
};

struct SynthResult {
  DriveLog log;
  GroundTruth truth;
};

/// Arc-length parameterised centreline with the ego start at the origin
/// heading along +x.
class SyntheticRoad {
 public:
  SyntheticRoad(const RoadSpec& spec, double s_min, double s_max);

  double kappa(double s) const;
  double heading(double s) const;
  Vec2 point(double s) const;
  Vec2 tangent(double s) const;
  Vec2 normal(double s) const;
  Vec2 from_frenet(double s, double t) const;
  /// Local Newton projection; `s_hint` must be within a few metres.
  std::pair<double, double> to_frenet(Vec2 p, double s_hint) const;

 private:
  std::vector<std::pair<double, double>> knots_;
  double s_min_;
  double ds_;
  std::vector<double> x_, y_, th_;
};

DriveSpec parse_drive_spec(const nlohmann::json& j);
DriveSpec load_drive_spec(const std::filesystem::path& path);

/// Throws InputError for infeasible scripts (nonexistent target lane, a
/// cut-in that does not end in the ego lane, overlapping manoeuvres).
SynthResult synthesize_drive(const DriveSpec& spec);

nlohmann::json truth_to_json(const GroundTruth& truth);

}  // namespace scex
