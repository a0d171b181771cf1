#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "scex/ingest.hpp"
#include "scex/road_model.hpp"
#include "scex/scenario_kind.hpp"

namespace scex {

struct Observation {
  double t = 0.0;
  Vec2 position;                // odom
  std::optional<Vec2> velocity;  // odom
  double speed = 0.0;            // reported speed; ego only
};

struct HistorySample {
  double t = 0.0;
  FrenetPose frenet;
  int lane = -1;
  bool out_of_map = false;
  bool clamped = false;  // projected beyond an end of the reference line
  double speed = 0.0;
  double s_traveled = 0.0;
  double lane_width = 0.0;  // width of the section the sample lies in
};

struct TrackHistory {
  std::int64_t track_id = 0;
  ObjectClass cls = ObjectClass::car;
  std::vector<Observation> observations;
  std::vector<HistorySample> samples;

  /// Linear interpolation of the samples; empty outside the sampled span or
  /// across a gap longer than `max_gap`.
  std::optional<HistorySample> at(double t, double max_gap) const;
};

struct HistoryConfig {
  double period = 1.0;
  double max_gap = 2.0;
  double min_duration = 2.0;
  double lateral_bound = 50.0;
};

struct Histories {
  TrackHistory ego;
  std::map<std::int64_t, TrackHistory> tracks;
  std::size_t dropped_tracks = 0;
};

Histories build_histories(const DriveLog& log, const RoadModel& model, const HistoryConfig& cfg);

/// Samples a history's observations at arbitrary times. Times outside the
/// observed span, across long gaps or beyond the lateral bound are skipped.
std::vector<HistorySample> sample_track(const TrackHistory& track, std::span<const double> times,
                                        const RoadModel& model, const HistoryConfig& cfg);

struct ScenarioMark {
  ScenarioKind kind = ScenarioKind::cut_in;
  std::int64_t adversary_id = 0;
  double t_detect = 0.0;  // history sample at which the trigger fired
  double t_cut = 0.0;     // interpolated crossing of the ego lane boundary
  double window_start = 0.0;
  double window_end = 0.0;
  bool clipped_start = false;
  bool clipped_end = false;
  // The sample that armed the candidate lay outside the mapped lanes: the
  // vehicle came from off the road, e.g. a side road.
  bool junction = false;
};

struct DetectConfig {
  double candidate_lateral = 1.5;
  double trigger_lateral = 0.5;
  double ahead_tolerance = 2.0;
  double window_before = 8.0;
  double window_after = 5.0;
  double min_window = 3.0;
};

struct DetectionResult {
  std::vector<ScenarioMark> marks;
  std::size_t short_windows = 0;  // marks dropped because < min_window remained
};

DetectionResult detect_events(const Histories& histories, double log_start, double log_end,
                              const DetectConfig& cfg);

struct ActorParameters {
  double initial_speed = 0.0;
  double initial_position = 0.0;
  int initial_lane = -1;
  std::vector<double> speed;
  std::vector<double> distance;

  friend bool operator==(const ActorParameters&, const ActorParameters&) = default;
};

struct ScenarioParameters {
  ScenarioKind kind = ScenarioKind::cut_in;
  std::int64_t adversary_id = 0;
  double window_start = 0.0;
  double window_end = 0.0;
  ActorParameters ego;
  ActorParameters adversary;
  double triggering_distance = 0.0;
  int final_lane = -1;
  int m = 10;

  friend bool operator==(const ScenarioParameters&, const ScenarioParameters&) = default;
};

struct ExtractConfig {
  int m = 10;
  double lane_change_duration = 3.0;
  double min_window = 3.0;
  double max_gap = 2.0;
};

/// Throws InputError for m < 2, a window shorter than min_window, or an actor
/// missing at a required time.
ScenarioParameters extract_parameters(const ScenarioMark& mark, const Histories& histories,
                                      const RoadModel& model, const ExtractConfig& cfg);

nlohmann::ordered_json mark_to_json(const ScenarioMark& mark);
nlohmann::ordered_json parameters_to_json(const ScenarioParameters& p);

}  // namespace scex
