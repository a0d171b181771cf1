#pragma once

// OpenSCENARIO 1.1 subset: two vehicles, lane-position and speed init,
// traveled-distance and relative-distance triggers, speed and lane-change
// actions.

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "scex/scenario_detect.hpp"

namespace scex {

struct OscEntity {
  std::string name;
  double length = 4.5;
  double width = 1.8;
  double height = 1.5;

  friend bool operator==(const OscEntity&, const OscEntity&) = default;
};

struct OscInit {
  std::string entity;
  std::string road_id = "1";
  int lane = -1;
  double s = 0.0;
  double speed = 0.0;

  friend bool operator==(const OscInit&, const OscInit&) = default;
};

enum class OscConditionType { traveled_distance, relative_distance };
enum class OscRule { greater_than, less_than };

struct OscCondition {
  OscConditionType type = OscConditionType::traveled_distance;
  std::string triggering_entity;
  double value = 0.0;
  // Relative distance only: signed longitudinal road-s difference
  // s(triggering_entity) - s(entity_ref).
  std::string entity_ref;
  OscRule rule = OscRule::greater_than;

  friend bool operator==(const OscCondition&, const OscCondition&) = default;
};

enum class OscActionType { absolute_speed, lane_change };

struct OscAction {
  OscActionType type = OscActionType::absolute_speed;
  double speed = 0.0;     // absolute_speed target, linear over duration
  double duration = 0.0;  // seconds
  int target_lane = -1;   // lane_change, absolute lane id, cubic shape

  friend bool operator==(const OscAction&, const OscAction&) = default;
};

struct OscEvent {
  std::string name;
  OscCondition condition;
  OscAction action;

  friend bool operator==(const OscEvent&, const OscEvent&) = default;
};

struct OscManeuverGroup {
  std::string actor;
  std::vector<OscEvent> events;

  friend bool operator==(const OscManeuverGroup&, const OscManeuverGroup&) = default;
};

struct OscDocument {
  std::string description;
  std::string logic_file;
  std::vector<std::pair<std::string, std::string>> parameters;  // name, value (declared as string)
  std::vector<OscEntity> entities;
  std::vector<OscInit> init;
  std::vector<OscManeuverGroup> groups;

  const OscEntity* entity(std::string_view name) const;
  const std::string* parameter(std::string_view name) const;

  friend bool operator==(const OscDocument&, const OscDocument&) = default;
};

struct OscParseResult {
  OscDocument document;
  std::vector<std::string> diagnostics;
};

inline constexpr const char* kEgoName = "Ego";
inline constexpr const char* kAdversaryName = "Adversary";

/// Speed event i (2..m) fires when the actor has traveled distance[i-1] and
/// ramps linearly to speed[i] over window / (m - 1). Throws InputError when
/// the lane change would not leave the adversary's initial lane.
OscDocument build_openscenario(const ScenarioParameters& params, const std::string& odr_file,
                               double lane_change_duration);

/// Throws InvariantError when an event references an undeclared entity, the
/// story is empty, speed events are out of order or the adversary does not
/// have exactly one lane change.
void validate_openscenario(const OscDocument& doc);

std::string serialize_openscenario(const OscDocument& doc);
OscParseResult parse_openscenario(std::string_view text);

}  // namespace scex
