#pragma once

// OpenDRIVE 1.4 subset: one road, a planView of lines and spirals, and one
// laneSection plus laneOffset per road section.

#include <string>
#include <string_view>
#include <vector>

#include "scex/road_model.hpp"
#include "scex/spiral.hpp"

namespace scex {

struct OdrGeometry {
  double s = 0.0;
  double x = 0.0;
  double y = 0.0;
  double hdg = 0.0;
  double length = 0.0;
  bool spiral = false;
  double curv_start = 0.0;
  double curv_end = 0.0;

  Pose2 start() const { return {x, y, hdg}; }
  Pose2 end() const;
  double curvature_at(double ds) const;

  friend bool operator==(const OdrGeometry&, const OdrGeometry&) = default;
};

struct OdrLane {
  int id = -1;
  double width = 3.5;

  friend bool operator==(const OdrLane&, const OdrLane&) = default;
};

struct OdrLaneSection {
  double s = 0.0;
  // Lateral shift of the centre lane, emitted as a laneOffset record at s.
  double offset = 0.0;
  std::vector<OdrLane> left;   // ids +1..+L
  std::vector<OdrLane> right;  // ids -1..-R

  friend bool operator==(const OdrLaneSection&, const OdrLaneSection&) = default;
};

struct OdrDocument {
  std::string name = "road";
  std::vector<OdrGeometry> geometries;
  std::vector<OdrLaneSection> lane_sections;

  double length() const;
  const OdrLaneSection& section_at(double s) const;
  double curvature_at(double s) const;
  /// Reference-line offset of a lane centre at s; throws for unknown lanes.
  double lane_center(int lane, double s) const;

  friend bool operator==(const OdrDocument&, const OdrDocument&) = default;
};

struct OdrParseResult {
  OdrDocument document;
  std::vector<std::string> diagnostics;
};

/// Throws InputError for an empty model.
OdrDocument build_opendrive(const RoadModel& model, std::string name);

/// Throws InvariantError when geometry is discontinuous, section starts are
/// not increasing or a section has no lanes.
void validate_opendrive(const OdrDocument& doc);

std::string serialize_opendrive(const OdrDocument& doc);
OdrParseResult parse_opendrive(std::string_view text);

}  // namespace scex
