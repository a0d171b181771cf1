#pragma once

#include <cstddef>
#include <vector>

#include "scex/lane_geometry.hpp"
#include "scex/reference_line.hpp"

namespace scex {

struct RoadSection {
  double s_dist = 0.0;
  double length = 0.0;
  double width = 0.0;
  int no_of_lanes = 1;
  int left_lanes = 0;  // lanes with positive ids, included in no_of_lanes
  double curvature = 0.0;
  double curvature_diff = 0.0;
  // Lane layout copied from a neighbour because this section had fewer than
  // two linestrings.
  bool inherited = false;

  int right_lanes() const { return no_of_lanes - left_lanes; }
};

struct RoadModel {
  std::vector<RoadSection> sections;
  ReferenceLine ref_line;
  double lane_width = 0.0;
  std::size_t degenerate_sections = 0;

  const RoadSection& section_at(double s) const;
};

/// Projection onto the ego reference line; throws InputError beyond the
/// lateral bound.
Projection to_frenet(Vec2 p, const ReferenceLine& ref_line, double lateral_bound = 50.0);

/// Throws InputError when no section of the map has two linestrings.
RoadModel sectionize(const LaneletMapModel& map, const ReferenceLine& ref_line);

struct LaneAssignment {
  int lane = -1;
  bool out_of_map = false;

  friend bool operator==(const LaneAssignment&, const LaneAssignment&) = default;
};

/// Lane -1 is the ego lane covering (-w/2, w/2]; right lanes -(k+1) cover
/// (-w/2 - k w, -w/2 - (k-1) w]; left lanes +k cover (w/2 + (k-1) w, w/2 + k w].
/// Offsets beyond the mapped lanes clamp to the edge lane with out_of_map set.
LaneAssignment assign_lane(FrenetPose fp, const RoadModel& model);
LaneAssignment assign_lane(double t, const RoadSection& section);

/// Centre offset of a lane id under the same numbering.
double lane_center(int lane, double width);

}  // namespace scex
