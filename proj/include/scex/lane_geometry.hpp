#pragma once

// Lane-marking extraction and lane construction: curb filtering of each scan,
// intensity-based lane points, the two-stack incremental clustering and the
// lanelet map with missing-lane filling.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "scex/geometry.hpp"
#include "scex/ingest.hpp"
#include "scex/reference_line.hpp"

namespace scex {

struct CurbConfig {
  double d1_threshold = 0.1;   // rad, first difference of the inclination angle
  double d2_threshold = 0.05;  // rad, second difference
};

struct IntensityRule {
  double k = 2.0;
  std::optional<double> absolute_threshold;
  std::size_t min_points = 5;
};

struct ClusterConfig {
  double join_distance = 1.0;
  int inactivity_limit = 20;
};

struct LanePoint {
  double x = 0.0;
  double y = 0.0;
  double intensity = 0.0;
  std::int64_t scan_index = 0;

  Vec2 position() const { return {x, y}; }
  friend bool operator==(const LanePoint&, const LanePoint&) = default;
};

struct MarkCluster {
  std::vector<LanePoint> points;
  int inactive_count = 0;
  bool active = true;
};

struct LineSegment {
  LanePoint first;
  LanePoint last;
};

struct LaneLine {
  std::vector<LineSegment> segments;
  std::vector<Vec2> polyline;
};

/// Road-surface points of one scan. Each side of the forward axis is walked
/// outwards by azimuth and cut at the first curb-like break in the
/// inclination angle between adjacent points.
std::vector<LidarPoint> filter_road_points(const SensorFrame& frame, const CurbConfig& cfg);

/// Points brighter than the scan's adaptive threshold, in odom.
std::vector<LanePoint> extract_lane_points(std::span<const LidarPoint> road_points, const EgoPose& pose,
                                           std::int64_t scan_index, const IntensityRule& rule);

/// Feeds one scan into the active stack. Returns the clusters promoted by
/// this scan, in stack order.
std::vector<MarkCluster> ingest_scan_points(std::span<const LanePoint> new_points,
                                            std::vector<MarkCluster>& active_stack, const ClusterConfig& cfg);

/// Distance between `p` and the point of the extended line through `last`
/// that shares p's abscissa (ordinate when `last` is vertical).
double projected_distance(const LineSegment& last, Vec2 p);

/// Appends `seg` to the nearest lane (last segment closest to seg.first, ties
/// to the lower index) when seg.first lies within `merge_distance` of that
/// lane's extended last segment; otherwise opens a new lane. Returns the index
/// of the receiving lane.
std::size_t merge_segment(const LineSegment& seg, std::vector<LaneLine>& lane_stack, double merge_distance);

struct LaneBuildResult {
  std::vector<LaneLine> lanes;
  std::size_t cluster_count = 0;
  std::size_t discarded_clusters = 0;  // fewer than 2 points, or first == last
  std::size_t lane_point_count = 0;
};

struct LaneBuildConfig {
  CurbConfig curb;
  IntensityRule intensity;
  ClusterConfig cluster;
  double merge_distance = 0.25;
};

/// Sequential fold of every scan through both stacks; clusters still active
/// at the end of the log are flushed.
LaneBuildResult build_lane_lines(const DriveLog& log, const LaneBuildConfig& cfg);

struct Linestring {
  std::vector<Vec2> points;  // odom, ordered by s
  double mean_t = 0.0;
  bool interpolated = false;
};

struct LaneletSection {
  double s_start = 0.0;
  double length = 0.0;
  std::vector<Linestring> linestrings;  // ascending mean_t (right to left)
  std::vector<std::pair<std::size_t, std::size_t>> lanelets;  // (right, left) linestring indices
  bool degenerate = false;
};

struct LaneletMapModel {
  std::vector<LaneletSection> sections;
  std::size_t inserted_linestrings = 0;
};

struct LaneletConfig {
  double section_length = 25.0;
  double gap_threshold = 5.0;
  double merge_tolerance = 1.0;  // linestrings closer than this are one marking
  double lateral_bound = 50.0;
  double fill_spacing = 1.0;     // point spacing of inserted linestrings
};

LaneletMapModel build_lanelet_map(std::span<const LaneLine> lanes, const ReferenceLine& ref_line,
                                  const LaneletConfig& cfg);

}  // namespace scex
