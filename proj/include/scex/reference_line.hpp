#pragma once

#include <optional>
#include <span>
#include <vector>

#include "scex/geometry.hpp"
#include "scex/ingest.hpp"

namespace scex {

/// Road-aligned coordinates: s is arc length along the reference line, t the
/// signed perpendicular offset (positive to the left of travel).
struct FrenetPose {
  double s = 0.0;
  double t = 0.0;

  friend bool operator==(const FrenetPose&, const FrenetPose&) = default;
};

struct Projection {
  FrenetPose pose;
  // The foot point fell before the first or after the last vertex; s is pinned
  // to the nearest end and t is measured against the extended end segment.
  bool clamped = false;
};

/// Polyline with vertices at a fixed chord length, built from the ego path.
class ReferenceLine {
 public:
  ReferenceLine() = default;

  /// Vertices must be spaced `spacing` apart (chord length).
  ReferenceLine(std::vector<Vec2> vertices, double spacing);

  const std::vector<Vec2>& vertices() const { return vertices_; }
  const std::vector<double>& cumulative_s() const { return cumulative_s_; }
  const std::vector<double>& headings() const { return headings_; }
  double spacing() const { return spacing_; }
  double length() const { return cumulative_s_.empty() ? 0.0 : cumulative_s_.back(); }
  std::size_t size() const { return vertices_.size(); }

  /// Closest-point projection (global minimum over segments, ties resolved to
  /// the smaller s). Empty when |t| exceeds `lateral_bound`.
  std::optional<Projection> try_project(Vec2 p, double lateral_bound = 50.0) const;

  /// Same as try_project but throws InputError beyond the lateral bound.
  Projection project(Vec2 p, double lateral_bound = 50.0) const;

  Vec2 point_at(double s) const;
  double heading_at(double s) const;

  /// Inverse of project() for poses whose foot point lies inside a segment.
  Vec2 from_frenet(FrenetPose f) const;

 private:
  std::size_t segment_for(double s) const;

  std::vector<Vec2> vertices_;
  std::vector<double> cumulative_s_;
  std::vector<double> headings_;
  double spacing_ = 0.5;
};

/// Resamples the ego path at fixed chord spacing. Throws InputError for
/// stationary logs (path shorter than `min_length`).
ReferenceLine build_reference_line(std::span<const EgoPose> poses, double spacing = 0.5,
                                   double min_length = 1.0);

ReferenceLine build_reference_line(std::span<const Vec2> path, double spacing, double min_length);

/// Curvature at every vertex as the gradient of the unwrapped heading.
std::vector<double> heading_gradient(const ReferenceLine& line);

}  // namespace scex
