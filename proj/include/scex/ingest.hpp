#pragma once

// Neutral drive-log format: JSON Lines, one header object followed by one
// SensorFrame object per line. Positions of points and tracks are in the
// vehicle (base_link) frame; ego poses are in the fixed odom frame anchored at
// the start of the drive.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scex/geometry.hpp"

namespace scex {

enum class ObjectClass { car, truck, other };

std::string_view to_string(ObjectClass c);
ObjectClass object_class_from_string(std::string_view s);

struct LidarPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double intensity = 0.0;  // normalized to [0, 1]

  friend bool operator==(const LidarPoint&, const LidarPoint&) = default;
};

struct EgoPose {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // (-pi, pi]
  double speed = 0.0;

  Vec2 position() const { return {x, y}; }
  friend bool operator==(const EgoPose&, const EgoPose&) = default;
};

struct TrackedObject {
  std::int64_t track_id = 0;
  ObjectClass cls = ObjectClass::car;
  double x = 0.0;
  double y = 0.0;
  // Absolute velocity expressed in base_link axes; absent when the tracker
  // does not report one.
  std::optional<Vec2> velocity;

  friend bool operator==(const TrackedObject&, const TrackedObject&) = default;
};

struct SensorFrame {
  double t = 0.0;
  EgoPose ego;
  std::vector<LidarPoint> points;
  std::vector<TrackedObject> tracks;

  friend bool operator==(const SensorFrame&, const SensorFrame&) = default;
};

struct DriveLog {
  double frame_rate_hz = 25.0;
  std::string sensor;
  std::vector<SensorFrame> frames;

  double start_time() const { return frames.front().t; }
  double end_time() const { return frames.back().t; }

  friend bool operator==(const DriveLog&, const DriveLog&) = default;
};

inline constexpr int kDriveLogFormatVersion = 1;

/// Reads a drive log; every invariant is checked and violations are reported
/// as ParseError carrying the 1-based line number.
DriveLog load_drive_log(const std::filesystem::path& path);
DriveLog read_drive_log(std::istream& in);

void write_drive_log(const DriveLog& log, std::ostream& out);
void save_drive_log(const DriveLog& log, const std::filesystem::path& path);

/// Throws InputError when the in-memory log violates a format invariant.
void validate_drive_log(const DriveLog& log);

// base_link <-> odom rigid transforms.
Vec2 to_odom(Vec2 p, const EgoPose& pose);
Vec2 to_base_link(Vec2 p, const EgoPose& pose);
Vec2 velocity_to_odom(Vec2 v, const EgoPose& pose);
Vec2 velocity_to_base_link(Vec2 v, const EgoPose& pose);

}  // namespace scex
