#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scex/lane_geometry.hpp"
#include "scex/replay.hpp"
#include "scex/scenario_detect.hpp"

namespace scex {

/// Every tunable of the pipeline. Loaded from a `key = value` file; unknown
/// keys are rejected.
struct PipelineConfig {
  // lane points
  double curb_d1_threshold = 0.1;
  double curb_d2_threshold = 0.05;
  double intensity_k = 2.0;
  std::optional<double> intensity_absolute;
  int min_scan_points = 5;
  // clustering and lanes
  double cluster_join_distance = 1.0;
  int inactivity_limit = 20;
  double merge_distance = 0.25;
  double section_length = 25.0;
  double gap_threshold = 5.0;
  double linestring_merge_tolerance = 1.0;
  double fill_point_spacing = 1.0;
  // road model
  double reference_spacing = 0.5;
  double min_path_length = 1.0;
  double lateral_bound = 50.0;
  // histories and detection
  double history_period = 1.0;
  double max_interp_gap = 2.0;
  double min_track_duration = 2.0;
  double candidate_lateral = 1.5;
  double trigger_lateral = 0.5;
  double ahead_tolerance = 2.0;
  double window_before = 8.0;
  double window_after = 5.0;
  double min_window = 3.0;
  // parameters and scenario
  int samples_m = 10;
  double lane_change_duration = 3.0;
  // replay
  double replay_dt = 0.1;
  double replay_timeout = 120.0;
  double replay_tail = 2.0;
  double min_overlap = 3.0;

  /// Sets one key from its text value; throws InputError for unknown keys or
  /// unparsable values.
  void set(std::string_view key, std::string_view value);
  /// Throws InputError when a value is out of range.
  void validate() const;

  static std::vector<std::string> keys();
  std::string get(std::string_view key) const;

  LaneBuildConfig lane_build() const;
  LaneletConfig lanelet() const;
  HistoryConfig history() const;
  DetectConfig detect() const;
  ExtractConfig extract() const;
  ReplayConfig replay() const;
};

PipelineConfig parse_config(std::string_view text);
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace scex
