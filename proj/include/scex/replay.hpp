#pragma once

// Kinematic interpreter for the emitted OpenSCENARIO subset, and the
// real-versus-simulated trajectory comparison.

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "scex/opendrive.hpp"
#include "scex/openscenario.hpp"
#include "scex/scenario_detect.hpp"

namespace scex {

struct SimSample {
  double time = 0.0;
  double s = 0.0;
  double t = 0.0;
  int lane = -1;
  double speed = 0.0;
  double traveled = 0.0;

  friend bool operator==(const SimSample&, const SimSample&) = default;
};

struct SimTrace {
  double dt = 0.1;
  std::map<std::string, std::vector<SimSample>> entities;
  std::map<std::string, double> event_times;  // event name -> trigger time
  double max_ramp_rate = 0.0;                 // steepest speed ramp started, m/s^2

  friend bool operator==(const SimTrace&, const SimTrace&) = default;
};

struct ReplayConfig {
  double dt = 0.1;
  double timeout = 120.0;
  double tail = 2.0;  // seconds simulated after the last action completes
};

/// Fixed-step interpretation. Speed follows the piecewise-linear ramps
/// exactly, the lateral offset follows a 3u^2 - 2u^3 profile during a lane
/// change, and s advances by the traveled distance over (1 - kappa t).
/// Conditions that become true inside a step are located by bisection.
/// Throws InputError when an event has not fired by the timeout.
SimTrace interpret(const OscDocument& osc, const OdrDocument& odr, const ReplayConfig& cfg);

struct SimilarityReport {
  double rmse_s = 0.0;
  double rmse_t = 0.0;
  double rmse_speed = 0.0;
  double max_abs_s_error = 0.0;
  std::size_t sample_count = 0;
};

struct ComparisonRow {
  double time = 0.0;  // since window start
  double s_real = 0.0;
  double s_sim = 0.0;
  double t_real = 0.0;
  double t_sim = 0.0;
  double v_real = 0.0;
  double v_sim = 0.0;
};

struct Comparison {
  SimilarityReport report;
  std::vector<ComparisonRow> rows;
};

/// Pairs real samples (absolute times) with simulated samples (times since
/// `window_start`) on common timestamps inside [0, window_length]. Throws
/// InputError when the common span is shorter than `min_overlap`.
Comparison compare(std::span<const HistorySample> real, double window_start, double window_length,
                   std::span<const SimSample> sim, double dt, double min_overlap = 3.0);

/// Writes the CSV and a summary JSON next to it (same stem, .json).
void emit_comparison(const Comparison& cmp, const std::filesystem::path& csv_path);

}  // namespace scex
