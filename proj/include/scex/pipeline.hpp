#pragma once

// End-to-end extraction of one drive log, and replay comparison of an emitted
// scenario against its source log.

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "scex/config.hpp"
#include "scex/lane_geometry.hpp"
#include "scex/opendrive.hpp"
#include "scex/openscenario.hpp"
#include "scex/replay.hpp"
#include "scex/road_model.hpp"
#include "scex/scenario_detect.hpp"

namespace scex {

/// A module error tagged with the pipeline stage that raised it.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what, int exit_code)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)), exit_code_(exit_code) {}

  const std::string& stage() const noexcept { return stage_; }
  int exit_code() const noexcept { return exit_code_; }

 private:
  std::string stage_;
  int exit_code_;
};

struct EventOutcome {
  ScenarioMark mark;
  std::optional<ScenarioParameters> params;
  std::optional<OscDocument> osc;
  std::string xosc_name;
  std::string xosc_text;
  // Set when this event produced no scenario file.
  std::string skipped_stage;
  std::string skipped_reason;
};

struct DriveResult {
  std::string stem;
  LaneBuildResult lanes;
  LaneletMapModel map;
  RoadModel model;
  Histories histories;
  DetectionResult detection;
  OdrDocument odr;
  std::string xodr_name;
  std::string xodr_text;
  std::vector<EventOutcome> events;
  std::map<std::string, double> timing_ms;
};

/// Runs ingest -> lane_geometry -> road_model -> scenario_detect -> openx.
/// Stage failures raise StageError; a single event that cannot be
/// parameterised is recorded as skipped instead.
DriveResult run_pipeline(const DriveLog& log, const PipelineConfig& cfg, const std::string& stem);

nlohmann::ordered_json report_json(const DriveResult& r, bool include_timing = true);

/// Writes <stem>.xodr, <stem>_scenario<k>.xosc and <stem>_report.json; with
/// `debug_dump` also lane GeoJSON and a per-section CSV.
void write_outputs(const DriveResult& r, const std::filesystem::path& out_dir, bool debug_dump);

struct ScenarioComparison {
  std::int64_t adversary_id = 0;
  double window_start = 0.0;
  double window_end = 0.0;
  SimTrace trace;
  Comparison adversary;
  Comparison ego;
};

/// Replays the scenario and compares both actors against the log over the
/// scenario window. Throws InputError when the log does not contain the
/// scenario's source track over the window.
ScenarioComparison compare_scenario(const DriveLog& log, const OscDocument& osc, const OdrDocument& odr,
                                    const PipelineConfig& cfg);

}  // namespace scex
