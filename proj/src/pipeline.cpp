#include "scex/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "scex/error.hpp"
#include "scex/io.hpp"
#include "scex/xml.hpp"

namespace scex {

namespace {

template <typename F>
auto stage(const char* name, std::map<std::string, double>& timing, F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      timing[name] += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    } else {
      auto r = f();
      timing[name] += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      return r;
    }
  } catch (const StageError&) {
    throw;
  } catch (const InputError& e) {
    throw StageError(name, e.what(), 1);
  } catch (const InvariantError& e) {
    throw StageError(name, e.what(), 2);
  } catch (const std::exception& e) {
    throw StageError(name, e.what(), 2);
  }
}

}  // namespace

DriveResult run_pipeline(const DriveLog& log, const PipelineConfig& cfg, const std::string& stem) {
  DriveResult r;
  r.stem = stem;
  stage("ingest", r.timing_ms, [&] { validate_drive_log(log); });

  const ReferenceLine ref = stage("road_model", r.timing_ms, [&] {
    std::vector<EgoPose> poses;
    for (const auto& f : log.frames) poses.push_back(f.ego);
    return build_reference_line(poses, cfg.reference_spacing, cfg.min_path_length);
  });
  stage("lane_geometry", r.timing_ms, [&] {
    r.lanes = build_lane_lines(log, cfg.lane_build());
    r.map = build_lanelet_map(r.lanes.lanes, ref, cfg.lanelet());
  });
  stage("road_model", r.timing_ms, [&] { r.model = sectionize(r.map, ref); });
  stage("scenario_detect", r.timing_ms, [&] {
    r.histories = build_histories(log, r.model, cfg.history());
    r.detection = detect_events(r.histories, log.start_time(), log.end_time(), cfg.detect());
  });
  r.xodr_name = stem + ".xodr";
  stage("openx", r.timing_ms, [&] {
    r.odr = build_opendrive(r.model, stem);
    r.xodr_text = serialize_opendrive(r.odr);
  });

  int k = 0;
  for (const ScenarioMark& mark : r.detection.marks) {
    EventOutcome ev;
    ev.mark = mark;
    try {
      ev.params = stage("scenario_detect", r.timing_ms, [&] {
        return extract_parameters(mark, r.histories, r.model, cfg.extract());
      });
      ev.osc = stage("openx", r.timing_ms, [&] {
        return build_openscenario(*ev.params, r.xodr_name, cfg.lane_change_duration);
      });
      ev.xosc_text = stage("openx", r.timing_ms, [&] { return serialize_openscenario(*ev.osc); });
      ev.xosc_name = stem + "_scenario" + std::to_string(++k) + ".xosc";
    } catch (const StageError& e) {
      if (e.exit_code() != 1) throw;
      ev.skipped_stage = e.stage();
      ev.skipped_reason = e.what();
      ev.osc.reset();
    }
    r.events.push_back(std::move(ev));
  }
  return r;
}

nlohmann::ordered_json report_json(const DriveResult& r, bool include_timing) {
  using oj = nlohmann::ordered_json;
  int cut_in = 0, cut_out = 0, clipped = 0, junction = 0, skipped = 0;
  oj events = oj::array();
  oj xosc = oj::array();
  for (const auto& ev : r.events) {
    (ev.mark.kind == ScenarioKind::cut_in ? cut_in : cut_out)++;
    if (ev.mark.clipped_start || ev.mark.clipped_end) ++clipped;
    if (ev.mark.junction) ++junction;
    oj e = mark_to_json(ev.mark);
    if (ev.params) e["parameters"] = parameters_to_json(*ev.params);
    if (ev.xosc_name.empty()) {
      ++skipped;
      e["skipped"] = {{"stage", ev.skipped_stage}, {"reason", ev.skipped_reason}};
    } else {
      e["file"] = ev.xosc_name;
      xosc.push_back(ev.xosc_name);
    }
    events.push_back(e);
  }
  oj j;
  j["log"] = r.stem;
  j["counts"] = {{"cut_in", cut_in},
                 {"cut_out", cut_out},
                 {"dropped_tracks", r.histories.dropped_tracks},
                 {"degenerate_sections", r.model.degenerate_sections},
                 {"clipped_windows", clipped},
                 {"junction_flags", junction},
                 {"short_windows", r.detection.short_windows},
                 {"skipped_events", skipped},
                 {"discarded_clusters", r.lanes.discarded_clusters},
                 {"inserted_linestrings", r.map.inserted_linestrings}};
  j["road"] = {{"length", r.model.ref_line.length()},
               {"sections", r.model.sections.size()},
               {"lane_width", r.model.lane_width},
               {"lane_lines", r.lanes.lanes.size()}};
  j["files"] = {{"xodr", r.xodr_name}, {"xosc", xosc}};
  j["events"] = events;
  if (include_timing) {
    oj t = oj::object();
    for (const auto& [k, v] : r.timing_ms) t[k] = std::round(v * 1000.0) / 1000.0;
    j["timing_ms"] = t;
  }
  return j;
}

namespace {

std::string geojson(const DriveResult& r) {
  using oj = nlohmann::ordered_json;
  oj features = oj::array();
  auto line = [](const std::vector<Vec2>& pts) {
    oj coords = oj::array();
    for (const Vec2& p : pts) coords.push_back({p.x, p.y});
    return oj{{"type", "LineString"}, {"coordinates", coords}};
  };
  for (std::size_t i = 0; i < r.lanes.lanes.size(); ++i) {
    features.push_back({{"type", "Feature"},
                        {"properties", {{"layer", "lane_line"}, {"index", i}}},
                        {"geometry", line(r.lanes.lanes[i].polyline)}});
  }
  for (std::size_t s = 0; s < r.map.sections.size(); ++s) {
    const auto& sec = r.map.sections[s];
    for (std::size_t i = 0; i < sec.linestrings.size(); ++i) {
      const auto& ls = sec.linestrings[i];
      features.push_back({{"type", "Feature"},
                          {"properties",
                           {{"layer", "linestring"}, {"section", s}, {"index", i}, {"mean_t", ls.mean_t},
                            {"interpolated", ls.interpolated}}},
                          {"geometry", line(ls.points)}});
    }
  }
  return oj{{"type", "FeatureCollection"}, {"features", features}}.dump() + "\n";
}

std::string sections_csv(const RoadModel& m) {
  std::ostringstream out;
  out << "s_dist,length,width,no_of_lanes,left_lanes,curvature,curvature_diff,inherited\n";
  for (const auto& s : m.sections) {
    out << format_double(s.s_dist) << ',' << format_double(s.length) << ',' << format_double(s.width) << ','
        << s.no_of_lanes << ',' << s.left_lanes << ',' << format_double(s.curvature) << ','
        << format_double(s.curvature_diff) << ',' << (s.inherited ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace

void write_outputs(const DriveResult& r, const std::filesystem::path& out_dir, bool debug_dump) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw InputError("cannot create output directory " + out_dir.string() + ": " + ec.message());
  write_text_file_atomic(out_dir / r.xodr_name, r.xodr_text);
  for (const auto& ev : r.events) {
    if (!ev.xosc_name.empty()) write_text_file_atomic(out_dir / ev.xosc_name, ev.xosc_text);
  }
  write_text_file_atomic(out_dir / (r.stem + "_report.json"), report_json(r).dump(2) + "\n");
  if (debug_dump) {
    write_text_file_atomic(out_dir / (r.stem + "_lanes.geojson"), geojson(r));
    write_text_file_atomic(out_dir / (r.stem + "_sections.csv"), sections_csv(r.model));
  }
}

ScenarioComparison compare_scenario(const DriveLog& log, const OscDocument& osc, const OdrDocument& odr,
                                    const PipelineConfig& cfg) {
  ScenarioComparison out;
  const std::string* id = osc.parameter("source_track_id");
  const std::string* ws = osc.parameter("window_start");
  const std::string* we = osc.parameter("window_end");
  if (!id || !ws || !we) throw InputError("scenario lacks source_track_id/window_start/window_end parameters");
  out.adversary_id = static_cast<std::int64_t>(xml::parse_number(*id));
  out.window_start = xml::parse_number(*ws);
  out.window_end = xml::parse_number(*we);
  if (out.window_start < log.start_time() - 1e-9 || out.window_end > log.end_time() + 1e-9) {
    throw InputError("scenario window [" + *ws + ", " + *we + "] lies outside the log");
  }

  // Only s, t and speed are compared, so a single-section model over the
  // reference line is enough for the real side.
  std::vector<EgoPose> poses;
  for (const auto& f : log.frames) poses.push_back(f.ego);
  RoadModel model;
  model.ref_line = build_reference_line(poses, cfg.reference_spacing, cfg.min_path_length);
  RoadSection sec;
  sec.length = model.ref_line.length();
  sec.width = odr.lane_sections.front().right.empty() ? odr.lane_sections.front().left.front().width
                                                      : odr.lane_sections.front().right.front().width;
  model.sections = {sec};
  model.lane_width = sec.width;

  Histories h;
  h.ego.track_id = -1;
  for (const auto& f : log.frames) {
    h.ego.observations.push_back(
        {f.t, f.ego.position(), Vec2{std::cos(f.ego.heading), std::sin(f.ego.heading)} * f.ego.speed, f.ego.speed});
    for (const auto& o : f.tracks) {
      if (o.track_id != out.adversary_id) continue;
      std::optional<Vec2> v;
      if (o.velocity) v = velocity_to_odom(*o.velocity, f.ego);
      h.tracks[o.track_id].observations.push_back({f.t, to_odom(Vec2{o.x, o.y}, f.ego), v, 0.0});
    }
  }
  if (h.tracks.empty()) throw InputError("log has no track " + *id + " for this scenario");

  const double dt = cfg.replay_dt;
  const double length = out.window_end - out.window_start;
  std::vector<double> times;
  for (long long k = 0; static_cast<double>(k) * dt <= length + 1e-9; ++k) {
    times.push_back(out.window_start + static_cast<double>(k) * dt);
  }
  const auto hist = cfg.history();
  const auto real_adv = sample_track(h.tracks.begin()->second, times, model, hist);
  const auto real_ego = sample_track(h.ego, times, model, hist);

  out.trace = interpret(osc, odr, cfg.replay());
  out.adversary = compare(real_adv, out.window_start, length, out.trace.entities.at(kAdversaryName), dt, cfg.min_overlap);
  out.ego = compare(real_ego, out.window_start, length, out.trace.entities.at(kEgoName), dt, cfg.min_overlap);
  return out;
}

}  // namespace scex
