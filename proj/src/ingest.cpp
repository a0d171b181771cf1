#include "scex/ingest.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "scex/error.hpp"
#include "scex/io.hpp"

namespace scex {

using nlohmann::json;

std::string_view to_string(ObjectClass c) {
  switch (c) {
    case ObjectClass::car: return "car";
    case ObjectClass::truck: return "truck";
    case ObjectClass::other: return "other";
  }
  return "other";
}

ObjectClass object_class_from_string(std::string_view s) {
  if (s == "car") return ObjectClass::car;
  if (s == "truck") return ObjectClass::truck;
  if (s == "other") return ObjectClass::other;
  throw InputError("unknown object class '" + std::string(s) + "'");
}

Vec2 to_odom(Vec2 p, const EgoPose& pose) {
  return rotate(p, pose.heading) + Vec2{pose.x, pose.y};
}

Vec2 to_base_link(Vec2 p, const EgoPose& pose) {
  return rotate(p - Vec2{pose.x, pose.y}, -pose.heading);
}

Vec2 velocity_to_odom(Vec2 v, const EgoPose& pose) { return rotate(v, pose.heading); }

Vec2 velocity_to_base_link(Vec2 v, const EgoPose& pose) { return rotate(v, -pose.heading); }

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& msg) {
  throw ParseError("drive log line " + std::to_string(line) + ": " + msg, line);
}

const json& require(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(line, std::string("missing required field '") + key + "'");
  return *it;
}

double number(const json& obj, const char* key, std::size_t line) {
  const json& v = require(obj, key, line);
  if (!v.is_number()) fail(line, std::string("field '") + key + "' is not a number");
  double d = v.get<double>();
  if (!std::isfinite(d)) fail(line, std::string("field '") + key + "' is not finite");
  return d;
}

double array_number(const json& arr, std::size_t i, std::size_t line) {
  if (!arr.at(i).is_number()) fail(line, "point component is not a number");
  double d = arr.at(i).get<double>();
  if (!std::isfinite(d)) fail(line, "point component is not finite");
  return d;
}

SensorFrame parse_frame(const json& j, std::size_t line, double intensity_scale) {
  if (!j.is_object()) fail(line, "frame record is not an object");
  SensorFrame f;
  f.t = number(j, "t", line);

  const json& ego = require(j, "ego", line);
  if (!ego.is_object()) fail(line, "'ego' is not an object");
  f.ego.t = number(ego, "t", line);
  f.ego.x = number(ego, "x", line);
  f.ego.y = number(ego, "y", line);
  f.ego.heading = normalize_angle(number(ego, "heading", line));
  f.ego.speed = number(ego, "speed", line);
  if (f.ego.speed < 0.0) fail(line, "negative ego speed");
  if (f.ego.t != f.t) fail(line, "frame t differs from ego.t");

  const json& pts = require(j, "points", line);
  if (!pts.is_array()) fail(line, "'points' is not an array");
  f.points.reserve(pts.size());
  for (const json& p : pts) {
    if (!p.is_array() || p.size() != 4) fail(line, "point must be [x, y, z, intensity]");
    LidarPoint lp{array_number(p, 0, line), array_number(p, 1, line), array_number(p, 2, line),
                  array_number(p, 3, line) / intensity_scale};
    if (lp.intensity < 0.0 || lp.intensity > 1.0) fail(line, "intensity outside [0, 1]");
    f.points.push_back(lp);
  }

  const json& tracks = require(j, "tracks", line);
  if (!tracks.is_array()) fail(line, "'tracks' is not an array");
  std::set<std::int64_t> seen;
  for (const json& t : tracks) {
    if (!t.is_object()) fail(line, "track is not an object");
    TrackedObject obj;
    const json& id = require(t, "id", line);
    if (!id.is_number_integer()) fail(line, "track id is not an integer");
    obj.track_id = id.get<std::int64_t>();
    const json& cls = require(t, "class", line);
    if (!cls.is_string()) fail(line, "track class is not a string");
    try {
      obj.cls = object_class_from_string(cls.get<std::string>());
    } catch (const InputError& e) {
      fail(line, e.what());
    }
    obj.x = number(t, "x", line);
    obj.y = number(t, "y", line);
    const bool has_vx = t.contains("vx") && !t["vx"].is_null();
    const bool has_vy = t.contains("vy") && !t["vy"].is_null();
    if (has_vx != has_vy) fail(line, "track velocity needs both vx and vy");
    if (has_vx) obj.velocity = Vec2{number(t, "vx", line), number(t, "vy", line)};
    if (!seen.insert(obj.track_id).second) {
      fail(line, "duplicate track id " + std::to_string(obj.track_id) + " in frame");
    }
    f.tracks.push_back(obj);
  }
  return f;
}

}  // namespace

DriveLog read_drive_log(std::istream& in) {
  DriveLog log;
  std::string text;
  std::size_t line_no = 0;
  bool have_header = false;
  double intensity_scale = 1.0;

  while (std::getline(in, text)) {
    ++line_no;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      fail(line_no, std::string("malformed JSON: ") + e.what());
    }
    if (!have_header) {
      if (!j.is_object()) fail(line_no, "header is not an object");
      const double version = number(j, "format_version", line_no);
      if (version != kDriveLogFormatVersion) fail(line_no, "unsupported format_version");
      log.frame_rate_hz = number(j, "frame_rate_hz", line_no);
      if (log.frame_rate_hz <= 0.0) fail(line_no, "frame_rate_hz must be positive");
      if (j.contains("sensor")) {
        if (!j["sensor"].is_string()) fail(line_no, "'sensor' is not a string");
        log.sensor = j["sensor"].get<std::string>();
      }
      if (j.contains("intensity_scale")) {
        intensity_scale = number(j, "intensity_scale", line_no);
        if (intensity_scale <= 0.0) fail(line_no, "intensity_scale must be positive");
      }
      have_header = true;
      continue;
    }
    SensorFrame f = parse_frame(j, line_no, intensity_scale);
    if (!log.frames.empty() && f.t <= log.frames.back().t) {
      fail(line_no, "non-monotonic timestamp " + format_double(f.t) + " after " +
                        format_double(log.frames.back().t));
    }
    log.frames.push_back(std::move(f));
  }
  if (!have_header) throw ParseError("drive log is empty (missing header)", 0);
  if (log.frames.size() < 2) throw ParseError("drive log needs at least 2 frames", line_no);
  return log;
}

DriveLog load_drive_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open drive log " + path.string());
  return read_drive_log(in);
}

namespace {

void write_frame(const SensorFrame& f, std::string& out) {
  auto num = [&out](double v) { out += format_double(v); };
  out += "{\"t\":";
  num(f.t);
  out += ",\"ego\":{\"t\":";
  num(f.ego.t);
  out += ",\"x\":";
  num(f.ego.x);
  out += ",\"y\":";
  num(f.ego.y);
  out += ",\"heading\":";
  num(f.ego.heading);
  out += ",\"speed\":";
  num(f.ego.speed);
  out += "},\"points\":[";
  for (std::size_t i = 0; i < f.points.size(); ++i) {
    const auto& p = f.points[i];
    if (i) out += ',';
    out += '[';
    num(p.x);
    out += ',';
    num(p.y);
    out += ',';
    num(p.z);
    out += ',';
    num(p.intensity);
    out += ']';
  }
  out += "],\"tracks\":[";
  for (std::size_t i = 0; i < f.tracks.size(); ++i) {
    const auto& t = f.tracks[i];
    if (i) out += ',';
    out += "{\"id\":" + std::to_string(t.track_id) + ",\"class\":\"" +
           std::string(to_string(t.cls)) + "\",\"x\":";
    num(t.x);
    out += ",\"y\":";
    num(t.y);
    if (t.velocity) {
      out += ",\"vx\":";
      num(t.velocity->x);
      out += ",\"vy\":";
      num(t.velocity->y);
    }
    out += '}';
  }
  out += "]}\n";
}

}  // namespace

void write_drive_log(const DriveLog& log, std::ostream& out) {
  validate_drive_log(log);
  std::string buf = "{\"frame_rate_hz\":" + format_double(log.frame_rate_hz) +
                    ",\"format_version\":" + std::to_string(kDriveLogFormatVersion) +
                    ",\"sensor\":" + json(log.sensor).dump() + "}\n";
  out << buf;
  for (const auto& f : log.frames) {
    buf.clear();
    write_frame(f, buf);
    out << buf;
  }
}

void save_drive_log(const DriveLog& log, const std::filesystem::path& path) {
  std::ostringstream ss;
  write_drive_log(log, ss);
  write_text_file_atomic(path, ss.str());
}

void validate_drive_log(const DriveLog& log) {
  if (!(log.frame_rate_hz > 0.0)) throw InputError("frame rate must be positive");
  if (log.frames.size() < 2) throw InputError("drive log needs at least 2 frames");
  for (std::size_t i = 0; i < log.frames.size(); ++i) {
    const auto& f = log.frames[i];
    const std::string where = "frame " + std::to_string(i) + ": ";
    if (i > 0 && f.t <= log.frames[i - 1].t) throw InputError(where + "non-monotonic timestamp");
    if (f.t != f.ego.t) throw InputError(where + "t differs from ego.t");
    if (f.ego.speed < 0.0) throw InputError(where + "negative ego speed");
    if (!(f.ego.heading > -std::numbers::pi && f.ego.heading <= std::numbers::pi)) {
      throw InputError(where + "heading not normalized");
    }
    for (const auto& p : f.points) {
      if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
        throw InputError(where + "non-finite point");
      }
      if (p.intensity < 0.0 || p.intensity > 1.0) throw InputError(where + "intensity outside [0, 1]");
    }
    std::set<std::int64_t> seen;
    for (const auto& t : f.tracks) {
      if (!seen.insert(t.track_id).second) throw InputError(where + "duplicate track id");
    }
  }
}

}  // namespace scex
