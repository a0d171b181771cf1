#include "scex/config.hpp"

#include <charconv>
#include <sstream>
#include <variant>

#include "scex/error.hpp"
#include "scex/io.hpp"
#include "scex/xml.hpp"

namespace scex {

namespace {

using Slot = std::variant<double*, int*, std::optional<double>*>;

struct Entry {
  const char* key;
  Slot slot;
};

std::vector<Entry> table(PipelineConfig& c) {
  return {
      {"curb_d1_threshold", &c.curb_d1_threshold},
      {"curb_d2_threshold", &c.curb_d2_threshold},
      {"intensity_k", &c.intensity_k},
      {"intensity_absolute", &c.intensity_absolute},
      {"min_scan_points", &c.min_scan_points},
      {"cluster_join_distance", &c.cluster_join_distance},
      {"inactivity_limit", &c.inactivity_limit},
      {"merge_distance", &c.merge_distance},
      {"section_length", &c.section_length},
      {"gap_threshold", &c.gap_threshold},
      {"linestring_merge_tolerance", &c.linestring_merge_tolerance},
      {"fill_point_spacing", &c.fill_point_spacing},
      {"reference_spacing", &c.reference_spacing},
      {"min_path_length", &c.min_path_length},
      {"lateral_bound", &c.lateral_bound},
      {"history_period", &c.history_period},
      {"max_interp_gap", &c.max_interp_gap},
      {"min_track_duration", &c.min_track_duration},
      {"candidate_lateral", &c.candidate_lateral},
      {"trigger_lateral", &c.trigger_lateral},
      {"ahead_tolerance", &c.ahead_tolerance},
      {"window_before", &c.window_before},
      {"window_after", &c.window_after},
      {"min_window", &c.min_window},
      {"samples_m", &c.samples_m},
      {"lane_change_duration", &c.lane_change_duration},
      {"replay_dt", &c.replay_dt},
      {"replay_timeout", &c.replay_timeout},
      {"replay_tail", &c.replay_tail},
      {"min_overlap", &c.min_overlap},
  };
}

std::string_view trim(std::string_view s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string_view::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

void PipelineConfig::set(std::string_view key, std::string_view value) {
  value = trim(value);
  for (const Entry& e : table(*this)) {
    if (key != e.key) continue;
    const std::string where = "config key '" + std::string(key) + "'";
    if (auto* d = std::get_if<double*>(&e.slot)) {
      try {
        **d = xml::parse_number(value);
      } catch (const InputError&) {
        throw InputError(where + ": not a number: '" + std::string(value) + "'");
      }
    } else if (auto* i = std::get_if<int*>(&e.slot)) {
      int v = 0;
      auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
      if (ec != std::errc{} || p != value.data() + value.size()) {
        throw InputError(where + ": not an integer: '" + std::string(value) + "'");
      }
      **i = v;
    } else {
      auto* o = std::get<std::optional<double>*>(e.slot);
      if (value == "none" || value.empty()) {
        o->reset();
      } else {
        try {
          *o = xml::parse_number(value);
        } catch (const InputError&) {
          throw InputError(where + ": not a number: '" + std::string(value) + "'");
        }
      }
    }
    return;
  }
  throw InputError("unknown config key '" + std::string(key) + "'");
}

std::vector<std::string> PipelineConfig::keys() {
  PipelineConfig c;
  std::vector<std::string> out;
  for (const Entry& e : table(c)) out.emplace_back(e.key);
  return out;
}

std::string PipelineConfig::get(std::string_view key) const {
  PipelineConfig copy = *this;
  for (const Entry& e : table(copy)) {
    if (key != e.key) continue;
    if (auto* d = std::get_if<double*>(&e.slot)) return format_double(**d);
    if (auto* i = std::get_if<int*>(&e.slot)) return std::to_string(**i);
    auto* o = std::get<std::optional<double>*>(e.slot);
    return *o ? format_double(**o) : "none";
  }
  throw InputError("unknown config key '" + std::string(key) + "'");
}

void PipelineConfig::validate() const {
  PipelineConfig copy = *this;
  for (const Entry& e : table(copy)) {
    bool ok = true;
    if (auto* d = std::get_if<double*>(&e.slot)) {
      ok = **d > 0.0;
    } else if (auto* i = std::get_if<int*>(&e.slot)) {
      ok = **i > 0;
    } else if (auto* o = std::get_if<std::optional<double>*>(&e.slot); *o && **o) {
      ok = ***o >= 0.0;
    }
    if (!ok) throw InputError("config key '" + std::string(e.key) + "' must be positive");
  }
  if (samples_m < 2) throw InputError("config key 'samples_m' must be at least 2");
  if (trigger_lateral >= candidate_lateral) {
    throw InputError("trigger_lateral must be smaller than candidate_lateral");
  }
}

LaneBuildConfig PipelineConfig::lane_build() const {
  LaneBuildConfig c;
  c.curb = {curb_d1_threshold, curb_d2_threshold};
  c.intensity.k = intensity_k;
  c.intensity.absolute_threshold = intensity_absolute;
  c.intensity.min_points = static_cast<std::size_t>(min_scan_points);
  c.cluster = {cluster_join_distance, inactivity_limit};
  c.merge_distance = merge_distance;
  return c;
}

LaneletConfig PipelineConfig::lanelet() const {
  return {section_length, gap_threshold, linestring_merge_tolerance, lateral_bound, fill_point_spacing};
}

HistoryConfig PipelineConfig::history() const {
  return {history_period, max_interp_gap, min_track_duration, lateral_bound};
}

DetectConfig PipelineConfig::detect() const {
  return {candidate_lateral, trigger_lateral, ahead_tolerance, window_before, window_after, min_window};
}

ExtractConfig PipelineConfig::extract() const {
  return {samples_m, lane_change_duration, min_window, max_interp_gap};
}

ReplayConfig PipelineConfig::replay() const { return {replay_dt, replay_timeout, replay_tail}; }

PipelineConfig parse_config(std::string_view text) {
  PipelineConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view v = line;
    if (const auto hash = v.find('#'); hash != std::string_view::npos) v = v.substr(0, hash);
    v = trim(v);
    if (v.empty() || v.front() == '[') continue;
    const auto eq = v.find('=');
    if (eq == std::string_view::npos) throw ParseError("config line " + std::to_string(line_no) + ": expected key = value", line_no);
    try {
      cfg.set(trim(v.substr(0, eq)), trim(v.substr(eq + 1)));
    } catch (const ParseError&) {
      throw;
    } catch (const InputError& e) {
      throw ParseError("config line " + std::to_string(line_no) + ": " + e.what(), line_no);
    }
  }
  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) { return parse_config(read_text_file(path)); }

}  // namespace scex
