#include "scex/scenario_detect.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "scex/error.hpp"
#include "scex/io.hpp"

namespace scex {

namespace {

Vec2 lerp(Vec2 a, Vec2 b, double u) { return a + (b - a) * u; }

}  // namespace

std::optional<HistorySample> TrackHistory::at(double t, double max_gap) const {
  if (samples.empty() || t < samples.front().t - 1e-9 || t > samples.back().t + 1e-9) return std::nullopt;
  auto it = std::lower_bound(samples.begin(), samples.end(), t,
                             [](const HistorySample& s, double v) { return s.t < v; });
  if (it == samples.end()) --it;
  if (std::abs(it->t - t) <= 1e-9) return *it;
  if (it == samples.begin()) return *it;
  const HistorySample& a = *(it - 1);
  const HistorySample& b = *it;
  if (b.t - a.t > max_gap + 1e-9) return std::nullopt;
  const double u = (t - a.t) / (b.t - a.t);
  HistorySample r = u < 0.5 ? a : b;
  r.t = t;
  r.frenet = {a.frenet.s + u * (b.frenet.s - a.frenet.s), a.frenet.t + u * (b.frenet.t - a.frenet.t)};
  r.speed = a.speed + u * (b.speed - a.speed);
  r.s_traveled = a.s_traveled + u * (b.s_traveled - a.s_traveled);
  r.clamped = a.clamped || b.clamped;
  return r;
}

std::vector<HistorySample> sample_track(const TrackHistory& track, std::span<const double> times,
                                        const RoadModel& model, const HistoryConfig& cfg) {
  const auto& obs = track.observations;
  std::vector<HistorySample> out;
  if (obs.empty()) return out;
  std::vector<double> odo(obs.size(), 0.0);
  for (std::size_t i = 1; i < obs.size(); ++i) odo[i] = odo[i - 1] + distance(obs[i - 1].position, obs[i].position);

  for (double tau : times) {
    if (tau < obs.front().t - 1e-9 || tau > obs.back().t + 1e-9) continue;
    auto it = std::upper_bound(obs.begin(), obs.end(), tau, [](double v, const Observation& o) { return v < o.t; });
    std::size_t i = static_cast<std::size_t>(it - obs.begin());
    i = i == 0 ? 0 : i - 1;
    if (i + 1 >= obs.size()) i = obs.size() >= 2 ? obs.size() - 2 : 0;

    HistorySample smp;
    smp.t = tau;
    Vec2 pos;
    if (obs.size() == 1) {
      pos = obs[0].position;
      smp.speed = obs[0].velocity ? norm(*obs[0].velocity) : 0.0;
    } else {
      const Observation& a = obs[i];
      const Observation& b = obs[i + 1];
      const double span = b.t - a.t;
      if (span > cfg.max_gap + 1e-9) continue;
      const double u = std::clamp((tau - a.t) / span, 0.0, 1.0);
      pos = lerp(a.position, b.position, u);
      smp.s_traveled = odo[i] + u * (odo[i + 1] - odo[i]);
      if (a.velocity && b.velocity) {
        smp.speed = norm(lerp(*a.velocity, *b.velocity, u));
      } else {
        smp.speed = (odo[i + 1] - odo[i]) / span;
      }
    }
    const auto pr = model.ref_line.try_project(pos, cfg.lateral_bound);
    if (!pr) continue;
    smp.frenet = pr->pose;
    smp.clamped = pr->clamped;
    const RoadSection& sec = model.section_at(pr->pose.s);
    const LaneAssignment la = assign_lane(pr->pose.t, sec);
    smp.lane = la.lane;
    smp.out_of_map = la.out_of_map;
    smp.lane_width = sec.width;
    out.push_back(smp);
  }
  return out;
}

namespace {

std::vector<double> grid_for(double first, double last, double t0, double period) {
  std::vector<double> g;
  const auto k0 = static_cast<long long>(std::ceil((first - t0) / period - 1e-9));
  const auto k1 = static_cast<long long>(std::floor((last - t0) / period + 1e-9));
  for (long long k = k0; k <= k1; ++k) g.push_back(t0 + static_cast<double>(k) * period);
  return g;
}

}  // namespace

Histories build_histories(const DriveLog& log, const RoadModel& model, const HistoryConfig& cfg) {
  Histories h;
  h.ego.track_id = -1;
  for (const SensorFrame& f : log.frames) {
    h.ego.observations.push_back(
        {f.t, f.ego.position(), Vec2{std::cos(f.ego.heading), std::sin(f.ego.heading)} * f.ego.speed, f.ego.speed});
    for (const TrackedObject& o : f.tracks) {
      TrackHistory& th = h.tracks[o.track_id];
      th.track_id = o.track_id;
      th.cls = o.cls;
      std::optional<Vec2> v;
      if (o.velocity) v = velocity_to_odom(*o.velocity, f.ego);
      th.observations.push_back({f.t, to_odom(Vec2{o.x, o.y}, f.ego), v, 0.0});
    }
  }
  const double t0 = log.start_time();
  const auto ego_grid = grid_for(log.start_time(), log.end_time(), t0, cfg.period);
  h.ego.samples = sample_track(h.ego, ego_grid, model, cfg);

  for (auto it = h.tracks.begin(); it != h.tracks.end();) {
    TrackHistory& th = it->second;
    const double first = th.observations.front().t;
    const double last = th.observations.back().t;
    if (last - first < cfg.min_duration) {
      ++h.dropped_tracks;
      it = h.tracks.erase(it);
      continue;
    }
    th.samples = sample_track(th, grid_for(first, last, t0, cfg.period), model, cfg);
    ++it;
  }
  return h;
}

namespace {

// Time at which the lateral offset crosses the ego lane boundary between the
// last sample on the `from_outside` side before j and its successor.
double crossing_time(const std::vector<HistorySample>& s, std::size_t j, bool from_outside) {
  for (std::size_t i = j; i-- > 0;) {
    const double half = s[i].lane_width / 2.0;
    const bool outside = std::abs(s[i].frenet.t) > half;
    if (outside != from_outside) continue;
    const HistorySample& a = s[i];
    const HistorySample& b = s[i + 1];
    const double ref_t = from_outside ? a.frenet.t : b.frenet.t;
    const double boundary = std::copysign(half, ref_t);
    const double den = b.frenet.t - a.frenet.t;
    if (std::abs(den) < 1e-12) return b.t;
    const double u = std::clamp((boundary - a.frenet.t) / den, 0.0, 1.0);
    return a.t + u * (b.t - a.t);
  }
  return s[j].t;
}

}  // namespace

DetectionResult detect_events(const Histories& histories, double log_start, double log_end,
                              const DetectConfig& cfg) {
  DetectionResult result;
  std::unordered_map<long long, const HistorySample*> ego_at;
  // History samples share one grid anchored at the log start; match by the
  // rounded grid index.
  const double period = histories.ego.samples.size() >= 2
                            ? histories.ego.samples[1].t - histories.ego.samples[0].t
                            : 1.0;
  auto key = [&](double t) { return std::llround((t - log_start) / period); };
  for (const auto& s : histories.ego.samples) ego_at[key(s.t)] = &s;

  for (const auto& [id, track] : histories.tracks) {
    bool armed_in = false;
    bool armed_out = false;
    // A candidate first armed from outside the mapped lanes (side road).
    bool armed_oom = false;
    const auto& smp = track.samples;
    for (std::size_t j = 0; j < smp.size(); ++j) {
      const HistorySample& a = smp[j];
      auto e = ego_at.find(key(a.t));
      if (e == ego_at.end() || a.clamped || e->second->clamped) continue;
      const HistorySample& ego = *e->second;
      const bool same = !a.out_of_map && a.lane == ego.lane;
      const double lat = std::abs(a.frenet.t);
      const bool ahead = a.frenet.s >= ego.frenet.s - cfg.ahead_tolerance;

      auto emit = [&](ScenarioKind kind) {
        ScenarioMark m;
        m.kind = kind;
        m.adversary_id = id;
        m.t_detect = a.t;
        m.t_cut = crossing_time(smp, j, kind == ScenarioKind::cut_in);
        m.junction = kind == ScenarioKind::cut_in && armed_oom;
        m.window_start = m.t_cut - cfg.window_before;
        m.window_end = m.t_cut + cfg.window_after;
        if (m.window_start < log_start) {
          m.window_start = log_start;
          m.clipped_start = true;
        }
        if (m.window_end > log_end) {
          m.window_end = log_end;
          m.clipped_end = true;
        }
        if (m.window_end - m.window_start < cfg.min_window) {
          ++result.short_windows;
        } else {
          result.marks.push_back(m);
        }
      };

      if (armed_in && same && lat < cfg.trigger_lateral) {
        emit(ScenarioKind::cut_in);
        armed_in = false;
      } else if (!same && lat > cfg.candidate_lateral && ahead) {
        if (!armed_in) armed_oom = a.out_of_map;
        armed_in = true;
      }

      if (armed_out && !same && lat > cfg.candidate_lateral) {
        emit(ScenarioKind::cut_out);
        armed_out = false;
      } else if (same && lat < cfg.trigger_lateral && ahead) {
        armed_out = true;
      }
    }
  }
  std::stable_sort(result.marks.begin(), result.marks.end(), [](const ScenarioMark& x, const ScenarioMark& y) {
    if (x.t_cut != y.t_cut) return x.t_cut < y.t_cut;
    return x.adversary_id < y.adversary_id;
  });
  return result;
}

ScenarioParameters extract_parameters(const ScenarioMark& mark, const Histories& histories,
                                      const RoadModel& model, const ExtractConfig& cfg) {
  if (cfg.m < 2) throw InputError("sample count m must be at least 2");
  const double ws = mark.window_start;
  const double we = mark.window_end;
  if (we - ws < cfg.min_window) throw InputError("scenario window shorter than the minimum");
  auto it = histories.tracks.find(mark.adversary_id);
  if (it == histories.tracks.end()) {
    throw InputError("adversary " + std::to_string(mark.adversary_id) + " has no history");
  }
  const TrackHistory& adv = it->second;

  auto need = [&](const TrackHistory& h, double t, const char* who) {
    auto s = h.at(t, cfg.max_gap);
    if (!s) throw InputError(std::string(who) + " not observed at t = " + format_double(t));
    return *s;
  };

  ScenarioParameters p;
  p.kind = mark.kind;
  p.adversary_id = mark.adversary_id;
  p.window_start = ws;
  p.window_end = we;
  p.m = cfg.m;

  auto fill = [&](const TrackHistory& h, ActorParameters& out, const char* who) {
    const HistorySample first = need(h, ws, who);
    out.initial_speed = first.speed;
    out.initial_position = first.frenet.s;
    out.initial_lane = assign_lane(first.frenet, model).lane;
    for (int i = 0; i < cfg.m; ++i) {
      const double tau = i + 1 == cfg.m ? we : ws + (we - ws) * static_cast<double>(i) / (cfg.m - 1);
      const HistorySample s = need(h, tau, who);
      out.speed.push_back(s.speed);
      out.distance.push_back(i == 0 ? 0.0 : std::max(out.distance.back(), s.s_traveled - first.s_traveled));
    }
  };
  fill(histories.ego, p.ego, "ego");
  fill(adv, p.adversary, "adversary");

  const double t_init = std::max(ws, mark.t_cut - cfg.lane_change_duration / 2.0);
  p.triggering_distance = need(adv, t_init, "adversary").frenet.s - need(histories.ego, t_init, "ego").frenet.s;
  p.final_lane = assign_lane(need(adv, we, "adversary").frenet, model).lane;
  return p;
}

nlohmann::ordered_json mark_to_json(const ScenarioMark& m) {
  return {{"kind", std::string(to_string(m.kind))},
          {"adversary_id", m.adversary_id},
          {"t_detect", m.t_detect},
          {"t_cut", m.t_cut},
          {"window", {m.window_start, m.window_end}},
          {"clipped_start", m.clipped_start},
          {"clipped_end", m.clipped_end},
          {"junction", m.junction}};
}

nlohmann::ordered_json parameters_to_json(const ScenarioParameters& p) {
  auto actor = [](const ActorParameters& a) {
    return nlohmann::ordered_json{{"initial_speed", a.initial_speed},
                                  {"initial_position", a.initial_position},
                                  {"initial_lane", a.initial_lane},
                                  {"speed", a.speed},
                                  {"distance", a.distance}};
  };
  return {{"kind", std::string(to_string(p.kind))},
          {"adversary_id", p.adversary_id},
          {"window", {p.window_start, p.window_end}},
          {"m", p.m},
          {"ego", actor(p.ego)},
          {"adversary", actor(p.adversary)},
          {"triggering_distance", p.triggering_distance},
          {"final_lane", p.final_lane}};
}

}  // namespace scex
