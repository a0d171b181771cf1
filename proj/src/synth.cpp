#include "scex/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "scex/error.hpp"
#include "scex/io.hpp"

namespace scex {

using nlohmann::json;

namespace {

// Planar lidar ring in base_link.
constexpr double kRingRadius = 12.0;
constexpr double kRingHalfAngle = 1.3;
constexpr double kRingSpacing = 0.25;
constexpr double kMarkingHalfWidth = 0.03;  // arc length either side of a crossing
constexpr double kCurbOffset = 0.5;
constexpr double kCurbHeight = 0.15;
constexpr double kDashLength = 3.0;
constexpr double kDashPeriod = 12.0;
constexpr double kRoadSampleStep = 0.05;

double smoothstep(double u) { return u * u * (3.0 - 2.0 * u); }
double smoothstep_rate(double u) { return 6.0 * u * (1.0 - u); }

double quantize(double v, double q) { return std::round(v / q) * q; }

}  // namespace

bool RoadSpec::has_lane(int id) const {
  if (id < 0) return -id <= lanes_right + 1;
  return id > 0 && id <= lanes_left;
}

double RoadSpec::lane_center(int id) const {
  return id < 0 ? -static_cast<double>(-id - 1) * lane_width : static_cast<double>(id) * lane_width;
}

std::vector<double> RoadSpec::marking_offsets() const {
  std::vector<double> out;
  for (int j = 0; j <= lane_count(); ++j) {
    out.push_back(lane_width / 2.0 + static_cast<double>(lanes_left - j) * lane_width);
  }
  return out;
}

double SpeedProfile::at(double t) const {
  return base + amplitude * std::sin(2.0 * std::numbers::pi * t / period + phase);
}

SyntheticRoad::SyntheticRoad(const RoadSpec& spec, double s_min, double s_max)
    : knots_(spec.curvature), s_min_(s_min), ds_(kRoadSampleStep) {
  std::sort(knots_.begin(), knots_.end());
  const auto n = static_cast<std::size_t>(std::ceil((s_max - s_min) / ds_)) + 1;
  const auto zero = static_cast<std::size_t>(std::llround(-s_min / ds_));
  x_.assign(n, 0.0);
  y_.assign(n, 0.0);
  th_.assign(n, 0.0);
  auto step = [&](std::size_t from, std::size_t to) {
    const double s0 = s_min_ + static_cast<double>(from) * ds_;
    const double s1 = s_min_ + static_cast<double>(to) * ds_;
    const double h = s1 - s0;
    th_[to] = th_[from] + 0.5 * (kappa(s0) + kappa(s1)) * h;
    // Heading at the midpoint from the trapezoid on the first half step.
    const double th_mid = th_[from] + 0.25 * (kappa(s0) + kappa(s0 + 0.5 * h)) * h;
    x_[to] = x_[from] + h * std::cos(th_mid);
    y_[to] = y_[from] + h * std::sin(th_mid);
  };
  for (std::size_t i = zero; i + 1 < n; ++i) step(i, i + 1);
  for (std::size_t i = zero; i > 0; --i) step(i, i - 1);
}

double SyntheticRoad::kappa(double s) const {
  if (knots_.empty()) return 0.0;
  if (s <= knots_.front().first) return knots_.front().second;
  if (s >= knots_.back().first) return knots_.back().second;
  auto it = std::upper_bound(knots_.begin(), knots_.end(), s,
                             [](double v, const auto& k) { return v < k.first; });
  const auto& b = *it;
  const auto& a = *(it - 1);
  const double u = (s - a.first) / (b.first - a.first);
  return a.second + u * (b.second - a.second);
}

namespace {

struct TableIndex {
  std::size_t i;
  double u;
};

TableIndex locate(double s, double s_min, double ds, std::size_t n) {
  double f = (s - s_min) / ds;
  if (f < 0.0 || f > static_cast<double>(n - 1)) throw InputError("synthetic road too short for the script");
  auto i = static_cast<std::size_t>(std::floor(f));
  if (i >= n - 1) i = n - 2;
  return {i, f - static_cast<double>(i)};
}

}  // namespace

double SyntheticRoad::heading(double s) const {
  const auto [i, u] = locate(s, s_min_, ds_, th_.size());
  return th_[i] + u * (th_[i + 1] - th_[i]);
}

Vec2 SyntheticRoad::point(double s) const {
  const auto [i, u] = locate(s, s_min_, ds_, x_.size());
  return {x_[i] + u * (x_[i + 1] - x_[i]), y_[i] + u * (y_[i + 1] - y_[i])};
}

Vec2 SyntheticRoad::tangent(double s) const {
  const double h = heading(s);
  return {std::cos(h), std::sin(h)};
}

Vec2 SyntheticRoad::normal(double s) const {
  const double h = heading(s);
  return {-std::sin(h), std::cos(h)};
}

Vec2 SyntheticRoad::from_frenet(double s, double t) const { return point(s) + normal(s) * t; }

std::pair<double, double> SyntheticRoad::to_frenet(Vec2 p, double s_hint) const {
  double s = s_hint;
  for (int it = 0; it < 8; ++it) {
    const Vec2 d = p - point(s);
    const double t = dot(d, normal(s));
    const double step = dot(d, tangent(s)) / (1.0 - kappa(s) * t);
    s += step;
    if (std::abs(step) < 1e-10) break;
  }
  return {s, dot(p - point(s), normal(s))};
}

namespace {

struct Transition {
  double start;
  double duration;
  double from;
  double to;
};

struct ActorPlan {
  double t0 = 0.0;
  std::vector<Transition> transitions;

  double lateral(double tau) const {
    double t = t0;
    for (const auto& tr : transitions) {
      if (tau <= tr.start) return t;
      const double u = (tau - tr.start) / tr.duration;
      if (u >= 1.0) {
        t = tr.to;
        continue;
      }
      return tr.from + (tr.to - tr.from) * smoothstep(u);
    }
    return t;
  }

  double lateral_rate(double tau) const {
    for (const auto& tr : transitions) {
      if (tau <= tr.start) return 0.0;
      const double u = (tau - tr.start) / tr.duration;
      if (u >= 1.0) continue;
      return (tr.to - tr.from) * smoothstep_rate(u) / tr.duration;
    }
    return 0.0;
  }
};

int nearest_lane(const RoadSpec& road, double t) {
  int best = -1;
  double best_d = std::abs(t - road.lane_center(-1));
  for (int id = -(road.lanes_right + 1); id <= road.lanes_left; ++id) {
    if (id == 0) continue;
    const double d = std::abs(t - road.lane_center(id));
    if (d < best_d) {
      best_d = d;
      best = id;
    }
  }
  return best;
}

ActorPlan plan_actor(const ActorSpec& a, const RoadSpec& road, std::vector<TrueEvent>& events) {
  ActorPlan plan;
  if (a.lateral) {
    plan.t0 = *a.lateral;
  } else {
    const int lane = a.lane.value_or(-1);
    if (!road.has_lane(lane)) {
      throw InputError("infeasible script: actor " + std::to_string(a.id) + " starts in nonexistent lane " +
                       std::to_string(lane));
    }
    plan.t0 = road.lane_center(lane);
  }
  auto maneuvers = a.maneuvers;
  std::sort(maneuvers.begin(), maneuvers.end(),
            [](const Maneuver& x, const Maneuver& y) { return x.start < y.start; });
  double cur = plan.t0;
  double busy_until = -1e18;
  const std::string who = "infeasible script: actor " + std::to_string(a.id) + ": ";
  for (const auto& m : maneuvers) {
    if (!(m.duration > 0.0)) throw InputError(who + "manoeuvre duration must be positive");
    if (m.start < busy_until) throw InputError(who + "overlapping manoeuvres");
    busy_until = m.start + m.duration;
    if (m.type == ManeuverType::keep_lane) continue;

    const int from_lane = nearest_lane(road, cur);
    int target = -1;
    switch (m.type) {
      case ManeuverType::cut_in:
        target = m.target_lane.value_or(-1);
        if (target != -1) throw InputError(who + "a cut-in must end in the ego lane (-1)");
        if (from_lane == -1 && !a.lateral) throw InputError(who + "cut-in starts in the ego lane");
        break;
      case ManeuverType::cut_out:
        if (from_lane != -1) throw InputError(who + "a cut-out must start in the ego lane");
        target = m.target_lane.value_or(road.has_lane(-2) ? -2 : 1);
        if (target == -1) throw InputError(who + "a cut-out must leave the ego lane");
        break;
      case ManeuverType::side_join:
        target = m.target_lane.value_or(-1);
        break;
      case ManeuverType::keep_lane:
        break;
    }
    if (!road.has_lane(target)) {
      throw InputError(who + "target lane " + std::to_string(target) + " does not exist");
    }
    const double to = road.lane_center(target);
    plan.transitions.push_back({m.start, m.duration, cur, to});
    if (m.type != ManeuverType::side_join) {
      events.push_back({a.id, m.type == ManeuverType::cut_in ? ScenarioKind::cut_in : ScenarioKind::cut_out,
                        m.start + m.duration / 2.0, m.start, m.duration, from_lane, target});
    }
    cur = to;
  }
  return plan;
}

double ego_s(const SpeedProfile& p, double t) {
  const double w = 2.0 * std::numbers::pi / p.period;
  return p.base * t + p.amplitude / w * (std::cos(p.phase) - std::cos(w * t + p.phase));
}

// Longitudinal position of an actor on a fine grid; ds/dtau = v / (1 - kappa t).
std::vector<double> integrate_actor(const ActorSpec& a, const ActorPlan& plan, const SyntheticRoad& road,
                                    double s0, double h, std::size_t steps) {
  std::vector<double> s(steps + 1);
  s[0] = s0;
  auto rate = [&](double tau, double sv) {
    const double v = a.speed.at(tau);
    return v / (1.0 - road.kappa(sv) * plan.lateral(tau));
  };
  for (std::size_t k = 0; k < steps; ++k) {
    const double tau = static_cast<double>(k) * h;
    const double mid = s[k] + 0.5 * h * rate(tau, s[k]);
    s[k + 1] = s[k] + h * rate(tau + 0.5 * h, mid);
  }
  return s;
}

double sample(const std::vector<double>& s, double h, double tau) {
  const double f = tau / h;
  auto i = static_cast<std::size_t>(std::floor(f));
  if (i + 1 >= s.size()) return s.back();
  const double u = f - static_cast<double>(i);
  return s[i] + u * (s[i + 1] - s[i]);
}

bool marking_present(const MarkingSpec& m, double s) {
  for (const auto& [a, b] : m.missing) {
    if (s >= a && s <= b) return false;
  }
  if (!m.dashed) return true;
  double phase = std::fmod(s, kDashPeriod);
  if (phase < 0.0) phase += kDashPeriod;
  return phase < kDashLength;
}

}  // namespace

SynthResult synthesize_drive(const DriveSpec& spec) {
  const RoadSpec& rs = spec.road;
  if (rs.lane_count() < 2) throw InputError("road needs at least 2 lanes");
  if (rs.lanes_left < 0 || rs.lanes_right < 0) throw InputError("lane counts must be non-negative");
  if (!(rs.lane_width > 0.0)) throw InputError("lane width must be positive");
  if (!rs.markings.empty() && rs.markings.size() != static_cast<std::size_t>(rs.lane_count() + 1)) {
    throw InputError("markings list must have one entry per lane boundary");
  }
  if (!(spec.frame_rate_hz > 0.0) || !(spec.duration > 0.0)) throw InputError("duration and frame rate must be positive");
  if (spec.noise_sigma < 0.0) throw InputError("noise sigma must be non-negative");

  const auto frames = static_cast<std::size_t>(std::llround(spec.duration * spec.frame_rate_hz));
  if (frames < 2) throw InputError("drive too short");
  const double dt = 1.0 / spec.frame_rate_hz;
  const double t_end = static_cast<double>(frames - 1) * dt;

  SynthResult out;
  GroundTruth& truth = out.truth;
  truth.lane_width = rs.lane_width;
  truth.marking_offsets = rs.marking_offsets();

  const double s_ego_end = ego_s(spec.ego_speed, t_end);
  const SyntheticRoad road(rs, -250.0, s_ego_end + 500.0);

  std::vector<ActorPlan> plans;
  for (const auto& a : spec.actors) plans.push_back(plan_actor(a, rs, truth.events));
  std::sort(truth.events.begin(), truth.events.end(),
            [](const TrueEvent& x, const TrueEvent& y) { return x.t_cross < y.t_cross; });

  // Actor longitudinal positions on a substep grid.
  const double h = dt / 4.0;
  std::vector<std::vector<double>> actor_s;
  for (std::size_t k = 0; k < spec.actors.size(); ++k) {
    const auto& a = spec.actors[k];
    double horizon = t_end;
    if (a.gap_at) horizon = std::max(horizon, a.gap_at->first);
    const auto steps = static_cast<std::size_t>(std::ceil(horizon / h)) + 1;
    double s0 = a.initial_gap;
    std::vector<double> s;
    if (a.gap_at) {
      const auto [tg, gap] = *a.gap_at;
      s0 = ego_s(spec.ego_speed, tg) + gap - a.speed.base * tg;
      for (int it = 0; it < 60; ++it) {
        s = integrate_actor(a, plans[k], road, s0, h, steps);
        const double err = gap - (sample(s, h, tg) - ego_s(spec.ego_speed, tg));
        s0 += err;
        if (std::abs(err) < 1e-9) break;
      }
    }
    s = integrate_actor(a, plans[k], road, s0, h, steps);
    actor_s.push_back(std::move(s));
  }

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> road_intensity(0.18, 0.22);
  std::uniform_real_distribution<double> mark_intensity(0.85, 0.95);

  const auto offsets = rs.marking_offsets();
  std::vector<MarkingSpec> markings = rs.markings;
  if (markings.empty()) markings.resize(offsets.size());
  const double curb_left = offsets.front() + kCurbOffset;
  const double curb_right = offsets.back() - kCurbOffset;
  const double daz = kRingSpacing / kRingRadius;
  const auto ring_n = static_cast<std::size_t>(std::floor(2.0 * kRingHalfAngle / daz)) + 1;

  DriveLog& log = out.log;
  log.frame_rate_hz = spec.frame_rate_hz;
  log.sensor = "synthetic planar ring, radius 12 m";
  log.frames.reserve(frames);

  for (std::size_t n = 0; n < frames; ++n) {
    const double tau = static_cast<double>(n) * dt;
    SensorFrame f;
    f.t = tau;
    const double se = ego_s(spec.ego_speed, tau);
    const Vec2 pe = road.point(se);
    f.ego = {tau, pe.x, pe.y, normalize_angle(road.heading(se)), spec.ego_speed.at(tau)};
    truth.ego.push_back({tau, se, 0.0, f.ego.speed});

    auto frenet_of = [&](double az) {
      const Vec2 q = to_odom(Vec2{kRingRadius * std::cos(az), kRingRadius * std::sin(az)}, f.ego);
      return road.to_frenet(q, se + kRingRadius * std::cos(az));
    };

    struct RingPoint {
      double az;
      double z;
      bool marking;
    };
    std::vector<RingPoint> ring;
    std::vector<std::pair<double, double>> st(ring_n);
    for (std::size_t k = 0; k < ring_n; ++k) {
      const double az = -kRingHalfAngle + static_cast<double>(k) * daz;
      st[k] = frenet_of(az);
      const double t = st[k].second;
      const bool beyond = rs.curb && (t > curb_left || t < curb_right);
      ring.push_back({az, beyond ? kCurbHeight : 0.0, false});
    }
    for (std::size_t k = 0; k + 1 < ring_n; ++k) {
      for (std::size_t j = 0; j < offsets.size(); ++j) {
        const double c = offsets[j];
        const double f0 = st[k].second - c;
        const double f1 = st[k + 1].second - c;
        if (f0 * f1 >= 0.0) continue;
        double lo = ring[k].az;
        double hi = ring[k + 1].az;
        for (int it = 0; it < 50; ++it) {
          const double mid = 0.5 * (lo + hi);
          const double fm = frenet_of(mid).second - c;
          if ((fm < 0.0) == (f0 < 0.0)) {
            lo = mid;
          } else {
            hi = mid;
          }
        }
        const double az = 0.5 * (lo + hi);
        if (!marking_present(markings[j], frenet_of(az).first)) continue;
        const double half = kMarkingHalfWidth / kRingRadius;
        ring.push_back({az - half, 0.0, true});
        ring.push_back({az + half, 0.0, true});
      }
    }
    std::stable_sort(ring.begin(), ring.end(), [](const RingPoint& a, const RingPoint& b) { return a.az < b.az; });

    f.points.reserve(ring.size());
    for (const auto& rp : ring) {
      const double ex = spec.noise_sigma * noise(rng);
      const double ey = spec.noise_sigma * noise(rng);
      const double inten = rp.marking ? mark_intensity(rng) : road_intensity(rng);
      f.points.push_back({quantize(kRingRadius * std::cos(rp.az) + ex, 1e-4),
                          quantize(kRingRadius * std::sin(rp.az) + ey, 1e-4), quantize(rp.z, 1e-4),
                          quantize(inten, 1e-3)});
    }

    for (std::size_t k = 0; k < spec.actors.size(); ++k) {
      const auto& a = spec.actors[k];
      const double sa = sample(actor_s[k], h, tau);
      const double ta = plans[k].lateral(tau);
      const double v = a.speed.at(tau);
      truth.actors[a.id].push_back({tau, sa, ta, v});
      if (tau < a.visible_from || tau > a.visible_to) continue;
      const Vec2 p = road.from_frenet(sa, ta);
      const Vec2 vel = road.tangent(sa) * v + road.normal(sa) * plans[k].lateral_rate(tau);
      TrackedObject obj;
      obj.track_id = a.id;
      obj.cls = a.cls;
      const Vec2 pb = to_base_link(p, f.ego);
      obj.x = pb.x;
      obj.y = pb.y;
      if (spec.track_velocity) obj.velocity = velocity_to_base_link(vel, f.ego);
      f.tracks.push_back(obj);
    }
    log.frames.push_back(std::move(f));
  }
  return out;
}

namespace {

ManeuverType maneuver_type_from(const std::string& s) {
  if (s == "cut_in") return ManeuverType::cut_in;
  if (s == "cut_out") return ManeuverType::cut_out;
  if (s == "keep_lane") return ManeuverType::keep_lane;
  if (s == "side_join") return ManeuverType::side_join;
  throw InputError("unknown manoeuvre type '" + s + "'");
}

SpeedProfile parse_speed(const json& j, double reference) {
  SpeedProfile p;
  if (j.is_number()) {
    p.base = j.get<double>();
    return p;
  }
  if (j.contains("offset")) {
    p.base = reference + j.at("offset").get<double>();
  } else {
    p.base = j.value("base", reference);
  }
  p.amplitude = j.value("amplitude", 0.0);
  p.period = j.value("period", 10.0);
  p.phase = j.value("phase", 0.0);
  if (!(p.period > 0.0)) throw InputError("speed period must be positive");
  if (p.base - std::abs(p.amplitude) <= 0.0) throw InputError("speed profile must stay positive");
  return p;
}

std::pair<double, double> parse_pair(const json& j) {
  if (!j.is_array() || j.size() != 2) throw InputError("expected a two-element array");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

DriveSpec parse_drive_spec(const json& j) {
  try {
    DriveSpec d;
    d.name = j.value("name", d.name);
    d.duration = j.value("duration", d.duration);
    d.frame_rate_hz = j.value("frame_rate_hz", d.frame_rate_hz);
    d.noise_sigma = j.value("noise_sigma", d.noise_sigma);
    d.seed = j.value("seed", d.seed);
    d.track_velocity = j.value("track_velocity", d.track_velocity);
    if (j.contains("road")) {
      const json& r = j.at("road");
      d.road.lanes_left = r.value("lanes_left", d.road.lanes_left);
      d.road.lanes_right = r.value("lanes_right", d.road.lanes_right);
      d.road.lane_width = r.value("lane_width", d.road.lane_width);
      d.road.curb = r.value("curb", d.road.curb);
      if (r.contains("curvature")) {
        for (const auto& k : r.at("curvature")) d.road.curvature.push_back(parse_pair(k));
      }
      if (r.contains("markings")) {
        for (const auto& m : r.at("markings")) {
          MarkingSpec ms;
          ms.dashed = m.value("dashed", false);
          if (m.contains("missing")) {
            for (const auto& g : m.at("missing")) ms.missing.push_back(parse_pair(g));
          }
          d.road.markings.push_back(std::move(ms));
        }
      }
    }
    if (j.contains("ego")) d.ego_speed = parse_speed(j.at("ego").at("speed"), 10.0);
    if (j.contains("actors")) {
      for (const auto& a : j.at("actors")) {
        ActorSpec as;
        as.id = a.at("id").get<std::int64_t>();
        as.cls = object_class_from_string(a.value("class", std::string("car")));
        if (a.contains("lane")) as.lane = a.at("lane").get<int>();
        if (a.contains("lateral")) as.lateral = a.at("lateral").get<double>();
        as.speed = parse_speed(a.at("speed"), d.ego_speed.base);
        as.initial_gap = a.value("initial_gap", as.initial_gap);
        if (a.contains("gap_at")) as.gap_at = parse_pair(a.at("gap_at"));
        if (a.contains("visible")) std::tie(as.visible_from, as.visible_to) = parse_pair(a.at("visible"));
        if (a.contains("maneuvers")) {
          for (const auto& m : a.at("maneuvers")) {
            Maneuver mv;
            mv.type = maneuver_type_from(m.at("type").get<std::string>());
            mv.start = m.value("start", 0.0);
            mv.duration = m.value("duration", 3.0);
            if (m.contains("target_lane")) mv.target_lane = m.at("target_lane").get<int>();
            as.maneuvers.push_back(mv);
          }
        }
        d.actors.push_back(std::move(as));
      }
    }
    return d;
  } catch (const json::exception& e) {
    throw InputError(std::string("invalid drive spec: ") + e.what());
  }
}

DriveSpec load_drive_spec(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("drive spec " + path.string() + ": " + e.what(), e.byte);
  }
  return parse_drive_spec(j);
}

json truth_to_json(const GroundTruth& truth) {
  json events = json::array();
  for (const auto& e : truth.events) {
    events.push_back({{"actor", e.actor},
                      {"kind", std::string(to_string(e.kind))},
                      {"t_cross", e.t_cross},
                      {"start", e.start},
                      {"duration", e.duration},
                      {"from_lane", e.from_lane},
                      {"to_lane", e.to_lane}});
  }
  return {{"events", events}, {"lane_width", truth.lane_width}, {"marking_offsets", truth.marking_offsets}};
}

}  // namespace scex
