#include "scex/replay.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "scex/error.hpp"
#include "scex/io.hpp"

namespace scex {

namespace {

struct Ramp {
  double v0, v1, start, duration;
};

struct LaneChange {
  double t0, t1, start, duration;
  int from_lane, to_lane;
};

struct Actor {
  std::string name;
  double s = 0.0;
  double t = 0.0;
  int lane = -1;
  double traveled = 0.0;
  double base_speed = 0.0;
  std::optional<Ramp> ramp;
  std::optional<LaneChange> lc;

  double speed(double tau) const {
    if (!ramp) return base_speed;
    const double u = std::clamp((tau - ramp->start) / ramp->duration, 0.0, 1.0);
    return ramp->v0 + (ramp->v1 - ramp->v0) * u;
  }

  // Exact integral of the piecewise-linear speed over [a, b].
  double distance(double a, double b) const {
    if (!ramp) return base_speed * (b - a);
    const double end = ramp->start + ramp->duration;
    auto trap = [&](double x, double y) { return 0.5 * (speed(x) + speed(y)) * (y - x); };
    if (b <= end || a >= end) return trap(a, b);
    return trap(a, end) + trap(end, b);
  }

  double lateral(double tau) const {
    if (!lc) return t;
    const double u = std::clamp((tau - lc->start) / lc->duration, 0.0, 1.0);
    return lc->t0 + (lc->t1 - lc->t0) * u * u * (3.0 - 2.0 * u);
  }

  int lane_at(double tau) const {
    if (!lc) return lane;
    return (tau - lc->start) / lc->duration >= 0.5 ? lc->to_lane : lc->from_lane;
  }
};

struct Pending {
  const OscEvent* event;
  std::size_t actor;
  bool fired = false;
  double done_at = 0.0;
};

class Interpreter {
 public:
  Interpreter(const OscDocument& osc, const OdrDocument& odr, const ReplayConfig& cfg)
      : osc_(osc), odr_(odr), cfg_(cfg) {
    for (const auto& in : osc.init) {
      Actor a;
      a.name = in.entity;
      a.s = in.s;
      a.lane = in.lane;
      a.t = odr.lane_center(in.lane, in.s);
      a.base_speed = in.speed;
      index_[a.name] = actors_.size();
      actors_.push_back(a);
    }
    for (const auto& g : osc.groups) {
      for (const auto& ev : g.events) pending_.push_back({&ev, actor_index(g.actor)});
    }
  }

  SimTrace run() {
    SimTrace trace;
    trace.dt = cfg_.dt;
    double tau = 0.0;
    std::size_t k = 0;
    fire_ready(tau, trace);
    while (true) {
      for (const Actor& a : actors_) {
        trace.entities[a.name].push_back({tau, a.s, a.lateral(tau), a.lane_at(tau), a.speed(tau), a.traveled});
      }
      if (all_fired()) {
        double done = 0.0;
        for (const auto& p : pending_) done = std::max(done, p.done_at);
        if (tau >= done + cfg_.tail - 1e-9) break;
      } else if (tau > cfg_.timeout) {
        std::string names;
        for (const auto& p : pending_) {
          if (!p.fired) names += (names.empty() ? "" : ", ") + p.event->name;
        }
        throw InputError("replay timeout after " + format_double(cfg_.timeout) + " s; untriggered events: " + names);
      }

      double now = tau;
      double remaining = cfg_.dt;
      while (remaining > 0.0) {
        std::vector<Actor> trial = advance(actors_, now, remaining);
        if (!any_ready(trial)) {
          actors_ = std::move(trial);
          break;
        }
        double lo = 0.0;
        double hi = remaining;
        for (int it = 0; it < 60; ++it) {
          const double mid = 0.5 * (lo + hi);
          if (any_ready(advance(actors_, now, mid))) {
            hi = mid;
          } else {
            lo = mid;
          }
        }
        actors_ = advance(actors_, now, hi);
        now += hi;
        remaining -= hi;
        fire_ready(now, trace);
        if (remaining < 1e-12) break;
      }
      ++k;
      tau = static_cast<double>(k) * cfg_.dt;
      settle(tau);
    }
    return trace;
  }

 private:
  std::size_t actor_index(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw InputError("event references unknown entity '" + name + "'");
    return it->second;
  }

  std::vector<Actor> advance(const std::vector<Actor>& from, double tau, double h) const {
    std::vector<Actor> out = from;
    for (Actor& a : out) {
      const double d_half = a.distance(tau, tau + 0.5 * h);
      const double d = a.distance(tau, tau + h);
      const double s_half = a.s + d_half / (1.0 - odr_.curvature_at(a.s) * a.lateral(tau));
      a.s += d / (1.0 - odr_.curvature_at(s_half) * a.lateral(tau + 0.5 * h));
      a.traveled += d;
    }
    return out;
  }

  // Completed actions collapse into the base state.
  void settle(double tau) {
    for (Actor& a : actors_) {
      if (a.ramp && tau >= a.ramp->start + a.ramp->duration) {
        a.base_speed = a.ramp->v1;
        a.ramp.reset();
      }
      if (a.lc && tau >= a.lc->start + a.lc->duration) {
        a.t = a.lc->t1;
        a.lane = a.lc->to_lane;
        a.lc.reset();
      }
    }
  }

  bool condition_true(const OscCondition& c, const std::vector<Actor>& st) const {
    const Actor& a = st[actor_index(c.triggering_entity)];
    if (c.type == OscConditionType::traveled_distance) return a.traveled >= c.value - 1e-9;
    const double gap = a.s - st[actor_index(c.entity_ref)].s;
    return c.rule == OscRule::greater_than ? gap > c.value : gap < c.value;
  }

  bool any_ready(const std::vector<Actor>& st) const {
    for (const auto& p : pending_) {
      if (!p.fired && condition_true(p.event->condition, st)) return true;
    }
    return false;
  }

  bool all_fired() const {
    return std::all_of(pending_.begin(), pending_.end(), [](const Pending& p) { return p.fired; });
  }

  void fire_ready(double tau, SimTrace& trace) {
    for (Pending& p : pending_) {
      if (p.fired || !condition_true(p.event->condition, actors_)) continue;
      p.fired = true;
      Actor& a = actors_[p.actor];
      const OscAction& act = p.event->action;
      p.done_at = tau + act.duration;
      trace.event_times[p.event->name] = tau;
      if (act.type == OscActionType::absolute_speed) {
        const double v = a.speed(tau);
        a.base_speed = v;
        a.ramp = Ramp{v, act.speed, tau, act.duration};
        trace.max_ramp_rate = std::max(trace.max_ramp_rate, std::abs(act.speed - v) / act.duration);
      } else {
        const double t_now = a.lateral(tau);
        const int from = a.lane_at(tau);
        a.t = t_now;
        a.lane = from;
        a.lc = LaneChange{t_now, odr_.lane_center(act.target_lane, a.s), tau, act.duration, from, act.target_lane};
      }
    }
  }

  const OscDocument& osc_;
  const OdrDocument& odr_;
  ReplayConfig cfg_;
  std::vector<Actor> actors_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<Pending> pending_;
};

}  // namespace

SimTrace interpret(const OscDocument& osc, const OdrDocument& odr, const ReplayConfig& cfg) {
  if (!(cfg.dt > 0.0)) throw InputError("replay dt must be positive");
  return Interpreter(osc, odr, cfg).run();
}

Comparison compare(std::span<const HistorySample> real, double window_start, double window_length,
                   std::span<const SimSample> sim, double dt, double min_overlap) {
  std::unordered_map<long long, const SimSample*> by_step;
  for (const SimSample& s : sim) {
    const long long k = std::llround(s.time / dt);
    if (std::abs(s.time - static_cast<double>(k) * dt) < 1e-6) by_step[k] = &s;
  }
  Comparison cmp;
  double se = 0.0, te = 0.0, ve = 0.0;
  for (const HistorySample& r : real) {
    const double rel = r.t - window_start;
    if (rel < -1e-9 || rel > window_length + 1e-9) continue;
    const long long k = std::llround(rel / dt);
    if (std::abs(rel - static_cast<double>(k) * dt) > 1e-6) continue;
    auto it = by_step.find(k);
    if (it == by_step.end()) continue;
    const SimSample& s = *it->second;
    ComparisonRow row{static_cast<double>(k) * dt, r.frenet.s, s.s, r.frenet.t, s.t, r.speed, s.speed};
    se += (row.s_real - row.s_sim) * (row.s_real - row.s_sim);
    te += (row.t_real - row.t_sim) * (row.t_real - row.t_sim);
    ve += (row.v_real - row.v_sim) * (row.v_real - row.v_sim);
    cmp.report.max_abs_s_error = std::max(cmp.report.max_abs_s_error, std::abs(row.s_real - row.s_sim));
    cmp.rows.push_back(row);
  }
  const double span = cmp.rows.empty() ? 0.0 : cmp.rows.back().time - cmp.rows.front().time;
  if (cmp.rows.size() < 2 || span < min_overlap - 1e-9) {
    throw InputError("real and simulated trajectories overlap for " + format_double(span) + " s, need " +
                     format_double(min_overlap) + " s");
  }
  const double n = static_cast<double>(cmp.rows.size());
  cmp.report.sample_count = cmp.rows.size();
  cmp.report.rmse_s = std::sqrt(se / n);
  cmp.report.rmse_t = std::sqrt(te / n);
  cmp.report.rmse_speed = std::sqrt(ve / n);
  return cmp;
}

void emit_comparison(const Comparison& cmp, const std::filesystem::path& csv_path) {
  std::ostringstream csv;
  csv << "time,s_real,s_sim,t_real,t_sim,v_real,v_sim\n";
  for (const auto& r : cmp.rows) {
    csv << format_double(r.time) << ',' << format_double(r.s_real) << ',' << format_double(r.s_sim) << ','
        << format_double(r.t_real) << ',' << format_double(r.t_sim) << ',' << format_double(r.v_real) << ','
        << format_double(r.v_sim) << '\n';
  }
  write_text_file_atomic(csv_path, csv.str());
  nlohmann::ordered_json j{{"rmse_s", cmp.report.rmse_s},
                           {"rmse_t", cmp.report.rmse_t},
                           {"rmse_speed", cmp.report.rmse_speed},
                           {"max_abs_s_error", cmp.report.max_abs_s_error},
                           {"sample_count", cmp.report.sample_count}};
  auto json_path = csv_path;
  json_path.replace_extension(".json");
  write_text_file_atomic(json_path, j.dump(2) + "\n");
}

}  // namespace scex
