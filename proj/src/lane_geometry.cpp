#include "scex/lane_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace scex {

namespace {

// Keeps the prefix of `side` (ordered outwards from the forward axis) up to
// the first curb break.
std::size_t road_prefix(const std::vector<const LidarPoint*>& side, const CurbConfig& cfg) {
  double prev_angle = 0.0;
  double prev_d1 = 0.0;
  for (std::size_t i = 1; i < side.size(); ++i) {
    const LidarPoint& a = *side[i - 1];
    const LidarPoint& b = *side[i];
    const double angle = std::atan2(b.z - a.z, std::hypot(b.x - a.x, b.y - a.y));
    const double d1 = angle - prev_angle;
    const double d2 = d1 - prev_d1;
    if (std::abs(d1) > cfg.d1_threshold && std::abs(d2) > cfg.d2_threshold) return i;
    prev_angle = angle;
    prev_d1 = d1;
  }
  return side.size();
}

}  // namespace

std::vector<LidarPoint> filter_road_points(const SensorFrame& frame, const CurbConfig& cfg) {
  std::vector<const LidarPoint*> left;
  std::vector<const LidarPoint*> right;
  for (const auto& p : frame.points) {
    (std::atan2(p.y, p.x) >= 0.0 ? left : right).push_back(&p);
  }
  auto az = [](const LidarPoint* p) { return std::atan2(p->y, p->x); };
  std::stable_sort(left.begin(), left.end(), [&](auto* a, auto* b) { return az(a) < az(b); });
  std::stable_sort(right.begin(), right.end(), [&](auto* a, auto* b) { return az(a) > az(b); });

  const std::size_t keep_left = road_prefix(left, cfg);
  const std::size_t keep_right = road_prefix(right, cfg);
  std::vector<LidarPoint> out;
  out.reserve(keep_left + keep_right);
  for (std::size_t i = keep_right; i-- > 0;) out.push_back(*right[i]);
  for (std::size_t i = 0; i < keep_left; ++i) out.push_back(*left[i]);
  return out;
}

std::vector<LanePoint> extract_lane_points(std::span<const LidarPoint> road_points, const EgoPose& pose,
                                           std::int64_t scan_index, const IntensityRule& rule) {
  std::vector<LanePoint> out;
  if (road_points.size() < rule.min_points || road_points.empty()) return out;
  double threshold = 0.0;
  if (rule.absolute_threshold) {
    threshold = *rule.absolute_threshold;
  } else {
    const double n = static_cast<double>(road_points.size());
    double mean = 0.0;
    for (const auto& p : road_points) mean += p.intensity;
    mean /= n;
    double var = 0.0;
    for (const auto& p : road_points) var += (p.intensity - mean) * (p.intensity - mean);
    threshold = mean + rule.k * std::sqrt(var / n);
  }
  for (const auto& p : road_points) {
    if (p.intensity > threshold) {
      const Vec2 q = to_odom(Vec2{p.x, p.y}, pose);
      out.push_back({q.x, q.y, p.intensity, scan_index});
    }
  }
  return out;
}

std::vector<MarkCluster> ingest_scan_points(std::span<const LanePoint> new_points,
                                            std::vector<MarkCluster>& active_stack, const ClusterConfig& cfg) {
  std::vector<bool> touched(active_stack.size(), false);
  for (const LanePoint& p : new_points) {
    std::size_t best = active_stack.size();
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < active_stack.size(); ++c) {
      for (const LanePoint& q : active_stack[c].points) {
        const double d = distance(p.position(), q.position());
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
    }
    if (best < active_stack.size() && best_d < cfg.join_distance) {
      active_stack[best].points.push_back(p);
      touched[best] = true;
    } else {
      active_stack.push_back(MarkCluster{{p}, 0, true});
      touched.push_back(true);
    }
  }

  std::vector<MarkCluster> promoted;
  std::vector<MarkCluster> kept;
  kept.reserve(active_stack.size());
  for (std::size_t c = 0; c < active_stack.size(); ++c) {
    MarkCluster& cl = active_stack[c];
    cl.inactive_count = touched[c] ? 0 : cl.inactive_count + 1;
    if (cl.inactive_count > cfg.inactivity_limit) {
      cl.active = false;
      promoted.push_back(std::move(cl));
    } else {
      kept.push_back(std::move(cl));
    }
  }
  active_stack = std::move(kept);
  return promoted;
}

double projected_distance(const LineSegment& last, Vec2 p) {
  double ax = last.first.x, ay = last.first.y;
  double bx = last.last.x, by = last.last.y;
  double px = p.x, py = p.y;
  if (std::abs(bx - ax) < 1e-6) {
    std::swap(ax, ay);
    std::swap(bx, by);
    std::swap(px, py);
  }
  const double slope = (by - ay) / (bx - ax);
  const double intercept = ay - slope * ax;
  return std::abs(py - (slope * px + intercept));
}

std::size_t merge_segment(const LineSegment& seg, std::vector<LaneLine>& lane_stack, double merge_distance) {
  // The nearest lane is the one whose last segment passes closest to
  // seg.first; only that lane is tested against the merge distance.
  const Vec2 p = seg.first.position();
  std::size_t best = lane_stack.size();
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < lane_stack.size(); ++i) {
    const LineSegment& last = lane_stack[i].segments.back();
    const Vec2 a = last.first.position();
    const Vec2 d = last.last.position() - a;
    const double u = std::clamp(dot(p - a, d) / dot(d, d), 0.0, 1.0);
    const double dist = distance(p, a + d * u);
    if (dist < best_d) {
      best_d = dist;
      best = i;
    }
  }
  if (best < lane_stack.size() && projected_distance(lane_stack[best].segments.back(), p) < merge_distance) {
    lane_stack[best].segments.push_back(seg);
    return best;
  }
  lane_stack.push_back(LaneLine{{seg}, {}});
  return lane_stack.size() - 1;
}

namespace {

void absorb(const MarkCluster& c, std::vector<LaneLine>& lanes, double merge_distance, LaneBuildResult& r) {
  ++r.cluster_count;
  if (c.points.size() < 2 || c.points.front().position() == c.points.back().position()) {
    ++r.discarded_clusters;
    return;
  }
  const std::size_t idx = merge_segment({c.points.front(), c.points.back()}, lanes, merge_distance);
  for (const auto& p : c.points) lanes[idx].polyline.push_back(p.position());
}

}  // namespace

LaneBuildResult build_lane_lines(const DriveLog& log, const LaneBuildConfig& cfg) {
  LaneBuildResult r;
  std::vector<MarkCluster> active;
  for (std::size_t k = 0; k < log.frames.size(); ++k) {
    const SensorFrame& f = log.frames[k];
    const auto road = filter_road_points(f, cfg.curb);
    const auto pts = extract_lane_points(road, f.ego, static_cast<std::int64_t>(k), cfg.intensity);
    r.lane_point_count += pts.size();
    for (const auto& c : ingest_scan_points(pts, active, cfg.cluster)) absorb(c, r.lanes, cfg.merge_distance, r);
  }
  for (const auto& c : active) absorb(c, r.lanes, cfg.merge_distance, r);
  return r;
}

namespace {

struct Bucket {
  std::vector<std::pair<double, Vec2>> pts;  // (s, odom point)
  double t_sum = 0.0;
};

Linestring finish(Bucket& b) {
  std::stable_sort(b.pts.begin(), b.pts.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  Linestring ls;
  for (const auto& [s, p] : b.pts) ls.points.push_back(p);
  ls.mean_t = b.t_sum / static_cast<double>(b.pts.size());
  return ls;
}

}  // namespace

LaneletMapModel build_lanelet_map(std::span<const LaneLine> lanes, const ReferenceLine& ref_line,
                                  const LaneletConfig& cfg) {
  LaneletMapModel map;
  const double total = ref_line.length();
  const auto n_sections = static_cast<std::size_t>(std::max(1.0, std::ceil(total / cfg.section_length - 1e-9)));
  for (std::size_t i = 0; i < n_sections; ++i) {
    LaneletSection sec;
    sec.s_start = static_cast<double>(i) * cfg.section_length;
    sec.length = std::min(cfg.section_length, total - sec.s_start);
    map.sections.push_back(sec);
  }

  for (const LaneLine& lane : lanes) {
    std::vector<Bucket> buckets(n_sections);
    for (const Vec2& p : lane.polyline) {
      const auto pr = ref_line.try_project(p, cfg.lateral_bound);
      if (!pr || pr->clamped) continue;
      const auto i = std::min(n_sections - 1, static_cast<std::size_t>(pr->pose.s / cfg.section_length));
      buckets[i].pts.emplace_back(pr->pose.s, p);
      buckets[i].t_sum += pr->pose.t;
    }
    for (std::size_t i = 0; i < n_sections; ++i) {
      if (buckets[i].pts.size() >= 2) map.sections[i].linestrings.push_back(finish(buckets[i]));
    }
  }

  for (LaneletSection& sec : map.sections) {
    auto& ls = sec.linestrings;
    std::stable_sort(ls.begin(), ls.end(), [](const auto& a, const auto& b) { return a.mean_t < b.mean_t; });

    // One marking split across several lane lines shows up as near-coincident
    // linestrings; fold them together weighted by point count.
    std::vector<Linestring> merged;
    for (auto& l : ls) {
      if (!merged.empty() && l.mean_t - merged.back().mean_t < cfg.merge_tolerance) {
        Linestring& m = merged.back();
        const double na = static_cast<double>(m.points.size());
        const double nb = static_cast<double>(l.points.size());
        m.mean_t = (m.mean_t * na + l.mean_t * nb) / (na + nb);
        m.points.insert(m.points.end(), l.points.begin(), l.points.end());
        std::vector<std::pair<double, Vec2>> keyed;
        for (const Vec2& p : m.points) keyed.emplace_back(ref_line.project(p, cfg.lateral_bound).pose.s, p);
        std::stable_sort(keyed.begin(), keyed.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
        for (std::size_t i = 0; i < keyed.size(); ++i) m.points[i] = keyed[i].second;
      } else {
        merged.push_back(std::move(l));
      }
    }
    ls = std::move(merged);

    std::vector<Linestring> filled;
    for (std::size_t i = 0; i < ls.size(); ++i) {
      if (i > 0) {
        const double t0 = ls[i - 1].mean_t;
        const double gap = ls[i].mean_t - t0;
        if (gap > cfg.gap_threshold) {
          const int k = static_cast<int>(std::ceil(gap / cfg.gap_threshold)) - 1;
          for (int j = 1; j <= k; ++j) {
            Linestring ins;
            ins.interpolated = true;
            ins.mean_t = t0 + gap * static_cast<double>(j) / static_cast<double>(k + 1);
            const double s_end = sec.s_start + sec.length;
            for (double s = sec.s_start; s < s_end; s += cfg.fill_spacing) {
              ins.points.push_back(ref_line.from_frenet({s, ins.mean_t}));
            }
            ins.points.push_back(ref_line.from_frenet({s_end, ins.mean_t}));
            filled.push_back(std::move(ins));
            ++map.inserted_linestrings;
          }
        }
      }
      filled.push_back(std::move(ls[i]));
    }
    ls = std::move(filled);

    sec.degenerate = ls.size() < 2;
    for (std::size_t i = 0; i + 1 < ls.size(); ++i) sec.lanelets.emplace_back(i, i + 1);
  }
  return map;
}

}  // namespace scex
