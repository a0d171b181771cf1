#include "scex/road_model.hpp"

#include <algorithm>
#include <cmath>

#include "scex/error.hpp"

namespace scex {

const RoadSection& RoadModel::section_at(double s) const {
  if (sections.empty()) throw InvariantError("road model has no sections");
  auto it = std::upper_bound(sections.begin(), sections.end(), s,
                             [](double v, const RoadSection& sec) { return v < sec.s_dist; });
  if (it == sections.begin()) return sections.front();
  return *(it - 1);
}

Projection to_frenet(Vec2 p, const ReferenceLine& ref_line, double lateral_bound) {
  return ref_line.project(p, lateral_bound);
}

RoadModel sectionize(const LaneletMapModel& map, const ReferenceLine& ref_line) {
  RoadModel model;
  model.ref_line = ref_line;
  const auto kappa = heading_gradient(ref_line);
  const auto& vs = ref_line.cumulative_s();

  std::vector<RoadSection> out;
  double prev_curvature = 0.0;
  for (std::size_t i = 0; i < map.sections.size(); ++i) {
    const LaneletSection& ms = map.sections[i];
    RoadSection sec;
    sec.s_dist = i == 0 ? 0.0 : out.back().s_dist + out.back().length;
    sec.length = ms.length;

    const double s_end = ms.s_start + ms.length;
    const bool last = i + 1 == map.sections.size();
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t v = 0; v < vs.size(); ++v) {
      if (vs[v] >= ms.s_start && (vs[v] < s_end || (last && vs[v] <= s_end))) {
        sum += kappa[v];
        ++count;
      }
    }
    const double raw = count ? sum / static_cast<double>(count) : prev_curvature;
    // Curvature is stored as the running sum of the differences so the
    // telescoping identity holds bit for bit.
    sec.curvature_diff = i == 0 ? raw : raw - prev_curvature;
    sec.curvature = i == 0 ? sec.curvature_diff : prev_curvature + sec.curvature_diff;
    prev_curvature = sec.curvature;

    if (!ms.degenerate) {
      const auto& ls = ms.linestrings;
      double spacing = 0.0;
      for (std::size_t k = 0; k + 1 < ls.size(); ++k) spacing += ls[k + 1].mean_t - ls[k].mean_t;
      sec.width = spacing / static_cast<double>(ls.size() - 1);
      sec.no_of_lanes = static_cast<int>(ms.lanelets.size());
      int left = 0;
      for (const auto& [r, l] : ms.lanelets) {
        if (0.5 * (ls[r].mean_t + ls[l].mean_t) > sec.width / 2.0) ++left;
      }
      sec.left_lanes = std::min(left, sec.no_of_lanes - 1);
    } else {
      sec.inherited = true;
      ++model.degenerate_sections;
    }
    out.push_back(sec);
  }

  auto donor_for = [&](std::size_t i) -> const RoadSection* {
    for (std::size_t k = i; k-- > 0;) {
      if (!out[k].inherited) return &out[k];
    }
    for (std::size_t k = i + 1; k < out.size(); ++k) {
      if (!out[k].inherited) return &out[k];
    }
    return nullptr;
  };
  double width_sum = 0.0;
  std::size_t width_n = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!out[i].inherited) {
      width_sum += out[i].width;
      ++width_n;
      continue;
    }
    const RoadSection* d = donor_for(i);
    if (!d) throw InputError("no road section has two lane markings; cannot build a road model");
    out[i].width = d->width;
    out[i].no_of_lanes = d->no_of_lanes;
    out[i].left_lanes = d->left_lanes;
  }
  model.lane_width = width_sum / static_cast<double>(width_n);
  model.sections = std::move(out);
  return model;
}

LaneAssignment assign_lane(double t, const RoadSection& section) {
  const double w = section.width;
  const double h = w / 2.0;
  LaneAssignment a;
  if (t > h) {
    const int k = static_cast<int>(std::ceil((t - h) / w));
    if (k > section.left_lanes) {
      a.lane = section.left_lanes > 0 ? section.left_lanes : -1;
      a.out_of_map = true;
    } else {
      a.lane = k;
    }
  } else if (t <= -h) {
    const int k = static_cast<int>(std::floor((-h - t) / w)) + 1;
    if (k + 1 > section.right_lanes()) {
      a.lane = -section.right_lanes();
      a.out_of_map = true;
    } else {
      a.lane = -(k + 1);
    }
  } else {
    a.lane = -1;
  }
  return a;
}

LaneAssignment assign_lane(FrenetPose fp, const RoadModel& model) {
  return assign_lane(fp.t, model.section_at(fp.s));
}

double lane_center(int lane, double width) {
  return lane < 0 ? -static_cast<double>(-lane - 1) * width : static_cast<double>(lane) * width;
}

}  // namespace scex
