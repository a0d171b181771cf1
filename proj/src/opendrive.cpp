#include "scex/opendrive.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "scex/error.hpp"
#include "scex/io.hpp"
#include "scex/xml.hpp"

namespace scex {

Pose2 OdrGeometry::end() const {
  if (!spiral) return advance_line(start(), length);
  return advance_spiral(start(), curv_start, curv_end, length);
}

double OdrGeometry::curvature_at(double ds) const {
  if (!spiral) return 0.0;
  return curv_start + (curv_end - curv_start) * std::clamp(ds / length, 0.0, 1.0);
}

double OdrDocument::length() const {
  double total = 0.0;
  for (const auto& g : geometries) total += g.length;
  return total;
}

const OdrLaneSection& OdrDocument::section_at(double s) const {
  if (lane_sections.empty()) throw InputError("road has no lane sections");
  auto it = std::upper_bound(lane_sections.begin(), lane_sections.end(), s,
                             [](double v, const OdrLaneSection& ls) { return v < ls.s; });
  return it == lane_sections.begin() ? lane_sections.front() : *(it - 1);
}

double OdrDocument::curvature_at(double s) const {
  if (geometries.empty()) return 0.0;
  auto it = std::upper_bound(geometries.begin(), geometries.end(), s,
                             [](double v, const OdrGeometry& g) { return v < g.s; });
  const OdrGeometry& g = it == geometries.begin() ? geometries.front() : *(it - 1);
  return g.curvature_at(s - g.s);
}

double OdrDocument::lane_center(int lane, double s) const {
  const OdrLaneSection& sec = section_at(s);
  double edge = sec.offset;
  if (lane < 0) {
    for (const OdrLane& l : sec.right) {
      if (l.id == lane) return edge - l.width / 2.0;
      edge -= l.width;
    }
  } else if (lane > 0) {
    for (const OdrLane& l : sec.left) {
      if (l.id == lane) return edge + l.width / 2.0;
      edge += l.width;
    }
  }
  throw InputError("lane " + std::to_string(lane) + " does not exist at s = " + format_double(s));
}

OdrDocument build_opendrive(const RoadModel& model, std::string name) {
  if (model.sections.empty()) throw InputError("cannot build a road from an empty model");
  OdrDocument doc;
  doc.name = std::move(name);
  const auto& v = model.ref_line.vertices();
  Pose2 pose{v.front().x, v.front().y, model.ref_line.headings().front()};
  double prev_k = 0.0;
  for (const RoadSection& sec : model.sections) {
    OdrGeometry g;
    g.s = sec.s_dist;
    g.x = pose.x;
    g.y = pose.y;
    g.hdg = pose.hdg;
    g.length = sec.length;
    g.spiral = !(std::abs(prev_k) < 1e-6 && std::abs(sec.curvature) < 1e-6);
    if (g.spiral) {
      g.curv_start = prev_k;
      g.curv_end = sec.curvature;
    }
    doc.geometries.push_back(g);
    pose = g.end();
    prev_k = sec.curvature;

    OdrLaneSection ls;
    ls.s = sec.s_dist;
    ls.offset = sec.width / 2.0;
    for (int k = 1; k <= sec.left_lanes; ++k) ls.left.push_back({k, sec.width});
    for (int k = 1; k <= sec.right_lanes(); ++k) ls.right.push_back({-k, sec.width});
    doc.lane_sections.push_back(ls);
  }
  return doc;
}

void validate_opendrive(const OdrDocument& doc) {
  if (doc.geometries.empty()) throw InvariantError("OpenDRIVE road has no planView geometry");
  if (doc.lane_sections.empty()) throw InvariantError("OpenDRIVE road has no laneSection");
  for (std::size_t i = 0; i < doc.geometries.size(); ++i) {
    const auto& g = doc.geometries[i];
    if (!(g.length > 0.0)) throw InvariantError("geometry " + std::to_string(i) + " has non-positive length");
    if (i == 0) continue;
    const auto& p = doc.geometries[i - 1];
    const Pose2 e = p.end();
    const double gap = std::hypot(e.x - g.x, e.y - g.y);
    const double dh = std::abs(std::remainder(e.hdg - g.hdg, 2.0 * std::numbers::pi));
    if (gap > 1e-6 || dh > 1e-6) {
      throw InvariantError("planView discontinuity before geometry " + std::to_string(i) + ": gap " +
                           format_double(gap) + " m, heading " + format_double(dh) + " rad");
    }
    if (std::abs(p.s + p.length - g.s) > 1e-6) throw InvariantError("geometry s values are not contiguous");
  }
  for (std::size_t i = 0; i < doc.lane_sections.size(); ++i) {
    const auto& ls = doc.lane_sections[i];
    if (i > 0 && !(ls.s > doc.lane_sections[i - 1].s)) throw InvariantError("laneSection s not strictly increasing");
    if (ls.left.empty() && ls.right.empty()) throw InvariantError("laneSection without driving lanes");
    for (std::size_t k = 0; k < ls.left.size(); ++k) {
      if (ls.left[k].id != static_cast<int>(k) + 1) throw InvariantError("left lane ids must be 1..L");
    }
    for (std::size_t k = 0; k < ls.right.size(); ++k) {
      if (ls.right[k].id != -static_cast<int>(k) - 1) throw InvariantError("right lane ids must be -1..-R");
    }
  }
}

namespace {

xml::Element lane_element(const OdrLane& l) {
  xml::Element e("lane");
  e.set("id", l.id).set("type", std::string("driving")).set("level", std::string("false"));
  e.add_child("width").set("sOffset", 0.0).set("a", l.width).set("b", 0.0).set("c", 0.0).set("d", 0.0);
  return e;
}

}  // namespace

std::string serialize_opendrive(const OdrDocument& doc) {
  validate_opendrive(doc);
  xml::Element root("OpenDRIVE");
  root.add_child("header")
      .set("revMajor", 1)
      .set("revMinor", 4)
      .set("name", doc.name)
      .set("version", std::string("1.00"));
  xml::Element& road = root.add_child("road");
  road.set("name", doc.name).set("length", doc.length()).set("id", std::string("1")).set("junction", std::string("-1"));
  xml::Element& plan = road.add_child("planView");
  for (const auto& g : doc.geometries) {
    xml::Element& ge = plan.add_child("geometry");
    ge.set("s", g.s).set("x", g.x).set("y", g.y).set("hdg", g.hdg).set("length", g.length);
    if (g.spiral) {
      ge.add_child("spiral").set("curvStart", g.curv_start).set("curvEnd", g.curv_end);
    } else {
      ge.add_child("line");
    }
  }
  xml::Element& lanes = road.add_child("lanes");
  for (const auto& ls : doc.lane_sections) {
    lanes.add_child("laneOffset").set("s", ls.s).set("a", ls.offset).set("b", 0.0).set("c", 0.0).set("d", 0.0);
  }
  for (const auto& ls : doc.lane_sections) {
    xml::Element& se = lanes.add_child("laneSection");
    se.set("s", ls.s);
    if (!ls.left.empty()) {
      xml::Element& left = se.add_child("left");
      for (auto it = ls.left.rbegin(); it != ls.left.rend(); ++it) left.add(lane_element(*it));
    }
    se.add_child("center")
        .add_child("lane")
        .set("id", 0)
        .set("type", std::string("none"))
        .set("level", std::string("false"));
    if (!ls.right.empty()) {
      xml::Element& right = se.add_child("right");
      for (const auto& l : ls.right) right.add(lane_element(l));
    }
  }
  return xml::serialize(root);
}

namespace {

void note_unknown(const xml::Element& e, std::initializer_list<std::string_view> known,
                  std::vector<std::string>& diag) {
  for (const auto& c : e.children) {
    if (std::find(known.begin(), known.end(), c.name) == known.end()) {
      diag.push_back("unknown element <" + c.name + "> in <" + e.name + "> ignored");
    }
  }
}

std::vector<OdrLane> parse_lanes(const xml::Element* side, std::vector<std::string>& diag) {
  std::vector<OdrLane> out;
  if (!side) return out;
  note_unknown(*side, {"lane"}, diag);
  for (const auto* l : side->children_named("lane")) {
    note_unknown(*l, {"width", "link", "roadMark", "speed"}, diag);
    OdrLane lane;
    lane.id = l->int_attr("id");
    lane.width = l->required_child("width").number_attr("a");
    out.push_back(lane);
  }
  return out;
}

}  // namespace

OdrParseResult parse_opendrive(std::string_view text) {
  const xml::Element root = xml::parse(text);
  if (root.name != "OpenDRIVE") throw InputError("root element is <" + root.name + ">, expected <OpenDRIVE>");
  OdrParseResult r;
  auto& diag = r.diagnostics;
  note_unknown(root, {"header", "road"}, diag);
  const auto roads = root.children_named("road");
  if (roads.empty()) throw InputError("OpenDRIVE file has no <road>");
  if (roads.size() > 1) diag.push_back("only the first of " + std::to_string(roads.size()) + " roads is used");
  const xml::Element& road = *roads.front();
  if (const auto* header = root.child("header")) {
    if (const auto* n = header->attr("name")) r.document.name = *n;
  }
  note_unknown(road, {"link", "type", "planView", "elevationProfile", "lateralProfile", "lanes"}, diag);

  const xml::Element& plan = road.required_child("planView");
  note_unknown(plan, {"geometry"}, diag);
  for (const auto* g : plan.children_named("geometry")) {
    OdrGeometry geo;
    geo.s = g->number_attr("s");
    geo.x = g->number_attr("x");
    geo.y = g->number_attr("y");
    geo.hdg = g->number_attr("hdg");
    geo.length = g->number_attr("length");
    if (const auto* sp = g->child("spiral")) {
      geo.spiral = true;
      geo.curv_start = sp->number_attr("curvStart");
      geo.curv_end = sp->number_attr("curvEnd");
    } else if (!g->child("line")) {
      throw InputError("geometry at s = " + format_double(geo.s) + " is neither a line nor a spiral");
    }
    note_unknown(*g, {"line", "spiral"}, diag);
    r.document.geometries.push_back(geo);
  }
  if (r.document.geometries.empty()) throw InputError("planView has no geometry");

  const xml::Element& lanes = road.required_child("lanes");
  note_unknown(lanes, {"laneOffset", "laneSection"}, diag);
  std::vector<std::pair<double, double>> offsets;
  for (const auto* o : lanes.children_named("laneOffset")) offsets.emplace_back(o->number_attr("s"), o->number_attr("a"));
  for (const auto* ls : lanes.children_named("laneSection")) {
    note_unknown(*ls, {"left", "center", "right"}, diag);
    OdrLaneSection sec;
    sec.s = ls->number_attr("s");
    for (const auto& [s, a] : offsets) {
      if (s <= sec.s) sec.offset = a;
    }
    ls->required_child("center");
    sec.left = parse_lanes(ls->child("left"), diag);
    std::sort(sec.left.begin(), sec.left.end(), [](const OdrLane& a, const OdrLane& b) { return a.id < b.id; });
    sec.right = parse_lanes(ls->child("right"), diag);
    std::sort(sec.right.begin(), sec.right.end(), [](const OdrLane& a, const OdrLane& b) { return a.id > b.id; });
    r.document.lane_sections.push_back(sec);
  }
  if (r.document.lane_sections.empty()) throw InputError("road has no <laneSection>");
  return r;
}

}  // namespace scex
