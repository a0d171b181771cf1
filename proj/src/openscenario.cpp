#include "scex/openscenario.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "scex/error.hpp"
#include "scex/io.hpp"
#include "scex/xml.hpp"

namespace scex {

const OscEntity* OscDocument::entity(std::string_view name) const {
  for (const auto& e : entities) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

const std::string* OscDocument::parameter(std::string_view name) const {
  for (const auto& [k, v] : parameters) {
    if (k == name) return &v;
  }
  return nullptr;
}

OscDocument build_openscenario(const ScenarioParameters& p, const std::string& odr_file,
                               double lane_change_duration) {
  if (p.m < 2) throw InputError("scenario parameters need m >= 2");
  if (p.ego.speed.size() != static_cast<std::size_t>(p.m) || p.adversary.speed.size() != static_cast<std::size_t>(p.m) ||
      p.ego.distance.size() != static_cast<std::size_t>(p.m) ||
      p.adversary.distance.size() != static_cast<std::size_t>(p.m)) {
    throw InputError("scenario parameter arrays must have m entries");
  }
  if (p.final_lane == p.adversary.initial_lane) {
    throw InputError("final lane " + std::to_string(p.final_lane) + " equals the adversary's initial lane");
  }
  if (!(lane_change_duration > 0.0)) throw InputError("lane change duration must be positive");

  OscDocument doc;
  doc.description = std::string(to_string(p.kind)) + " of track " + std::to_string(p.adversary_id);
  doc.logic_file = odr_file;
  doc.parameters = {{"source_track_id", std::to_string(p.adversary_id)},
                    {"window_start", format_double(p.window_start)},
                    {"window_end", format_double(p.window_end)}};
  doc.entities = {{kEgoName}, {kAdversaryName}};
  doc.init = {{kEgoName, "1", p.ego.initial_lane, p.ego.initial_position, p.ego.initial_speed},
              {kAdversaryName, "1", p.adversary.initial_lane, p.adversary.initial_position, p.adversary.initial_speed}};

  const double step = (p.window_end - p.window_start) / static_cast<double>(p.m - 1);
  auto speed_group = [&](const char* actor, const ActorParameters& a) {
    OscManeuverGroup g;
    g.actor = actor;
    for (int i = 1; i < p.m; ++i) {
      OscEvent e;
      e.name = std::string(actor) + "_speed_" + std::to_string(i + 1);
      e.condition.type = OscConditionType::traveled_distance;
      e.condition.triggering_entity = actor;
      e.condition.value = a.distance[static_cast<std::size_t>(i - 1)];
      e.action.type = OscActionType::absolute_speed;
      e.action.speed = a.speed[static_cast<std::size_t>(i)];
      e.action.duration = step;
      g.events.push_back(e);
    }
    return g;
  };
  doc.groups.push_back(speed_group(kEgoName, p.ego));
  OscManeuverGroup adv = speed_group(kAdversaryName, p.adversary);

  OscEvent lc;
  lc.name = std::string(kAdversaryName) + "_lane_change";
  lc.condition.type = OscConditionType::relative_distance;
  lc.condition.triggering_entity = kAdversaryName;
  lc.condition.entity_ref = kEgoName;
  lc.condition.value = p.triggering_distance;
  // Pick the direction in which the gap is false at the start so the
  // condition fires when the gap reaches the recorded value.
  const double gap0 = p.adversary.initial_position - p.ego.initial_position;
  lc.condition.rule = gap0 < p.triggering_distance ? OscRule::greater_than : OscRule::less_than;
  lc.action.type = OscActionType::lane_change;
  lc.action.duration = lane_change_duration;
  lc.action.target_lane = p.final_lane;
  adv.events.push_back(lc);
  doc.groups.push_back(std::move(adv));
  validate_openscenario(doc);
  return doc;
}

void validate_openscenario(const OscDocument& doc) {
  if (doc.entities.empty()) throw InvariantError("scenario declares no entities");
  if (doc.init.empty()) throw InvariantError("scenario has no Init actions");
  std::size_t events = 0;
  for (const auto& g : doc.groups) events += g.events.size();
  if (events == 0) throw InvariantError("scenario story has no events");

  auto declared = [&](const std::string& name, const std::string& where) {
    if (!doc.entity(name)) throw InvariantError(where + " references undeclared entity '" + name + "'");
  };
  for (const auto& i : doc.init) declared(i.entity, "Init");
  for (const auto& g : doc.groups) {
    declared(g.actor, "maneuver group");
    double last_distance = -1e300;
    int lane_changes = 0;
    for (const auto& e : g.events) {
      declared(e.condition.triggering_entity, "event " + e.name);
      if (e.condition.type == OscConditionType::relative_distance) declared(e.condition.entity_ref, "event " + e.name);
      if (e.action.type == OscActionType::absolute_speed) {
        if (e.condition.type != OscConditionType::traveled_distance) {
          throw InvariantError("speed event " + e.name + " must use a traveled-distance condition");
        }
        if (e.condition.value < last_distance) throw InvariantError("speed events of " + g.actor + " out of order");
        last_distance = e.condition.value;
        if (!(e.action.duration > 0.0)) throw InvariantError("speed event " + e.name + " needs a positive duration");
      } else {
        ++lane_changes;
        if (!(e.action.duration > 0.0)) throw InvariantError("lane change " + e.name + " needs a positive duration");
      }
    }
    if (g.actor == kAdversaryName && lane_changes != 1) {
      throw InvariantError("the adversary must have exactly one lane-change event");
    }
  }
}

namespace {

std::string rule_name(OscRule r) { return r == OscRule::greater_than ? "greaterThan" : "lessThan"; }

OscRule rule_from(const std::string& s) {
  if (s == "greaterThan" || s == "greaterOrEqual") return OscRule::greater_than;
  if (s == "lessThan" || s == "lessOrEqual") return OscRule::less_than;
  throw InputError("unsupported rule '" + s + "'");
}

xml::Element vehicle(const OscEntity& e) {
  xml::Element v("Vehicle");
  v.set("name", std::string("car")).set("vehicleCategory", std::string("car"));
  auto& box = v.add_child("BoundingBox");
  box.add_child("Center").set("x", e.length * 0.3).set("y", 0.0).set("z", e.height / 2.0);
  box.add_child("Dimensions").set("width", e.width).set("length", e.length).set("height", e.height);
  v.add_child("Performance").set("maxSpeed", 70.0).set("maxAcceleration", 10.0).set("maxDeceleration", 10.0);
  auto& axles = v.add_child("Axles");
  axles.add_child("FrontAxle")
      .set("maxSteering", 0.5)
      .set("wheelDiameter", 0.6)
      .set("trackWidth", e.width)
      .set("positionX", e.length * 0.6)
      .set("positionZ", 0.3);
  axles.add_child("RearAxle")
      .set("maxSteering", 0.0)
      .set("wheelDiameter", 0.6)
      .set("trackWidth", e.width)
      .set("positionX", 0.0)
      .set("positionZ", 0.3);
  v.add_child("Properties");
  return v;
}

xml::Element speed_action(double speed, const char* shape, double duration) {
  xml::Element pa("PrivateAction");
  auto& sa = pa.add_child("LongitudinalAction").add_child("SpeedAction");
  sa.add_child("SpeedActionDynamics")
      .set("dynamicsShape", std::string(shape))
      .set("value", duration)
      .set("dynamicsDimension", std::string("time"));
  sa.add_child("SpeedActionTarget").add_child("AbsoluteTargetSpeed").set("value", speed);
  return pa;
}

xml::Element condition(const OscEvent& ev) {
  const OscCondition& c = ev.condition;
  xml::Element st("StartTrigger");
  auto& cond = st.add_child("ConditionGroup").add_child("Condition");
  cond.set("name", ev.name + "_condition").set("delay", 0.0).set("conditionEdge", std::string("rising"));
  auto& by = cond.add_child("ByEntityCondition");
  by.add_child("TriggeringEntities")
      .set("triggeringEntitiesRule", std::string("any"))
      .add_child("EntityRef")
      .set("entityRef", c.triggering_entity);
  auto& ec = by.add_child("EntityCondition");
  if (c.type == OscConditionType::traveled_distance) {
    ec.add_child("TraveledDistanceCondition").set("value", c.value);
  } else {
    ec.add_child("RelativeDistanceCondition")
        .set("entityRef", c.entity_ref)
        .set("relativeDistanceType", std::string("longitudinal"))
        .set("coordinateSystem", std::string("road"))
        .set("freespace", std::string("false"))
        .set("rule", rule_name(c.rule))
        .set("value", c.value);
  }
  return st;
}

xml::Element event(const OscEvent& ev) {
  xml::Element e("Event");
  e.set("name", ev.name).set("priority", std::string("parallel")).set("maximumExecutionCount", 1);
  auto& action = e.add_child("Action");
  action.set("name", ev.name + "_action");
  if (ev.action.type == OscActionType::absolute_speed) {
    action.add(speed_action(ev.action.speed, "linear", ev.action.duration));
  } else {
    auto& lca = action.add_child("PrivateAction").add_child("LateralAction").add_child("LaneChangeAction");
    lca.add_child("LaneChangeActionDynamics")
        .set("dynamicsShape", std::string("cubic"))
        .set("value", ev.action.duration)
        .set("dynamicsDimension", std::string("time"));
    lca.add_child("LaneChangeTarget").add_child("AbsoluteTargetLane").set("value", std::to_string(ev.action.target_lane));
  }
  e.add(condition(ev));
  return e;
}

}  // namespace

std::string serialize_openscenario(const OscDocument& doc) {
  validate_openscenario(doc);
  xml::Element root("OpenSCENARIO");
  root.add_child("FileHeader")
      .set("revMajor", 1)
      .set("revMinor", 1)
      .set("date", std::string("1970-01-01T00:00:00"))
      .set("description", doc.description)
      .set("author", std::string("scex"));
  auto& params = root.add_child("ParameterDeclarations");
  for (const auto& [k, v] : doc.parameters) {
    params.add_child("ParameterDeclaration").set("name", k).set("parameterType", std::string("string")).set("value", v);
  }
  root.add_child("CatalogLocations");
  root.add_child("RoadNetwork").add_child("LogicFile").set("filepath", doc.logic_file);
  auto& entities = root.add_child("Entities");
  for (const auto& e : doc.entities) {
    auto& so = entities.add_child("ScenarioObject");
    so.set("name", e.name);
    so.add(vehicle(e));
  }

  auto& sb = root.add_child("Storyboard");
  auto& actions = sb.add_child("Init").add_child("Actions");
  for (const auto& i : doc.init) {
    auto& priv = actions.add_child("Private");
    priv.set("entityRef", i.entity);
    priv.add_child("PrivateAction")
        .add_child("TeleportAction")
        .add_child("Position")
        .add_child("LanePosition")
        .set("roadId", i.road_id)
        .set("laneId", std::to_string(i.lane))
        .set("offset", 0.0)
        .set("s", i.s);
    priv.add(speed_action(i.speed, "step", 0.0));
  }
  auto& story = sb.add_child("Story");
  story.set("name", std::string("scenario"));
  auto& act = story.add_child("Act");
  act.set("name", std::string("act"));
  for (const auto& g : doc.groups) {
    auto& mg = act.add_child("ManeuverGroup");
    mg.set("maximumExecutionCount", 1).set("name", g.actor + "_group");
    mg.add_child("Actors").set("selectTriggeringEntities", std::string("false")).add_child("EntityRef").set("entityRef", g.actor);
    auto& man = mg.add_child("Maneuver");
    man.set("name", g.actor + "_maneuver");
    for (const auto& ev : g.events) man.add(event(ev));
  }
  auto& act_cond = act.add_child("StartTrigger").add_child("ConditionGroup").add_child("Condition");
  act_cond.set("name", std::string("act_start")).set("delay", 0.0).set("conditionEdge", std::string("rising"));
  act_cond.add_child("ByValueCondition")
      .add_child("SimulationTimeCondition")
      .set("value", 0.0)
      .set("rule", std::string("greaterThan"));
  sb.add_child("StopTrigger");
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

double speed_target(const xml::Element& speed_action) {
  return speed_action.required_child("SpeedActionTarget").required_child("AbsoluteTargetSpeed").number_attr("value");
}

OscEvent parse_event(const xml::Element& e) {
  OscEvent ev;
  ev.name = e.required_attr("name");
  const xml::Element& pa = e.required_child("Action").required_child("PrivateAction");
  if (const auto* lon = pa.child("LongitudinalAction")) {
    const xml::Element& sa = lon->required_child("SpeedAction");
    ev.action.type = OscActionType::absolute_speed;
    ev.action.speed = speed_target(sa);
    ev.action.duration = sa.required_child("SpeedActionDynamics").number_attr("value");
  } else if (const auto* lat = pa.child("LateralAction")) {
    const xml::Element& lca = lat->required_child("LaneChangeAction");
    ev.action.type = OscActionType::lane_change;
    ev.action.duration = lca.required_child("LaneChangeActionDynamics").number_attr("value");
    ev.action.target_lane = lca.required_child("LaneChangeTarget").required_child("AbsoluteTargetLane").int_attr("value");
  } else {
    throw InputError("event " + ev.name + " has an unsupported action");
  }
  const xml::Element& by = e.required_child("StartTrigger")
                               .required_child("ConditionGroup")
                               .required_child("Condition")
                               .required_child("ByEntityCondition");
  ev.condition.triggering_entity =
      by.required_child("TriggeringEntities").required_child("EntityRef").required_attr("entityRef");
  const xml::Element& ec = by.required_child("EntityCondition");
  if (const auto* td = ec.child("TraveledDistanceCondition")) {
    ev.condition.type = OscConditionType::traveled_distance;
    ev.condition.value = td->number_attr("value");
  } else if (const auto* rd = ec.child("RelativeDistanceCondition")) {
    ev.condition.type = OscConditionType::relative_distance;
    ev.condition.entity_ref = rd->required_attr("entityRef");
    ev.condition.rule = rule_from(rd->required_attr("rule"));
    ev.condition.value = rd->number_attr("value");
  } else {
    throw InputError("event " + ev.name + " has an unsupported condition");
  }
  return ev;
}

}  // namespace

OscParseResult parse_openscenario(std::string_view text) {
  const xml::Element root = xml::parse(text);
  if (root.name != "OpenSCENARIO") throw InputError("root element is <" + root.name + ">, expected <OpenSCENARIO>");
  OscParseResult r;
  auto& diag = r.diagnostics;
  OscDocument& doc = r.document;
  note_unknown(root, {"FileHeader", "ParameterDeclarations", "CatalogLocations", "RoadNetwork", "Entities", "Storyboard"},
               diag);
  if (const auto* fh = root.child("FileHeader")) {
    if (const auto* d = fh->attr("description")) doc.description = *d;
  }
  if (const auto* pd = root.child("ParameterDeclarations")) {
    for (const auto* p : pd->children_named("ParameterDeclaration")) {
      doc.parameters.emplace_back(p->required_attr("name"), p->required_attr("value"));
    }
  }
  if (const auto* rn = root.child("RoadNetwork")) {
    if (const auto* lf = rn->child("LogicFile")) doc.logic_file = lf->required_attr("filepath");
  }

  const xml::Element& entities = root.required_child("Entities");
  note_unknown(entities, {"ScenarioObject"}, diag);
  for (const auto* so : entities.children_named("ScenarioObject")) {
    OscEntity e;
    e.name = so->required_attr("name");
    if (const auto* v = so->child("Vehicle")) {
      if (const auto* bb = v->child("BoundingBox")) {
        const xml::Element& dim = bb->required_child("Dimensions");
        e.width = dim.number_attr("width");
        e.length = dim.number_attr("length");
        e.height = dim.number_attr("height");
      }
    } else {
      diag.push_back("entity " + e.name + " is not a vehicle");
    }
    doc.entities.push_back(e);
  }

  const xml::Element& sb = root.required_child("Storyboard");
  note_unknown(sb, {"Init", "Story", "StopTrigger"}, diag);
  const xml::Element& actions = sb.required_child("Init").required_child("Actions");
  for (const auto* priv : actions.children_named("Private")) {
    OscInit in;
    in.entity = priv->required_attr("entityRef");
    bool have_pos = false;
    for (const auto* pa : priv->children_named("PrivateAction")) {
      if (const auto* tp = pa->child("TeleportAction")) {
        const xml::Element& lp = tp->required_child("Position").required_child("LanePosition");
        in.road_id = lp.required_attr("roadId");
        in.lane = lp.int_attr("laneId");
        in.s = lp.number_attr("s");
        have_pos = true;
      } else if (const auto* lon = pa->child("LongitudinalAction")) {
        in.speed = speed_target(lon->required_child("SpeedAction"));
      } else {
        diag.push_back("unsupported init action for " + in.entity + " ignored");
      }
    }
    if (!have_pos) throw InputError("Init for " + in.entity + " has no lane position");
    doc.init.push_back(in);
  }

  for (const auto* story : sb.children_named("Story")) {
    for (const auto* act : story->children_named("Act")) {
      note_unknown(*act, {"ManeuverGroup", "StartTrigger", "StopTrigger"}, diag);
      for (const auto* mg : act->children_named("ManeuverGroup")) {
        OscManeuverGroup g;
        g.actor = mg->required_child("Actors").required_child("EntityRef").required_attr("entityRef");
        for (const auto* man : mg->children_named("Maneuver")) {
          for (const auto* ev : man->children_named("Event")) g.events.push_back(parse_event(*ev));
        }
        doc.groups.push_back(std::move(g));
      }
    }
  }
  return r;
}

}  // namespace scex
