#include "sitescout/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "sitescout/error.hpp"

namespace sitescout {

using nlohmann::json;

namespace {

SensorConfig default_nav_sensor(Role r) { return SensorConfig{r == Role::Explorer ? 5.0 : 4.0, 1.0, 0.0}; }
SensorConfig default_payload_sensor(Role r) { return SensorConfig{r == Role::Explorer ? 4.0 : 3.0, 1.0, 0.0}; }

// Field reader that records problems instead of throwing.
class Reader {
 public:
  explicit Reader(std::vector<Diagnostic>& diags) : diags_(diags) {}

  void fail(const std::string& field, const std::string& message) { diags_.push_back({field, message}); }

  template <class T>
  std::optional<T> get(const json& obj, const std::string& key, const std::string& field, bool required) {
    const auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
      if (required) fail(field, "missing");
      return std::nullopt;
    }
    try {
      return it->get<T>();
    } catch (const json::exception&) {
      fail(field, "wrong type");
      return std::nullopt;
    }
  }

  std::optional<double> number(const json& obj, const std::string& key, const std::string& field, bool required) {
    auto v = get<double>(obj, key, field, required);
    if (v && !std::isfinite(*v)) {
      fail(field, "not finite");
      return std::nullopt;
    }
    return v;
  }

  std::optional<Point2> point(const json& obj, const std::string& key, const std::string& field, bool required) {
    const auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
      if (required) fail(field, "missing");
      return std::nullopt;
    }
    return point_value(*it, field);
  }

  std::optional<Point2> point_value(const json& j, const std::string& field) {
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
      Point2 p{j[0].get<double>(), j[1].get<double>()};
      if (std::isfinite(p.x) && std::isfinite(p.y)) return p;
    } else if (j.is_object() && j.contains("x") && j.contains("y") && j["x"].is_number() && j["y"].is_number()) {
      Point2 p{j["x"].get<double>(), j["y"].get<double>()};
      if (std::isfinite(p.x) && std::isfinite(p.y)) return p;
    }
    fail(field, "expected a finite point [x, y]");
    return std::nullopt;
  }

  std::optional<Bounds> bounds(const json& obj, const std::string& key, const std::string& field) {
    const auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (!it->is_object()) {
      fail(field, "expected {\"min\": [x, y], \"max\": [x, y]}");
      return std::nullopt;
    }
    auto lo = point(*it, "min", field + ".min", true);
    auto hi = point(*it, "max", field + ".max", true);
    if (!lo || !hi) return std::nullopt;
    if (!(hi->x > lo->x) || !(hi->y > lo->y)) {
      fail(field, "max must exceed min on both axes");
      return std::nullopt;
    }
    return Bounds{*lo, *hi};
  }

  SensorConfig sensor(const json& obj, const std::string& key, const std::string& field, SensorConfig def) {
    const auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return def;
    if (!it->is_object()) {
      fail(field, "expected an object");
      return def;
    }
    SensorConfig s = def;
    if (auto v = number(*it, "max_range", field + ".max_range", false)) s.max_range = *v;
    if (auto v = number(*it, "angular_resolution", field + ".angular_resolution", false)) {
      s.angular_resolution_deg = *v;
    }
    if (auto v = number(*it, "noise_stddev", field + ".noise_stddev", false)) s.noise_stddev = *v;
    if (!(s.max_range > 0.0)) fail(field + ".max_range", "must be positive");
    if (!(s.angular_resolution_deg > 0.0) || s.angular_resolution_deg > 360.0) {
      fail(field + ".angular_resolution", "must be in (0, 360]");
    }
    if (s.noise_stddev < 0.0) fail(field + ".noise_stddev", "must not be negative");
    return s;
  }

 private:
  std::vector<Diagnostic>& diags_;
};

std::string index_field(const std::string& base, std::size_t i) { return base + "[" + std::to_string(i) + "]"; }

template <class E, std::size_t N>
std::optional<E> enum_from(std::string_view s, const E (&values)[N]) {
  for (E v : values) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

void parse_map(Reader& rd, const json& j, MapSpec& m) {
  if (!j.is_object()) {
    rd.fail("map", "expected an object");
    return;
  }
  if (auto v = rd.number(j, "resolution", "map.resolution", true)) m.resolution = *v;
  if (!(m.resolution > 0.0)) rd.fail("map.resolution", "must be positive");
  const bool has_mesh = j.contains("mesh");
  const bool has_raster = j.contains("raster");
  if (has_mesh == has_raster) {
    rd.fail("map", "exactly one of \"mesh\" or \"raster\" is required");
    return;
  }
  if (has_mesh) {
    if (auto v = rd.get<std::string>(j, "mesh", "map.mesh", true)) m.mesh = *v;
    if (auto v = rd.number(j, "slice_height", "map.slice_height", false)) m.slice_height = *v;
    m.bounds = rd.bounds(j, "bounds", "map.bounds");
  } else {
    if (auto v = rd.get<std::vector<std::string>>(j, "raster", "map.raster", true)) m.raster = *v;
    if (m.raster.empty()) rd.fail("map.raster", "needs at least one row");
    if (auto p = rd.point(j, "origin", "map.origin", false)) m.origin = *p;
  }
}

void parse_openings(Reader& rd, const json& j, std::vector<Opening>& out) {
  if (!j.is_array()) {
    rd.fail("openings", "expected an array");
    return;
  }
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string f = index_field("openings", i);
    const json& o = j[i];
    if (!o.is_object()) {
      rd.fail(f, "expected an object");
      continue;
    }
    Opening op;
    if (auto v = rd.get<std::string>(o, "id", f + ".id", true)) op.id = *v;
    if (auto p = rd.point(o, "center", f + ".center", true)) op.center = *p;
    if (auto v = rd.get<std::string>(o, "kind", f + ".kind", false)) {
      if (auto k = enum_from(*v, {OpeningKind::Door, OpeningKind::Passage})) op.kind = *k;
      else rd.fail(f + ".kind", "expected door or passage");
    }
    if (auto v = rd.get<std::string>(o, "hinge_side", f + ".hinge_side", false)) {
      if (auto k = enum_from(*v, {HingeSide::None, HingeSide::Left, HingeSide::Right})) op.hinge_side = *k;
      else rd.fail(f + ".hinge_side", "expected none, left or right");
    }
    if (auto v = rd.get<std::string>(o, "actuation", f + ".actuation", false)) {
      if (auto k = enum_from(*v, {Actuation::None, Actuation::Push, Actuation::Pull})) op.actuation = *k;
      else rd.fail(f + ".actuation", "expected none, push or pull");
    }
    out.push_back(std::move(op));
  }
}

void parse_obstacles(Reader& rd, const json& j, std::vector<ObstacleSpec>& out) {
  if (!j.is_array()) {
    rd.fail("obstacles", "expected an array");
    return;
  }
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string f = index_field("obstacles", i);
    const json& o = j[i];
    if (!o.is_object()) {
      rd.fail(f, "expected an object");
      continue;
    }
    ObstacleSpec ob;
    if (auto v = rd.get<std::string>(o, "id", f + ".id", true)) ob.id = *v;
    ob.rect = rd.bounds(o, "rect", f + ".rect");
    if (auto v = rd.get<std::vector<std::array<int, 2>>>(o, "cells", f + ".cells", false)) {
      for (const auto& c : *v) ob.cells.push_back(Cell{c[0], c[1]});
    }
    if (!ob.rect && ob.cells.empty()) rd.fail(f, "needs a rect or a cell list");
    if (auto v = rd.get<bool>(o, "removable", f + ".removable", false)) ob.removable = *v;
    ob.handle = rd.point(o, "handle", f + ".handle", false);
    if (ob.removable && !ob.handle) rd.fail(f + ".handle", "removable obstacles need a handle");
    out.push_back(std::move(ob));
  }
}

void parse_agents(Reader& rd, const json& j, std::vector<AgentSpec>& out) {
  if (!j.is_array() || j.empty()) {
    rd.fail("agents", "expected a non-empty array");
    return;
  }
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string f = index_field("agents", i);
    const json& o = j[i];
    if (!o.is_object()) {
      rd.fail(f, "expected an object");
      continue;
    }
    AgentSpec a;
    if (auto v = rd.get<std::string>(o, "id", f + ".id", true)) a.id = *v;
    if (auto v = rd.get<std::string>(o, "role", f + ".role", true)) {
      if (auto r = role_from_string(*v)) a.role = *r;
      else rd.fail(f + ".role", "expected Explorer or Assistant");
    }
    a.capabilities = default_capabilities(a.role);
    if (auto v = rd.get<std::vector<std::string>>(o, "capabilities", f + ".capabilities", false)) {
      a.capabilities.clear();
      for (const auto& name : *v) {
        if (auto c = capability_from_string(name)) a.capabilities.insert(*c);
        else rd.fail(f + ".capabilities", "unknown capability '" + name + "'");
      }
    }
    const auto st = o.find("start");
    if (st == o.end()) {
      rd.fail(f + ".start", "missing");
    } else if (auto p = rd.point_value(*st, f + ".start")) {
      a.start.position = *p;
      if (st->is_object() && st->contains("heading") && (*st)["heading"].is_number()) {
        a.start.heading = (*st)["heading"].get<double>();
      }
    }
    a.speed = default_speed(a.role);
    if (auto v = rd.get<int>(o, "speed", f + ".speed", false)) a.speed = *v;
    if (a.speed < 1) rd.fail(f + ".speed", "must be at least 1 cell per tick");
    a.nav_sensor = rd.sensor(o, "nav_sensor", f + ".nav_sensor", default_nav_sensor(a.role));
    a.payload_sensor = rd.sensor(o, "payload_sensor", f + ".payload_sensor", default_payload_sensor(a.role));
    out.push_back(std::move(a));
  }
}

void parse_events(Reader& rd, const json& j, std::vector<ScheduledEvent>& out) {
  if (!j.is_array()) {
    rd.fail("events", "expected an array");
    return;
  }
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string f = index_field("events", i);
    const json& o = j[i];
    if (!o.is_object()) {
      rd.fail(f, "expected an object");
      continue;
    }
    ScheduledEvent e;
    if (auto v = rd.get<std::uint64_t>(o, "tick", f + ".tick", true)) e.tick = *v;
    if (e.tick == 0) rd.fail(f + ".tick", "must be at least 1");
    const auto type = rd.get<std::string>(o, "type", f + ".type", true);
    if (!type) continue;
    if (*type == "kill_master") {
      e.kind = ScheduledEvent::Kind::KillMaster;
    } else if (*type == "high_res_scan" || *type == "localization_support") {
      e.kind = *type == "high_res_scan" ? ScheduledEvent::Kind::HighResScan
                                        : ScheduledEvent::Kind::LocalizationSupport;
      if (auto p = rd.point(o, "at", f + ".at", true)) e.at = *p;
      if (auto v = rd.get<std::string>(o, "requester", f + ".requester", false)) e.requester = *v;
    } else {
      rd.fail(f + ".type", "unknown event type '" + *type + "'");
      continue;
    }
    out.push_back(std::move(e));
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidScenario, "cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string join(const std::vector<Diagnostic>& diags) {
  std::string out;
  for (const auto& d : diags) {
    if (!out.empty()) out += "; ";
    out += d.field + ": " + d.message;
  }
  return out;
}

}  // namespace

Scenario parse_scenario(std::string_view text, const std::filesystem::path& base_dir,
                        std::vector<Diagnostic>& diagnostics) {
  Scenario s;
  s.base_dir = base_dir;
  Reader rd(diagnostics);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    rd.fail("document", std::string("not valid JSON: ") + e.what());
    return s;
  }
  if (!j.is_object()) {
    rd.fail("document", "expected an object");
    return s;
  }

  if (auto v = rd.get<int>(j, "format", "format", true)) {
    s.format = *v;
    if (*v != kScenarioFormat) rd.fail("format", "unsupported format " + std::to_string(*v));
  }
  if (auto v = rd.get<std::string>(j, "name", "name", false)) s.name = *v;
  if (j.contains("map")) parse_map(rd, j["map"], s.map);
  else rd.fail("map", "missing");
  if (auto p = rd.point(j, "flood_seed", "flood_seed", true)) s.flood_seed = *p;
  if (j.contains("openings")) parse_openings(rd, j["openings"], s.openings);
  if (j.contains("obstacles")) parse_obstacles(rd, j["obstacles"], s.obstacles);
  if (j.contains("agents")) parse_agents(rd, j["agents"], s.agents);
  else rd.fail("agents", "missing");
  if (auto v = rd.number(j, "threshold", "threshold", true)) {
    s.threshold = *v;
    if (!(*v > 0.0 && *v <= 200.0)) rd.fail("threshold", "threshold out of range (0, 200]");
  }
  if (j.contains("human")) {
    const json& h = j["human"];
    if (!h.is_object()) {
      rd.fail("human", "expected an object");
    } else {
      if (auto v = rd.get<std::string>(h, "mode", "human.mode", true)) {
        if (auto m = human_mode_from_string(*v)) s.human.mode = *m;
        else rd.fail("human.mode", "expected scripted, interactive or disabled");
      }
      if (auto v = rd.get<std::uint64_t>(h, "delay", "human.delay", false)) s.human.delay = *v;
      if (h.contains("grasps")) {
        if (!h["grasps"].is_array()) {
          rd.fail("human.grasps", "expected an array of points");
        } else {
          for (std::size_t i = 0; i < h["grasps"].size(); ++i) {
            if (auto p = rd.point_value(h["grasps"][i], index_field("human.grasps", i))) s.human.grasps.push_back(*p);
          }
        }
      }
    }
  }
  if (auto v = rd.get<std::uint64_t>(j, "seed", "seed", false)) s.seed = *v;
  if (auto v = rd.get<std::uint64_t>(j, "tick_budget", "tick_budget", false)) s.tick_budget = *v;
  if (s.tick_budget == 0) rd.fail("tick_budget", "must be positive");
  if (j.contains("exploration")) {
    const json& e = j["exploration"];
    ExplorationSpec& x = s.exploration;
    if (auto v = rd.get<std::size_t>(e, "min_frontier_size", "exploration.min_frontier_size", false)) {
      x.min_frontier_size = *v;
    }
    if (auto v = rd.get<std::size_t>(e, "min_region_size", "exploration.min_region_size", false)) {
      x.min_region_size = *v;
    }
    if (auto v = rd.number(e, "inflation_radius", "exploration.inflation_radius", false)) x.inflation_radius = *v;
    if (auto v = rd.number(e, "cost_scale", "exploration.cost_scale", false)) x.cost_scale = *v;
    if (auto v = rd.get<int>(e, "max_grasp_retries", "exploration.max_grasp_retries", false)) x.max_grasp_retries = *v;
    if (auto v = rd.number(e, "manipulator_reach", "exploration.manipulator_reach", false)) x.manipulator_reach = *v;
    if (auto v = rd.get<int>(e, "stale_patience", "exploration.stale_patience", false)) x.stale_patience = *v;
    if (x.inflation_radius < 0.0) rd.fail("exploration.inflation_radius", "must not be negative");
    if (x.cost_scale < 0.0) rd.fail("exploration.cost_scale", "must not be negative");
    if (x.max_grasp_retries < 0) rd.fail("exploration.max_grasp_retries", "must not be negative");
    if (!(x.manipulator_reach > 0.0)) rd.fail("exploration.manipulator_reach", "must be positive");
  }
  if (auto v = rd.number(j, "grasp_tolerance", "grasp_tolerance", false)) s.grasp_tolerance = *v;
  if (!(s.grasp_tolerance > 0.0)) rd.fail("grasp_tolerance", "must be positive");
  if (j.contains("events")) parse_events(rd, j["events"], s.events);
  if (j.contains("metadata")) s.metadata_json = j["metadata"].dump();
  return s;
}

GroundTruthMap build_ground_truth(const Scenario& s) {
  OccupiedMask mask;
  if (!s.map.raster.empty()) {
    mask = mask_from_rows(s.map.raster, s.map.resolution, s.map.origin);
  } else {
    const std::filesystem::path mesh_path = s.base_dir / s.map.mesh;
    if (!std::filesystem::exists(mesh_path)) {
      throw Error(ErrorCode::InvalidScenario, "mesh file '" + mesh_path.string() + "' not found");
    }
    const TriangleMesh mesh = load_mesh(read_file(mesh_path));
    const SegmentSet segments = slice_mesh(mesh, s.map.slice_height);
    Bounds b;
    if (s.map.bounds) {
      b = *s.map.bounds;
    } else {
      if (segments.empty()) throw Error(ErrorCode::InvalidScenario, "slice plane does not cut the mesh");
      b = Bounds{segments.front().a, segments.front().a};
      for (const Segment& seg : segments) {
        for (Point2 p : {seg.a, seg.b}) {
          b.min.x = std::min(b.min.x, p.x);
          b.min.y = std::min(b.min.y, p.y);
          b.max.x = std::max(b.max.x, p.x);
          b.max.y = std::max(b.max.y, p.y);
        }
      }
      const double pad = 2.0 * s.map.resolution;
      b.min = Point2{b.min.x - pad, b.min.y - pad};
      b.max = Point2{b.max.x + pad, b.max.y + pad};
    }
    mask = rasterize(segments, s.map.resolution, b);
  }
  GroundTruthMap gt = flood_free(mask, s.flood_seed);
  return attach_openings(std::move(gt), s.openings);
}

std::vector<Obstacle> build_obstacles(const Scenario& s, const GridGeometry& g) {
  std::vector<Obstacle> out;
  for (const ObstacleSpec& spec : s.obstacles) {
    Obstacle o;
    o.id = spec.id;
    o.removable = spec.removable;
    o.handle = spec.handle;
    o.footprint = spec.cells;
    if (spec.rect) {
      const Bounds& r = *spec.rect;
      const int c0 = static_cast<int>(std::floor((r.min.x - g.origin.x) / g.resolution));
      const int c1 = static_cast<int>(std::floor((r.max.x - g.origin.x) / g.resolution));
      const int r0 = static_cast<int>(std::floor((r.min.y - g.origin.y) / g.resolution));
      const int r1 = static_cast<int>(std::floor((r.max.y - g.origin.y) / g.resolution));
      for (int row = r0; row <= r1; ++row) {
        for (int col = c0; col <= c1; ++col) {
          const Point2 c = g.center(Cell{col, row});
          if (c.x >= r.min.x && c.x <= r.max.x && c.y >= r.min.y && c.y <= r.max.y) o.footprint.push_back({col, row});
        }
      }
    }
    std::sort(o.footprint.begin(), o.footprint.end());
    o.footprint.erase(std::unique(o.footprint.begin(), o.footprint.end()), o.footprint.end());
    out.push_back(std::move(o));
  }
  return out;
}

AgentProfile profile_of(const AgentSpec& a) {
  return AgentProfile{a.id, a.role, a.capabilities, a.nav_sensor, a.payload_sensor, a.speed};
}

World build_world(const Scenario& s, std::optional<std::uint64_t> seed_override) {
  GroundTruthMap gt = build_ground_truth(s);
  std::vector<Obstacle> obstacles = build_obstacles(s, gt.geometry());
  World world(std::move(gt), std::move(obstacles), seed_override.value_or(s.seed));
  for (const AgentSpec& a : s.agents) world.add_agent(a.id, a.start, a.speed, a.nav_sensor);
  return world;
}

std::vector<Diagnostic> validate_scenario(std::string_view text, const std::filesystem::path& base_dir) {
  std::vector<Diagnostic> diags;
  const Scenario s = parse_scenario(text, base_dir, diags);
  if (!diags.empty()) return diags;

  // Agents, independent of the map.
  std::set<std::string> ids;
  bool explorer = false;
  for (std::size_t i = 0; i < s.agents.size(); ++i) {
    const AgentSpec& a = s.agents[i];
    const std::string f = index_field("agents", i);
    if (!ids.insert(a.id).second) diags.push_back({f + ".id", "duplicate agent id '" + a.id + "'"});
    explorer = explorer || a.role == Role::Explorer;
    try {
      check_profile(profile_of(a));
    } catch (const Error& e) {
      diags.push_back({f + ".capabilities", e.what()});
    }
  }
  if (!explorer) diags.push_back({"agents", "at least one Explorer is required"});
  for (std::size_t i = 0; i < s.events.size(); ++i) {
    const ScheduledEvent& e = s.events[i];
    if (!e.requester.empty() && !ids.count(e.requester)) {
      diags.push_back({index_field("events", i) + ".requester", "unknown agent '" + e.requester + "'"});
    }
  }

  std::optional<GroundTruthMap> gt;
  try {
    gt = build_ground_truth(s);
  } catch (const Error& e) {
    std::string field = "map";
    switch (e.code()) {
      case ErrorCode::SeedOnOccupied:
      case ErrorCode::SeedOutOfBounds: field = "flood_seed"; break;
      case ErrorCode::OpeningOffWall:
      case ErrorCode::DuplicateId: field = "openings"; break;
      case ErrorCode::ParseError:
      case ErrorCode::IndexOutOfRange: field = "map.mesh"; break;
      default: break;
    }
    diags.push_back({field, e.what()});
    return diags;
  }

  const GridGeometry& g = gt->geometry();
  const std::vector<Obstacle> obstacles = build_obstacles(s, g);
  std::vector<std::uint8_t> blocked(g.cell_count(), 0);
  std::set<std::string> obstacle_ids;
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    const std::string f = index_field("obstacles", i);
    if (!obstacle_ids.insert(obstacles[i].id).second) diags.push_back({f + ".id", "duplicate obstacle id"});
    if (obstacles[i].footprint.empty()) diags.push_back({f, "footprint covers no cell"});
    for (const Cell& c : obstacles[i].footprint) {
      if (!g.contains(c)) {
        diags.push_back({f, std::string(to_string(ErrorCode::ObstacleOutOfBounds)) + ": footprint leaves the map"});
        break;
      }
      blocked[g.index(c)] = 1;
    }
  }

  std::vector<std::pair<Cell, std::string>> taken;
  for (std::size_t i = 0; i < s.agents.size(); ++i) {
    const AgentSpec& a = s.agents[i];
    const std::string f = index_field("agents", i) + ".start";
    const auto c = g.locate(a.start.position);
    if (!c || !gt->is_free(*c) || blocked[g.index(*c)]) {
      diags.push_back({f, std::string(to_string(ErrorCode::AgentSpawnOnOccupied)) + ": start is not on free space"});
      continue;
    }
    for (const auto& [cell, other] : taken) {
      if (cell == *c) diags.push_back({f, "agent overlap with '" + other + "'"});
    }
    taken.emplace_back(*c, a.id);
  }
  return diags;
}

std::vector<Diagnostic> validate_scenario_file(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    return {{"file", e.what()}};
  }
  return validate_scenario(text, path.parent_path());
}

Scenario load_scenario_text(std::string_view text, const std::filesystem::path& base_dir) {
  const std::vector<Diagnostic> diags = validate_scenario(text, base_dir);
  if (!diags.empty()) throw Error(ErrorCode::InvalidScenario, join(diags));
  std::vector<Diagnostic> unused;
  return parse_scenario(text, base_dir, unused);
}

Scenario load_scenario(const std::filesystem::path& path) {
  return load_scenario_text(read_file(path), path.parent_path());
}

}  // namespace sitescout
