#include "sitescout/documents.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "sitescout/error.hpp"

namespace sitescout {

using nlohmann::ordered_json;

namespace {

constexpr std::pair<OperatorCommand::Kind, const char*> kWireKinds[] = {
    {OperatorCommand::Kind::Start, "start"},
    {OperatorCommand::Kind::Stop, "stop"},
    {OperatorCommand::Kind::OverrideGoal, "override_goal"},
    {OperatorCommand::Kind::Teleop, "teleop"},
    {OperatorCommand::Kind::GraspPoint, "grasp_point"},
};

std::string wire_kind(OperatorCommand::Kind k) {
  for (const auto& [kind, name] : kWireKinds) {
    if (kind == k) return name;
  }
  return "start";
}

std::optional<OperatorCommand::Kind> kind_from_wire(std::string_view s) {
  for (const auto& [kind, name] : kWireKinds) {
    if (s == name) return kind;
  }
  return command_kind_from_string(s);
}

ordered_json field_json(const FieldValue& v) {
  return std::visit([](const auto& x) { return ordered_json(x); }, v);
}

ordered_json event_json(const MissionEvent& e) {
  ordered_json j;
  j["tick"] = e.tick;
  j["type"] = e.type;
  for (const auto& [k, v] : e.fields) j[k] = field_json(v);
  return j;
}

ordered_json agent_json(const AgentSnapshot& a) {
  ordered_json j;
  j["id"] = a.id;
  j["role"] = std::string(to_string(a.role));
  j["x"] = a.pose.position.x;
  j["y"] = a.pose.position.y;
  j["heading"] = a.pose.heading;
  j["col"] = a.cell.col;
  j["row"] = a.cell.row;
  j["state"] = a.state;
  j["distance"] = a.distance;
  return j;
}

ordered_json request_json(const HelpRequest& r) {
  ordered_json j;
  j["request_id"] = r.request_id;
  j["requester"] = r.requester;
  j["kind"] = std::string(to_string(r.kind));
  j["x"] = r.coordinates.x;
  j["y"] = r.coordinates.y;
  j["region"] = r.region_ref ? ordered_json(*r.region_ref) : ordered_json(nullptr);
  return j;
}

ordered_json geometry_json(const GridGeometry& g) {
  ordered_json j;
  j["width"] = g.width;
  j["height"] = g.height;
  j["resolution"] = g.resolution;
  j["origin"] = {{"x", g.origin.x}, {"y", g.origin.y}};
  return j;
}

double finite_number(const ordered_json& j, const char* what) {
  if (!j.is_number()) throw Error(ErrorCode::InvalidCommand, std::string(what) + " must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw Error(ErrorCode::InvalidCommand, std::string(what) + " must be finite");
  return v;
}

// Accepts {"x":..,"y":..}, {"point":[x,y]} or {"point":{"x":..,"y":..}}.
std::optional<Point2> read_point(const ordered_json& j) {
  if (j.contains("point")) {
    const ordered_json& p = j["point"];
    if (p.is_array() && p.size() == 2) return Point2{finite_number(p[0], "point[0]"), finite_number(p[1], "point[1]")};
    if (p.is_object() && p.contains("x") && p.contains("y")) {
      return Point2{finite_number(p["x"], "point.x"), finite_number(p["y"], "point.y")};
    }
    throw Error(ErrorCode::InvalidCommand, "point must be [x, y] or {x, y}");
  }
  if (j.contains("x") || j.contains("y")) {
    if (!j.contains("x") || !j.contains("y")) throw Error(ErrorCode::InvalidCommand, "both x and y are required");
    return Point2{finite_number(j["x"], "x"), finite_number(j["y"], "y")};
  }
  return std::nullopt;
}

ordered_json parse_object(std::string_view text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidCommand, std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::InvalidCommand, "expected a JSON object");
  return j;
}

}  // namespace

std::string metrics_line(const MissionSnapshot& s, std::span<const MissionEvent> events) {
  ordered_json j;
  j["schema"] = kDocumentSchemaVersion;
  j["tick"] = s.tick;
  j["phi"] = s.phi;
  j["verdict"] = std::string(to_string(s.verdict));
  j["coverage"] = s.coverage;
  j["outcome"] = std::string(to_string(s.outcome));
  j["pending"] = s.pending.size();
  j["agents"] = ordered_json::array();
  for (const AgentSnapshot& a : s.agents) j["agents"].push_back(agent_json(a));
  j["events"] = ordered_json::array();
  for (const MissionEvent& e : events) j["events"].push_back(event_json(e));
  return j.dump();
}

std::string snapshot_document(const MissionSnapshot& s) {
  ordered_json j;
  j["schema"] = kDocumentSchemaVersion;
  j["tick"] = s.tick;
  j["phi"] = s.phi;
  j["threshold"] = s.threshold;
  j["verdict"] = std::string(to_string(s.verdict));
  j["started"] = s.started;
  j["master_alive"] = s.master_alive;
  j["outcome"] = std::string(to_string(s.outcome));
  j["abort_reason"] = std::string(to_string(s.abort_reason));
  j["diagnostic"] = s.diagnostic;
  j["coverage"] = s.coverage;
  j["agents"] = ordered_json::array();
  for (const AgentSnapshot& a : s.agents) j["agents"].push_back(agent_json(a));
  j["pending"] = ordered_json::array();
  for (const PendingRequest& p : s.pending) {
    ordered_json r = request_json(p.request);
    r["opened_at"] = p.opened_at;
    r["assignee"] = p.assignee;
    r["status"] = p.status;
    j["pending"].push_back(r);
  }
  const EventCounters& c = s.counters;
  j["counters"] = {{"help_requests", c.help_requests},
                   {"assignments", c.assignments},
                   {"escalations", c.escalations},
                   {"grasp_queries", c.grasp_queries},
                   {"grasp_failures", c.grasp_failures},
                   {"obstacles_removed", c.obstacles_removed},
                   {"messages_delivered", c.messages_delivered},
                   {"operator_commands", c.operator_commands}};
  if (s.merged) {
    j["map"] = geometry_json(s.merged->geometry());
    j["map"]["free"] = s.merged->count(CellState::Free);
    j["map"]["occupied"] = s.merged->count(CellState::Occupied);
    j["map"]["unknown"] = s.merged->count(CellState::Unknown);
  }
  return j.dump();
}

std::string result_document(const MissionResult& r) {
  ordered_json j;
  j["schema"] = kDocumentSchemaVersion;
  j["outcome"] = std::string(to_string(r.outcome));
  j["abort_reason"] = std::string(to_string(r.abort_reason));
  j["diagnostic"] = r.diagnostic;
  j["final_phi"] = r.final_phi;
  j["threshold"] = r.threshold;
  j["ticks"] = r.ticks;
  j["seed"] = r.seed;
  j["coverage"] = r.coverage;
  j["distances"] = ordered_json::object();
  for (const auto& [id, d] : r.distances) j["distances"][id] = d;
  j["help_requests"] = ordered_json::array();
  for (const HelpLogEntry& h : r.help_log) {
    ordered_json e = request_json(h.request);
    e["tick"] = h.tick;
    e["assignee"] = h.assignee;
    e["resolution"] = h.resolution;
    e["resolved_at"] = h.resolved_at;
    j["help_requests"].push_back(e);
  }
  j["stale"] = ordered_json::array();
  for (const StaleReport& s : r.stale) {
    j["stale"].push_back({{"obstacle", s.obstacle_id},
                          {"removed_at", s.removed_at},
                          {"cleared_at", s.cleared_at},
                          {"cells", s.cells},
                          {"max_reobservations", s.max_reobservations},
                          {"cleared", s.cleared}});
  }
  j["first_blocked_phi"] = r.first_blocked_phi ? ordered_json(*r.first_blocked_phi) : ordered_json(nullptr);
  j["first_blocked_tick"] = r.first_blocked_tick;
  j["phi_history"] = r.phi_history;
  j["artifacts"] = r.artifacts;
  return j.dump(2) + "\n";
}

std::string event_document(const MissionEvent& e) {
  ordered_json j = event_json(e);
  j["schema"] = kDocumentSchemaVersion;
  return j.dump();
}

std::string map_document(const OccupancyGrid& grid) {
  const GridGeometry& g = grid.geometry();
  ordered_json j;
  j["schema"] = kDocumentSchemaVersion;
  j.update(geometry_json(g));
  j["palette"] = {{"free", pgm_value(CellState::Free)},
                  {"unknown", pgm_value(CellState::Unknown)},
                  {"occupied", pgm_value(CellState::Occupied)}};
  j["row_order"] = "top_first";
  j["rows"] = ordered_json::array();
  for (int row = g.height - 1; row >= 0; --row) {
    std::vector<int> line(static_cast<std::size_t>(g.width));
    for (int col = 0; col < g.width; ++col) line[static_cast<std::size_t>(col)] = pgm_value(grid.state(Cell{col, row}));
    j["rows"].push_back(line);
  }
  return j.dump();
}

std::string groundtruth_document(const GroundTruthMap& gt) {
  const GridGeometry& g = gt.geometry();
  ordered_json j;
  j["schema"] = kDocumentSchemaVersion;
  j.update(geometry_json(g));
  j["palette"] = {{"free", pgm_value(CellState::Free)},
                  {"outside", pgm_value(CellState::Unknown)},
                  {"occupied", pgm_value(CellState::Occupied)}};
  j["row_order"] = "top_first";
  j["free_cells"] = gt.free_count();
  j["rows"] = ordered_json::array();
  for (int row = g.height - 1; row >= 0; --row) {
    std::vector<int> line(static_cast<std::size_t>(g.width));
    for (int col = 0; col < g.width; ++col) {
      const GtLabel l = gt.label(Cell{col, row});
      line[static_cast<std::size_t>(col)] = l == GtLabel::Free       ? pgm_value(CellState::Free)
                                            : l == GtLabel::Occupied ? pgm_value(CellState::Occupied)
                                                                     : pgm_value(CellState::Unknown);
    }
    j["rows"].push_back(line);
  }
  j["openings"] = ordered_json::array();
  for (const Opening& o : gt.openings()) {
    j["openings"].push_back({{"id", o.id},
                             {"x", o.center.x},
                             {"y", o.center.y},
                             {"kind", std::string(to_string(o.kind))},
                             {"hinge_side", std::string(to_string(o.hinge_side))},
                             {"actuation", std::string(to_string(o.actuation))}});
  }
  return j.dump();
}

std::string command_document(const OperatorCommand& c) {
  ordered_json j;
  j["schema"] = kDocumentSchemaVersion;
  j["kind"] = wire_kind(c.kind);
  if (c.point) j["point"] = {c.point->x, c.point->y};
  if (!c.agent.empty()) j["agent"] = c.agent;
  if (c.kind == OperatorCommand::Kind::Teleop) {
    j["dcol"] = c.dcol;
    j["drow"] = c.drow;
  }
  if (!c.request_id.empty()) j["request_id"] = c.request_id;
  return j.dump();
}

OperatorCommand parse_command(std::string_view text) {
  const ordered_json j = parse_object(text);
  if (!j.contains("kind") || !j["kind"].is_string()) throw Error(ErrorCode::InvalidCommand, "kind is required");
  const auto kind = kind_from_wire(j["kind"].get<std::string>());
  if (!kind) throw Error(ErrorCode::InvalidCommand, "unknown kind '" + j["kind"].get<std::string>() + "'");
  OperatorCommand c;
  c.kind = *kind;
  c.point = read_point(j);
  if (j.contains("agent")) {
    if (!j["agent"].is_string()) throw Error(ErrorCode::InvalidCommand, "agent must be a string");
    c.agent = j["agent"].get<std::string>();
  }
  for (const char* key : {"dcol", "drow"}) {
    if (!j.contains(key)) continue;
    if (!j[key].is_number_integer()) throw Error(ErrorCode::InvalidCommand, std::string(key) + " must be an integer");
    (std::string_view(key) == "dcol" ? c.dcol : c.drow) = j[key].get<int>();
  }
  if (j.contains("request_id")) {
    if (!j["request_id"].is_string()) throw Error(ErrorCode::InvalidCommand, "request_id must be a string");
    c.request_id = j["request_id"].get<std::string>();
  }
  using K = OperatorCommand::Kind;
  if ((c.kind == K::OverrideGoal || c.kind == K::GraspPoint) && !c.point) {
    throw Error(ErrorCode::InvalidCommand, wire_kind(c.kind) + " needs a point");
  }
  if (c.kind == K::Teleop && c.agent.empty()) throw Error(ErrorCode::InvalidCommand, "teleop needs an agent");
  if (c.kind == K::GraspPoint && c.request_id.empty()) {
    throw Error(ErrorCode::InvalidCommand, "grasp_point needs a request_id");
  }
  return c;
}

Point2 parse_grasp(std::string_view text) {
  const auto p = read_point(parse_object(text));
  if (!p) throw Error(ErrorCode::InvalidCommand, "grasp needs x and y");
  return *p;
}

std::string error_document(std::string_view code, std::string_view message) {
  ordered_json j;
  j["schema"] = kDocumentSchemaVersion;
  j["error"] = std::string(code);
  j["message"] = std::string(message);
  return j.dump();
}

std::vector<TimedCommand> commands_from_log(std::string_view metrics_log) {
  std::vector<TimedCommand> out;
  std::istringstream in{std::string(metrics_log)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ParseError, std::string("metrics line: ") + e.what());
    }
    for (const ordered_json& e : j.value("events", ordered_json::array())) {
      if (e.value("type", "") != "operator_command") continue;
      const auto kind = command_kind_from_string(e.value("kind", ""));
      if (!kind) throw Error(ErrorCode::ParseError, "unknown operator command in log");
      OperatorCommand c;
      c.kind = *kind;
      if (e.contains("x") && e.contains("y")) c.point = Point2{e["x"].get<double>(), e["y"].get<double>()};
      c.agent = e.value("agent", "");
      c.dcol = e.value("dcol", 0);
      c.drow = e.value("drow", 0);
      c.request_id = e.value("request_id", "");
      out.push_back(TimedCommand{e["tick"].get<std::uint64_t>(), c});
    }
  }
  return out;
}

std::string export_coverage(const ScanCoverage& coverage, const GroundTruthMap& gt) {
  const GridGeometry& g = coverage.geometry;
  std::string out = "P5\n" + std::to_string(g.width) + " " + std::to_string(g.height) + "\n255\n";
  for (int row = g.height - 1; row >= 0; --row) {
    for (int col = 0; col < g.width; ++col) {
      const Cell c{col, row};
      const std::size_t k = g.index(c);
      const std::uint8_t v = coverage.scanned[k] ? 254 : gt.label(c) == GtLabel::Free ? 205 : 0;
      out.push_back(static_cast<char>(v));
    }
  }
  return out;
}

}  // namespace sitescout
