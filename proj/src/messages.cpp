#include "sitescout/messages.hpp"

#include <cmath>
#include <json.hpp>

#include "sitescout/error.hpp"

namespace sitescout {

using nlohmann::json;

std::string_view to_string(HelpKind k) {
  switch (k) {
    case HelpKind::ManipulationNeeded: return "ManipulationNeeded";
    case HelpKind::HighResScan: return "HighResScan";
    case HelpKind::LocalizationSupport: return "LocalizationSupport";
  }
  return "ManipulationNeeded";
}

std::optional<HelpKind> help_kind_from_string(std::string_view s) {
  for (HelpKind k : {HelpKind::ManipulationNeeded, HelpKind::HighResScan, HelpKind::LocalizationSupport}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

namespace {

json point(Point2 p) { return json::array({p.x, p.y}); }

Point2 point_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw Error(ErrorCode::ParseError, "point must be [x, y]");
  Point2 p{j.at(0).get<double>(), j.at(1).get<double>()};
  if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw Error(ErrorCode::ParseError, "point is not finite");
  return p;
}

HelpKind kind_from(const json& j) {
  const auto k = help_kind_from_string(j.get<std::string>());
  if (!k) throw Error(ErrorCode::ParseError, "unknown help kind '" + j.get<std::string>() + "'");
  return *k;
}

struct Encoder {
  json operator()(const HelpRequest& m) const {
    json j{{"request_id", m.request_id},
           {"requester", m.requester},
           {"coordinates", point(m.coordinates)},
           {"kind", to_string(m.kind)}};
    j["region_ref"] = m.region_ref ? json(*m.region_ref) : json(nullptr);
    return j;
  }
  json operator()(const Assignment& m) const {
    return {{"request_id", m.request_id},
            {"assignee", m.assignee},
            {"coordinates", point(m.coordinates)},
            {"kind", to_string(m.kind)}};
  }
  json operator()(const ObstacleCleared& m) const {
    return {{"request_id", m.request_id},
            {"agent", m.agent},
            {"obstacle_id", m.obstacle_id},
            {"access_point", point(m.access_point)}};
  }
  json operator()(const AssistFailed& m) const {
    return {{"request_id", m.request_id}, {"agent", m.agent}, {"reason", m.reason}};
  }
  json operator()(const MapShareChunk& m) const {
    return {{"agent", m.agent},   {"tick", m.tick},           {"width", m.width},
            {"row_begin", m.row_begin}, {"row_count", m.row_count}, {"logodds", m.logodds}};
  }
  json operator()(const TaskComplete& m) const {
    return {{"request_id", m.request_id},
            {"agent", m.agent},
            {"kind", to_string(m.kind)},
            {"location", point(m.location)}};
  }
};

}  // namespace

std::string_view payload_type(const Payload& p) {
  static constexpr std::string_view names[] = {"help_request",   "assignment", "obstacle_cleared",
                                               "assist_failed", "map_share",  "task_complete"};
  return names[p.index()];
}

std::string encode_payload(const Payload& p) {
  json j = std::visit(Encoder{}, p);
  j["schema"] = kMessageSchemaVersion;
  j["type"] = payload_type(p);
  return j.dump();
}

Payload decode_payload(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  try {
    if (j.at("schema").get<int>() != kMessageSchemaVersion) {
      throw Error(ErrorCode::ParseError, "unsupported schema version");
    }
    const std::string type = j.at("type").get<std::string>();
    if (type == "help_request") {
      HelpRequest m{j.at("request_id"), j.at("requester"), point_from(j.at("coordinates")), kind_from(j.at("kind")),
                    std::nullopt};
      if (!j.at("region_ref").is_null()) m.region_ref = j.at("region_ref").get<int>();
      return m;
    }
    if (type == "assignment") {
      return Assignment{j.at("request_id"), j.at("assignee"), point_from(j.at("coordinates")),
                        kind_from(j.at("kind"))};
    }
    if (type == "obstacle_cleared") {
      return ObstacleCleared{j.at("request_id"), j.at("agent"), j.at("obstacle_id"), point_from(j.at("access_point"))};
    }
    if (type == "assist_failed") {
      return AssistFailed{j.at("request_id"), j.at("agent"), j.at("reason")};
    }
    if (type == "map_share") {
      MapShareChunk m{j.at("agent"),     j.at("tick"),      j.at("width"),
                      j.at("row_begin"), j.at("row_count"), j.at("logodds").get<std::vector<double>>()};
      if (m.logodds.size() != static_cast<std::size_t>(m.width) * static_cast<std::size_t>(m.row_count)) {
        throw Error(ErrorCode::ParseError, "map_share chunk size does not match width * row_count");
      }
      return m;
    }
    if (type == "task_complete") {
      return TaskComplete{j.at("request_id"), j.at("agent"), kind_from(j.at("kind")), point_from(j.at("location"))};
    }
    throw Error(ErrorCode::ParseError, "unknown payload type '" + type + "'");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
}

}  // namespace sitescout
