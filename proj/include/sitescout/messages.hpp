#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sitescout/geometry.hpp"

namespace sitescout {

inline constexpr int kMessageSchemaVersion = 1;

enum class HelpKind { ManipulationNeeded, HighResScan, LocalizationSupport };
std::string_view to_string(HelpKind k);
std::optional<HelpKind> help_kind_from_string(std::string_view s);

struct HelpRequest {
  std::string request_id;
  std::string requester;
  Point2 coordinates;
  HelpKind kind = HelpKind::ManipulationNeeded;
  std::optional<int> region_ref;

  friend bool operator==(const HelpRequest&, const HelpRequest&) = default;
};

struct Assignment {
  std::string request_id;
  std::string assignee;
  Point2 coordinates;
  HelpKind kind = HelpKind::ManipulationNeeded;

  friend bool operator==(const Assignment&, const Assignment&) = default;
};

struct ObstacleCleared {
  std::string request_id;
  std::string agent;
  std::string obstacle_id;
  Point2 access_point;

  friend bool operator==(const ObstacleCleared&, const ObstacleCleared&) = default;
};

struct AssistFailed {
  std::string request_id;
  std::string agent;
  std::string reason;

  friend bool operator==(const AssistFailed&, const AssistFailed&) = default;
};

// One band of rows of an agent's log-odds grid.
struct MapShareChunk {
  std::string agent;
  std::uint64_t tick = 0;
  int width = 0;
  int row_begin = 0;
  int row_count = 0;
  std::vector<double> logodds;  // row_count * width values

  friend bool operator==(const MapShareChunk&, const MapShareChunk&) = default;
};

struct TaskComplete {
  std::string request_id;
  std::string agent;
  HelpKind kind = HelpKind::HighResScan;
  Point2 location;

  friend bool operator==(const TaskComplete&, const TaskComplete&) = default;
};

using Payload = std::variant<HelpRequest, Assignment, ObstacleCleared, AssistFailed, MapShareChunk, TaskComplete>;

// Type tag used in encoded payloads ("help_request", ...).
std::string_view payload_type(const Payload& p);

// Versioned JSON record layout; every record carries "schema" and "type".
std::string encode_payload(const Payload& p);
// Throws ParseError on malformed input or an unsupported schema version.
Payload decode_payload(std::string_view text);

namespace topics {
inline constexpr std::string_view kHelpRequests = "/help_requests";
inline constexpr std::string_view kAssignments = "/assignments";
inline constexpr std::string_view kObstacleCleared = "/obstacle_cleared";
inline constexpr std::string_view kAssistFailed = "/assist_failed";
inline constexpr std::string_view kMapShare = "/map_share";
inline constexpr std::string_view kTaskStatus = "/task_status";
}  // namespace topics

}  // namespace sitescout
