#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sitescout/floorplan.hpp"
#include "sitescout/gridmap.hpp"
#include "sitescout/mission.hpp"

namespace sitescout {

// Every document carries "schema": kDocumentSchemaVersion.
inline constexpr int kDocumentSchemaVersion = 1;

// One metrics line (no trailing newline): tick, phi, verdict, coverage,
// agents and the tick's events.
std::string metrics_line(const MissionSnapshot& snapshot, std::span<const MissionEvent> events);

std::string snapshot_document(const MissionSnapshot& snapshot);
std::string result_document(const MissionResult& result);
std::string event_document(const MissionEvent& event);

// Rows top first, one palette value per cell, plus geometry and palette.
std::string map_document(const OccupancyGrid& grid);
std::string groundtruth_document(const GroundTruthMap& gt);

std::string command_document(const OperatorCommand& command);
// InvalidCommand on malformed input.
OperatorCommand parse_command(std::string_view text);
Point2 parse_grasp(std::string_view text);

std::string error_document(std::string_view code, std::string_view message);

// Operator commands recorded in a metrics log, with the tick they took
// effect.
std::vector<TimedCommand> commands_from_log(std::string_view metrics_log);

// Coverage mask as a graymap: scanned 254, unscanned free 205, other 0.
std::string export_coverage(const ScanCoverage& coverage, const GroundTruthMap& gt);

}  // namespace sitescout
