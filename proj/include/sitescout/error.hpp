#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sitescout {

enum class ErrorCode {
  // gridmap
  PoseOutOfBounds,
  NonFiniteValue,
  GridMismatch,
  EmptyGroundTruth,
  EmptyList,
  // floorplan
  ParseError,
  IndexOutOfRange,
  SeedOnOccupied,
  SeedOutOfBounds,
  OpeningOffWall,
  DuplicateId,
  // explore
  NoAccessExists,
  // simworld
  AgentSpawnOnOccupied,
  ObstacleOutOfBounds,
  PoseInOccupied,
  UnknownAgent,
  GraspMismatch,
  NotRemovable,
  // msgbus
  MasterUnavailable,
  DuplicateNode,
  UnknownNode,
  // agents
  IllegalTransition,
  RetriesExhausted,
  UnknownRequest,
  // scenario / gateway
  InvalidScenario,
  InvalidCommand,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sitescout
