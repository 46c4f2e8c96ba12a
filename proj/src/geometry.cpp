#include "sitescout/geometry.hpp"

#include "sitescout/error.hpp"

namespace sitescout {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::PoseOutOfBounds: return "PoseOutOfBounds";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::EmptyGroundTruth: return "EmptyGroundTruth";
    case ErrorCode::EmptyList: return "EmptyList";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::SeedOnOccupied: return "SeedOnOccupied";
    case ErrorCode::SeedOutOfBounds: return "SeedOutOfBounds";
    case ErrorCode::OpeningOffWall: return "OpeningOffWall";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::NoAccessExists: return "NoAccessExists";
    case ErrorCode::AgentSpawnOnOccupied: return "AgentSpawnOnOccupied";
    case ErrorCode::ObstacleOutOfBounds: return "ObstacleOutOfBounds";
    case ErrorCode::PoseInOccupied: return "PoseInOccupied";
    case ErrorCode::UnknownAgent: return "UnknownAgent";
    case ErrorCode::GraspMismatch: return "GraspMismatch";
    case ErrorCode::NotRemovable: return "NotRemovable";
    case ErrorCode::MasterUnavailable: return "MasterUnavailable";
    case ErrorCode::DuplicateNode: return "DuplicateNode";
    case ErrorCode::UnknownNode: return "UnknownNode";
    case ErrorCode::IllegalTransition: return "IllegalTransition";
    case ErrorCode::RetriesExhausted: return "RetriesExhausted";
    case ErrorCode::UnknownRequest: return "UnknownRequest";
    case ErrorCode::InvalidScenario: return "InvalidScenario";
    case ErrorCode::InvalidCommand: return "InvalidCommand";
  }
  return "Unknown";
}

void check_geometry(const GridGeometry& g) {
  if (!(g.resolution > 0.0) || !std::isfinite(g.resolution)) {
    throw Error(ErrorCode::InvalidScenario, "resolution must be positive");
  }
  if (g.width < 1 || g.height < 1) {
    throw Error(ErrorCode::InvalidScenario, "grid must be at least 1x1");
  }
  if (!std::isfinite(g.origin.x) || !std::isfinite(g.origin.y)) {
    throw Error(ErrorCode::InvalidScenario, "origin must be finite");
  }
}

}  // namespace sitescout
