#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sitescout/floorplan.hpp"
#include "sitescout/geometry.hpp"
#include "sitescout/gridmap.hpp"

namespace sitescout {

struct SensorConfig {
  double max_range = 5.0;              // meters
  double angular_resolution_deg = 1.0;  // one ray per step over 360 degrees
  double noise_stddev = 0.0;            // meters, gaussian on hit ranges
};

struct Obstacle {
  std::string id;
  std::vector<Cell> footprint;
  bool removable = false;
  std::optional<Point2> handle;
};

struct AgentBody {
  std::string id;
  Pose2 pose;
  Cell cell;
  int speed = 1;  // cells per tick
  SensorConfig sensor;
  std::vector<Cell> path;  // remaining waypoints, next first
  double distance = 0.0;   // meters travelled
};

// Per-agent commands for one tick.
struct FollowPath {
  std::vector<Cell> cells;  // may start with the agent's own cell
};
struct StopMotion {};
struct TeleopStep {
  int dcol = 0;
  int drow = 0;
};
struct AgentCommand {
  std::string agent;
  std::variant<FollowPath, StopMotion, TeleopStep> action;
};

struct WorldEvent {
  enum class Kind { Arrived, PathBlocked };
  Kind kind = Kind::Arrived;
  std::string agent;
  Cell cell;          // where the agent stands
  Cell blocked_cell;  // PathBlocked only
};

std::string_view to_string(WorldEvent::Kind k);

struct StepResult {
  std::vector<WorldEvent> events;
  std::vector<std::pair<std::string, Scan>> scans;  // agent id order
};

class World {
 public:
  // Throws ObstacleOutOfBounds for footprints leaving the grid and
  // InvalidScenario for removable obstacles without a handle.
  World(GroundTruthMap gt, std::vector<Obstacle> obstacles, std::uint64_t seed);

  const GroundTruthMap& ground_truth() const { return gt_; }
  const GridGeometry& geometry() const { return gt_.geometry(); }

  // True map: everything that is not ground-truth Free, plus obstacle
  // footprints.
  bool occupied(Cell c) const { return true_map_[geometry().index(c)] != 0; }
  std::span<const std::uint8_t> true_map() const { return true_map_; }
  const std::vector<Obstacle>& obstacles() const { return obstacles_; }
  std::uint64_t tick() const { return tick_; }

  // AgentSpawnOnOccupied when the start cell is blocked or out of bounds.
  void add_agent(const std::string& id, Pose2 start, int speed, SensorConfig sensor);
  const AgentBody& agent(const std::string& id) const;
  const std::vector<AgentBody>& agents() const { return agents_; }
  std::vector<Cell> agent_cells(const std::string& except = {}) const;

  // Planar 360 degree scan from `pose`. Hit ranges are the middle of the
  // first occupied cell along the ray; rays leaving the grid report no hit at
  // max_range.
  Scan raycast_scan(Pose2 pose, const SensorConfig& sensor);

  // Applies the commands, moves every agent up to `speed` cells along its
  // path (id order), scans with each agent's sensor and advances the tick.
  // Motion into an occupied cell or another agent stops and reports
  // PathBlocked.
  StepResult step(std::span<const AgentCommand> commands = {});

  // Removes the removable obstacle whose handle lies within `tolerance` of
  // the grasp point and returns its id. NotRemovable when the grasp lands on
  // a wall or a fixed obstacle, GraspMismatch otherwise.
  std::string remove_obstacle(Point2 grasp, double tolerance = 0.3);

 private:
  void rebuild_true_map();
  AgentBody& body(const std::string& id);
  bool blocked_by_agent(Cell c, const std::string& self) const;
  void move(AgentBody& a, Cell next);

  GroundTruthMap gt_;
  std::vector<Obstacle> obstacles_;
  std::vector<std::uint8_t> true_map_;
  std::vector<AgentBody> agents_;
  std::uint64_t tick_ = 0;
  std::mt19937_64 rng_;
};

}  // namespace sitescout
