#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sitescout/agents.hpp"
#include "sitescout/floorplan.hpp"
#include "sitescout/world.hpp"

namespace sitescout {

inline constexpr int kScenarioFormat = 1;

struct MapSpec {
  double resolution = 0.1;
  // Mesh source.
  std::string mesh;  // path, relative to the scenario file
  double slice_height = 1.0;
  std::optional<Bounds> bounds;  // default: segment bounding box plus 2 cells
  // Inline raster source, first row on top; '#' is occupied.
  std::vector<std::string> raster;
  Point2 origin;
};

struct ObstacleSpec {
  std::string id;
  std::optional<Bounds> rect;  // meters; covers every cell whose center lies inside
  std::vector<Cell> cells;
  bool removable = false;
  std::optional<Point2> handle;
};

struct AgentSpec {
  std::string id;
  Role role = Role::Explorer;
  std::set<Capability> capabilities;
  Pose2 start;
  int speed = 1;
  SensorConfig nav_sensor;
  SensorConfig payload_sensor;
};

struct HumanSpec {
  HumanMode mode = HumanMode::Scripted;
  std::uint64_t delay = 5;
  std::vector<Point2> grasps;  // scripted answers used in order before falling back to handles
};

struct ExplorationSpec {
  std::size_t min_frontier_size = 3;
  std::size_t min_region_size = 4;
  double inflation_radius = 0.2;
  double cost_scale = 0.01;
  int max_grasp_retries = 3;
  double manipulator_reach = 1.0;
  int stale_patience = 30;
};

struct ScheduledEvent {
  enum class Kind { KillMaster, HighResScan, LocalizationSupport };
  Kind kind = Kind::KillMaster;
  std::uint64_t tick = 0;
  Point2 at;
  std::string requester;  // help events; default: first explorer
};

struct Scenario {
  int format = kScenarioFormat;
  std::string name;
  MapSpec map;
  Point2 flood_seed;
  std::vector<Opening> openings;
  std::vector<ObstacleSpec> obstacles;
  std::vector<AgentSpec> agents;
  double threshold = 95.0;
  HumanSpec human;
  std::uint64_t seed = 0;
  std::uint64_t tick_budget = 10000;
  ExplorationSpec exploration;
  double grasp_tolerance = 0.3;
  std::vector<ScheduledEvent> events;
  std::string metadata_json = "{}";  // carried through, never interpreted
  std::filesystem::path base_dir;
};

struct Diagnostic {
  std::string field;
  std::string message;
};

// Parses a scenario document. Structural problems are collected into
// `diagnostics`; the returned scenario is only meaningful when none were
// added.
Scenario parse_scenario(std::string_view text, const std::filesystem::path& base_dir,
                        std::vector<Diagnostic>& diagnostics);

// Parse plus semantic checks (files, seed, openings, obstacles, agents).
std::vector<Diagnostic> validate_scenario(std::string_view text, const std::filesystem::path& base_dir);
std::vector<Diagnostic> validate_scenario_file(const std::filesystem::path& path);

// Throws InvalidScenario carrying every diagnostic.
Scenario load_scenario(const std::filesystem::path& path);
Scenario load_scenario_text(std::string_view text, const std::filesystem::path& base_dir);

// Ground truth with openings attached.
GroundTruthMap build_ground_truth(const Scenario& s);
std::vector<Obstacle> build_obstacles(const Scenario& s, const GridGeometry& g);
AgentProfile profile_of(const AgentSpec& a);

// Ground truth, obstacles and agents. AgentSpawnOnOccupied,
// ObstacleOutOfBounds.
World build_world(const Scenario& s, std::optional<std::uint64_t> seed_override = std::nullopt);

}  // namespace sitescout
