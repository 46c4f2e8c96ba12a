#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sitescout/agents.hpp"
#include "sitescout/explore.hpp"
#include "sitescout/gridmap.hpp"
#include "sitescout/msgbus.hpp"
#include "sitescout/scenario.hpp"
#include "sitescout/world.hpp"

namespace sitescout {

enum class Outcome { Running, Done, Aborted };
enum class AbortReason { None, AssistFailed, MasterLost, TickBudget, OperatorStop, Stalled, EscalationUnserved, InternalError };

std::string_view to_string(Outcome o);
std::string_view to_string(AbortReason r);

struct OperatorCommand {
  enum class Kind { Start, Stop, OverrideGoal, Teleop, GraspPoint };
  Kind kind = Kind::Start;
  std::optional<Point2> point;  // OverrideGoal, GraspPoint
  std::string agent;            // Teleop (OverrideGoal: optional, default first explorer)
  int dcol = 0;                 // Teleop
  int drow = 0;
  std::string request_id;  // GraspPoint
};

std::string_view to_string(OperatorCommand::Kind k);
std::optional<OperatorCommand::Kind> command_kind_from_string(std::string_view s);

struct TimedCommand {
  std::uint64_t tick = 0;
  OperatorCommand command;
};

using FieldValue = std::variant<std::string, double, std::int64_t, bool>;

struct MissionEvent {
  std::uint64_t tick = 0;
  std::string type;
  std::vector<std::pair<std::string, FieldValue>> fields;
};

// Payload-sensor coverage of ground-truth free space.
struct ScanCoverage {
  GridGeometry geometry;
  std::vector<std::uint8_t> scanned;        // per cell
  std::vector<std::uint8_t> observed_cell;  // occupied cells already in observed_points
  std::vector<Point2> observed_points;
  std::size_t scanned_free = 0;
  std::size_t gt_free = 0;

  double percent() const { return gt_free == 0 ? 0.0 : 100.0 * double(scanned_free) / double(gt_free); }
};

ScanCoverage make_coverage(const GroundTruthMap& gt);

// Marks ground-truth free cells that a payload ray crosses before its first
// occupied cell, and records that occupied cell's center once.
void update_coverage(ScanCoverage& coverage, Pose2 pose, const SensorConfig& payload, const World& world);

struct AgentSnapshot {
  std::string id;
  Role role = Role::Explorer;
  Pose2 pose;
  Cell cell;
  std::string state;
  double distance = 0.0;
};

struct PendingRequest {
  HelpRequest request;
  std::uint64_t opened_at = 0;
  std::string assignee;  // empty until allocated; "HA" when escalated
  std::string status;    // queued | assigned | escalated
};

struct EventCounters {
  std::uint64_t help_requests = 0;
  std::uint64_t assignments = 0;
  std::uint64_t escalations = 0;
  std::uint64_t grasp_queries = 0;
  std::uint64_t grasp_failures = 0;
  std::uint64_t obstacles_removed = 0;
  std::uint64_t messages_delivered = 0;
  std::uint64_t operator_commands = 0;
};

struct MissionSnapshot {
  std::uint64_t tick = 0;
  double phi = 0.0;
  double threshold = 0.0;
  VerdictKind verdict = VerdictKind::Continue;
  std::vector<AgentSnapshot> agents;
  std::vector<PendingRequest> pending;
  std::shared_ptr<const OccupancyGrid> merged;
  EventCounters counters;
  double coverage = 0.0;
  bool started = false;
  bool master_alive = true;
  Outcome outcome = Outcome::Running;
  AbortReason abort_reason = AbortReason::None;
  std::string diagnostic;
};

struct HelpLogEntry {
  HelpRequest request;
  std::uint64_t tick = 0;
  std::string assignee;
  std::string resolution;  // cleared | completed | failed | open
  std::uint64_t resolved_at = 0;
};

// How the footprint of a removed obstacle disappeared from the merged map.
struct StaleReport {
  std::string obstacle_id;
  std::uint64_t removed_at = 0;
  std::uint64_t cleared_at = 0;  // tick the last footprint cell stopped being Occupied
  std::size_t cells = 0;
  int max_reobservations = 0;  // worst cell: ticks with a miss until it left Occupied
  bool cleared = false;
};

struct MissionResult {
  Outcome outcome = Outcome::Running;
  AbortReason abort_reason = AbortReason::None;
  std::string diagnostic;
  double final_phi = 0.0;
  double threshold = 0.0;
  std::uint64_t ticks = 0;
  std::vector<std::pair<std::string, double>> distances;  // meters, by agent id
  std::vector<HelpLogEntry> help_log;
  double coverage = 0.0;
  std::vector<StaleReport> stale;
  std::vector<double> phi_history;  // index = tick
  std::optional<double> first_blocked_phi;
  std::uint64_t first_blocked_tick = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> artifacts;
};

struct MissionOptions {
  std::optional<std::uint64_t> seed;       // overrides the scenario seed
  bool auto_start = true;                  // false: wait for a Start command
  std::vector<TimedCommand> scripted_commands;  // applied at their tick, as if posted
};

class Mission {
 public:
  explicit Mission(Scenario scenario, MissionOptions options = {});
  ~Mission();
  Mission(const Mission&) = delete;
  Mission& operator=(const Mission&) = delete;

  // Thread-safe. Commands are applied at the next tick boundary. Throws
  // InvalidCommand for malformed commands and IllegalTransition when the
  // mission cannot take them (already started, already over).
  void submit(OperatorCommand command);
  // Thread-safe. UnknownRequest unless a grasp query with that id is open.
  void submit_grasp(const std::string& request_id, Point2 grasp);

  // Runs one tick. Returns false when the mission is over or waiting for
  // Start.
  bool step();
  // Steps until the mission ends (starting it if needed).
  MissionResult run();

  bool finished() const;
  bool started() const;

  // Latest immutable snapshot; thread-safe.
  std::shared_ptr<const MissionSnapshot> snapshot() const;
  MissionResult result() const;

  // One JSON line per tick, tick 0 first.
  std::string metrics_log() const;
  const std::vector<MissionEvent>& events() const;

  // Called from the mission thread for every event, after the tick's
  // snapshot is published.
  void set_listener(std::function<void(const MissionEvent&)> listener);

  const Scenario& scenario() const;
  const World& world() const;
  const GroundTruthMap& ground_truth() const;
  const OccupancyGrid& merged_grid() const;
  const OccupancyGrid& local_grid(const std::string& agent) const;
  const ScanCoverage& coverage() const;
  MasterRegistry& master();
  HumanChannel& human();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

MissionResult run_mission(const Scenario& scenario, std::optional<std::uint64_t> seed = std::nullopt);

}  // namespace sitescout
