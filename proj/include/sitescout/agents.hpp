#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sitescout/error.hpp"
#include "sitescout/explore.hpp"
#include "sitescout/messages.hpp"
#include "sitescout/world.hpp"

namespace sitescout {

enum class Role { Explorer, Assistant };
enum class Capability { Mapper, ScannerPayload, Manipulator, HighResScanner, Localizer };

std::string_view to_string(Role r);
std::string_view to_string(Capability c);
std::optional<Role> role_from_string(std::string_view s);
std::optional<Capability> capability_from_string(std::string_view s);

struct AgentProfile {
  std::string id;
  Role role = Role::Explorer;
  std::set<Capability> capabilities;
  SensorConfig nav_sensor;
  SensorConfig payload_sensor;
  int speed = 1;

  bool has(Capability c) const { return capabilities.count(c) != 0; }
};

// Explorer: Mapper + ScannerPayload. Assistant: Manipulator + HighResScanner.
std::set<Capability> default_capabilities(Role r);
int default_speed(Role r);

// InvalidScenario when an explorer lacks Mapper or an assistant lacks
// Manipulator.
void check_profile(const AgentProfile& p);

Capability required_capability(HelpKind k);

// ---------------------------------------------------------------------------
// Explorer

enum class ExplorerMode { Exploring, NavigatingToGoal, WaitingAssist, ClearingStale, Finished };
std::string_view to_string(ExplorerMode m);

struct ExplorerState {
  ExplorerMode mode = ExplorerMode::Exploring;
  std::string request_id;         // WaitingAssist
  std::optional<Point2> target;   // NavigatingToGoal goal or ClearingStale access point
  bool arrived = false;           // ClearingStale
  int patience = 0;               // ClearingStale ticks spent blocked after arrival
  std::uint64_t requests_sent = 0;
};

struct VerdictInput {
  MissionVerdict verdict;
  bool current_goal_open = false;  // the goal being driven to still borders unknown space
};
struct ArrivedInput {};
struct PathBlockedInput {};
struct ObstacleClearedInput {
  ObstacleCleared message;
};
struct AssistFailedInput {
  AssistFailed message;
};
struct OverrideInput {
  Point2 goal;
};

using ExplorerInput =
    std::variant<VerdictInput, ArrivedInput, PathBlockedInput, ObstacleClearedInput, AssistFailedInput, OverrideInput>;
inline constexpr std::size_t kExplorerInputCount = std::variant_size_v<ExplorerInput>;
std::string_view explorer_input_name(const ExplorerInput& in);

struct PlanTo {
  Point2 goal;
};
struct HoldPosition {};
struct StopScan {};
struct PublishHelp {
  HelpRequest request;
};
struct ReportStalled {
  std::string reason;
};

using ExplorerCommand = std::variant<PlanTo, HoldPosition, StopScan, PublishHelp, ReportStalled>;

struct ExplorerParams {
  int stale_patience = 30;  // ticks blocked at the access point before giving up
};

struct ExplorerStep {
  ExplorerState state;
  std::vector<ExplorerCommand> commands;
};

// Pure transition function. Throws IllegalTransition for inputs the current
// mode cannot accept.
ExplorerStep explorer_tick(const ExplorerState& state, const ExplorerInput& input, const std::string& agent_id,
                           const ExplorerParams& params = {});

// ---------------------------------------------------------------------------
// Assistant

enum class AssistantMode { Idle, NavigatingToAccess, AwaitingGrasp, Removing, Reporting };
std::string_view to_string(AssistantMode m);

struct AssistantState {
  AssistantMode mode = AssistantMode::Idle;
  std::string request_id;
  HelpKind kind = HelpKind::ManipulationNeeded;
  Point2 target;
  int grasp_failures = 0;
  int replans = 0;
  std::optional<Point2> grasp;
};

struct AssignmentInput {
  Assignment assignment;
};
struct GraspInput {
  Point2 point;
};
struct RemovalSucceededInput {
  std::string obstacle_id;
};
struct RemovalFailedInput {
  ErrorCode code = ErrorCode::GraspMismatch;
};
struct CaptureDoneInput {};
struct UnreachableInput {
  std::string reason;
};

using AssistantInput = std::variant<AssignmentInput, ArrivedInput, PathBlockedInput, GraspInput, RemovalSucceededInput,
                                    RemovalFailedInput, CaptureDoneInput, UnreachableInput>;
inline constexpr std::size_t kAssistantInputCount = std::variant_size_v<AssistantInput>;
std::string_view assistant_input_name(const AssistantInput& in);

struct QueryHuman {
  std::string request_id;
  Point2 near;
};
struct RemoveAt {
  Point2 grasp;
};
struct CaptureAt {
  Point2 location;
};
struct PublishCleared {
  ObstacleCleared message;
};
struct PublishFailed {
  AssistFailed message;
};
struct PublishComplete {
  TaskComplete message;
};

using AssistantCommand =
    std::variant<PlanTo, HoldPosition, QueryHuman, RemoveAt, CaptureAt, PublishCleared, PublishFailed, PublishComplete>;

struct AssistantParams {
  int max_grasp_retries = 3;  // re-queries after the first failed grasp
  int max_replans = 10;
};

struct AssistantStep {
  AssistantState state;
  std::vector<AssistantCommand> commands;
};

AssistantStep assistant_tick(const AssistantState& state, const AssistantInput& input, const std::string& agent_id,
                             const AssistantParams& params = {});

// ---------------------------------------------------------------------------
// Allocation

struct RosterEntry {
  AgentProfile profile;
  Point2 position;
  bool busy = false;
};

struct AssignTo {
  std::string agent;
};
struct EscalateToHuman {};
struct WaitForCapable {};  // capable agents exist but all are busy

using Allocation = std::variant<AssignTo, EscalateToHuman, WaitForCapable>;

// Nearest idle agent holding the required capability (ties: lower id). The
// requester is skipped if present in the roster.
Allocation allocate_request(const HelpRequest& request, std::span<const RosterEntry> roster);

// ---------------------------------------------------------------------------
// Human agent

enum class HumanMode { Scripted, Interactive, Disabled };
std::string_view to_string(HumanMode m);
std::optional<HumanMode> human_mode_from_string(std::string_view s);

struct GraspPending {};
using HumanResponse = std::variant<GraspPending, Point2>;

// Mailbox between the mission loop and the operator. deposit() may be called
// from any thread.
class HumanChannel {
 public:
  explicit HumanChannel(HumanMode mode = HumanMode::Scripted, std::uint64_t delay_ticks = 5);

  HumanMode mode() const { return mode_; }
  std::uint64_t delay() const { return delay_; }

  // Opens (or reopens) a query. `scripted_answer` is the point a scripted
  // human will return.
  void query(const std::string& request_id, std::uint64_t tick, std::optional<Point2> scripted_answer);

  // Operator input for an open query; UnknownRequest otherwise.
  void deposit(const std::string& request_id, Point2 grasp);

  // Pending until an answer is due. Closes the query when it answers.
  // UnknownRequest for ids without an open query.
  HumanResponse respond(const std::string& request_id, std::uint64_t tick);

  bool is_open(const std::string& request_id) const;
  std::vector<std::string> open_requests() const;
  void close(const std::string& request_id);

 private:
  struct Query {
    std::uint64_t asked_at = 0;
    std::optional<Point2> scripted;
    std::optional<Point2> deposited;
  };

  HumanMode mode_;
  std::uint64_t delay_;
  mutable std::mutex mutex_;
  std::map<std::string, Query> queries_;
};

HumanResponse human_respond(HumanChannel& channel, const std::string& request_id, std::uint64_t tick);

}  // namespace sitescout
