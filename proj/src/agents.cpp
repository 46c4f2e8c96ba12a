#include "sitescout/agents.hpp"

#include <algorithm>
#include <limits>

#include "sitescout/error.hpp"

namespace sitescout {

std::string_view to_string(Role r) { return r == Role::Explorer ? "Explorer" : "Assistant"; }

std::string_view to_string(Capability c) {
  switch (c) {
    case Capability::Mapper: return "Mapper";
    case Capability::ScannerPayload: return "ScannerPayload";
    case Capability::Manipulator: return "Manipulator";
    case Capability::HighResScanner: return "HighResScanner";
    case Capability::Localizer: return "Localizer";
  }
  return "Mapper";
}

std::optional<Role> role_from_string(std::string_view s) {
  if (s == "Explorer") return Role::Explorer;
  if (s == "Assistant") return Role::Assistant;
  return std::nullopt;
}

std::optional<Capability> capability_from_string(std::string_view s) {
  for (Capability c : {Capability::Mapper, Capability::ScannerPayload, Capability::Manipulator,
                       Capability::HighResScanner, Capability::Localizer}) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

std::set<Capability> default_capabilities(Role r) {
  if (r == Role::Explorer) return {Capability::Mapper, Capability::ScannerPayload};
  return {Capability::Manipulator, Capability::HighResScanner};
}

int default_speed(Role r) { return r == Role::Explorer ? 2 : 3; }

void check_profile(const AgentProfile& p) {
  if (p.role == Role::Explorer && !p.has(Capability::Mapper)) {
    throw Error(ErrorCode::InvalidScenario, "explorer '" + p.id + "' lacks Mapper");
  }
  if (p.role == Role::Assistant && !p.has(Capability::Manipulator)) {
    throw Error(ErrorCode::InvalidScenario, "assistant '" + p.id + "' lacks Manipulator");
  }
}

Capability required_capability(HelpKind k) {
  switch (k) {
    case HelpKind::ManipulationNeeded: return Capability::Manipulator;
    case HelpKind::HighResScan: return Capability::HighResScanner;
    case HelpKind::LocalizationSupport: return Capability::Localizer;
  }
  return Capability::Manipulator;
}

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

[[noreturn]] void illegal(std::string_view machine, std::string_view mode, std::string_view input) {
  throw Error(ErrorCode::IllegalTransition,
              std::string(machine) + " cannot accept " + std::string(input) + " in " + std::string(mode));
}

const BlockedRegion& largest(const std::vector<BlockedRegion>& regions) {
  return *std::max_element(regions.begin(), regions.end(), [](const BlockedRegion& a, const BlockedRegion& b) {
    if (a.cells.size() != b.cells.size()) return a.cells.size() < b.cells.size();
    return a.id > b.id;
  });
}

}  // namespace

// ---------------------------------------------------------------------------
// Explorer

std::string_view to_string(ExplorerMode m) {
  switch (m) {
    case ExplorerMode::Exploring: return "Exploring";
    case ExplorerMode::NavigatingToGoal: return "NavigatingToGoal";
    case ExplorerMode::WaitingAssist: return "WaitingAssist";
    case ExplorerMode::ClearingStale: return "ClearingStale";
    case ExplorerMode::Finished: return "Finished";
  }
  return "Exploring";
}

std::string_view explorer_input_name(const ExplorerInput& in) {
  static constexpr std::string_view names[] = {"Verdict",         "Arrived",      "PathBlocked",
                                               "ObstacleCleared", "AssistFailed", "Override"};
  return names[in.index()];
}

namespace {

ExplorerStep go_to(ExplorerState s, Point2 goal) {
  s.mode = ExplorerMode::NavigatingToGoal;
  s.target = goal;
  s.arrived = false;
  s.patience = 0;
  s.request_id.clear();
  return {s, {PlanTo{goal}}};
}

ExplorerStep finish(ExplorerState s) {
  s.mode = ExplorerMode::Finished;
  s.target.reset();
  return {s, {HoldPosition{}, StopScan{}}};
}

ExplorerStep ask_for_help(ExplorerState s, const BlockedVerdict& b, const std::string& agent_id) {
  if (b.regions.empty()) {
    s.mode = ExplorerMode::Exploring;
    s.target.reset();
    return {s, {HoldPosition{}, ReportStalled{"no frontier and no reachable blocked region"}}};
  }
  const BlockedRegion& r = largest(b.regions);
  ++s.requests_sent;
  HelpRequest req;
  req.request_id = agent_id + "-req-" + std::to_string(s.requests_sent);
  req.requester = agent_id;
  req.coordinates = r.access.location;
  req.kind = HelpKind::ManipulationNeeded;
  req.region_ref = r.id;
  s.mode = ExplorerMode::WaitingAssist;
  s.request_id = req.request_id;
  s.target.reset();
  return {s, {HoldPosition{}, PublishHelp{req}}};
}

}  // namespace

ExplorerStep explorer_tick(const ExplorerState& state, const ExplorerInput& input, const std::string& agent_id,
                           const ExplorerParams& params) {
  const std::string_view mode = to_string(state.mode);
  const std::string_view name = explorer_input_name(input);
  auto reject = [&]() -> ExplorerStep { illegal("explorer", mode, name); };
  ExplorerState s = state;

  switch (state.mode) {
    case ExplorerMode::Exploring:
      return std::visit(
          overloaded{
              [&](const VerdictInput& v) -> ExplorerStep {
                if (const auto* c = std::get_if<ContinueVerdict>(&v.verdict)) return go_to(s, c->goal.point);
                if (std::holds_alternative<DoneVerdict>(v.verdict)) return finish(s);
                return ask_for_help(s, std::get<BlockedVerdict>(v.verdict), agent_id);
              },
              [&](const OverrideInput& o) -> ExplorerStep { return go_to(s, o.goal); },
              [&](const auto&) -> ExplorerStep { return reject(); },
          },
          input);

    case ExplorerMode::NavigatingToGoal:
      return std::visit(
          overloaded{
              [&](const VerdictInput& v) -> ExplorerStep {
                if (const auto* c = std::get_if<ContinueVerdict>(&v.verdict)) {
                  if (v.current_goal_open) return {s, {}};
                  return go_to(s, c->goal.point);
                }
                if (std::holds_alternative<DoneVerdict>(v.verdict)) return finish(s);
                return ask_for_help(s, std::get<BlockedVerdict>(v.verdict), agent_id);
              },
              [&](const ArrivedInput&) -> ExplorerStep {
                s.mode = ExplorerMode::Exploring;
                s.target.reset();
                return {s, {}};
              },
              [&](const PathBlockedInput&) -> ExplorerStep {
                s.mode = ExplorerMode::Exploring;
                s.target.reset();
                return {s, {}};
              },
              [&](const OverrideInput& o) -> ExplorerStep { return go_to(s, o.goal); },
              [&](const auto&) -> ExplorerStep { return reject(); },
          },
          input);

    case ExplorerMode::WaitingAssist:
      return std::visit(
          overloaded{
              [&](const VerdictInput& v) -> ExplorerStep {
                if (std::holds_alternative<DoneVerdict>(v.verdict)) return finish(s);
                return {s, {}};
              },
              [&](const ObstacleClearedInput& m) -> ExplorerStep {
                if (m.message.request_id != state.request_id) return reject();
                s.mode = ExplorerMode::ClearingStale;
                s.target = m.message.access_point;
                s.arrived = false;
                s.patience = 0;
                s.request_id.clear();
                return {s, {PlanTo{m.message.access_point}}};
              },
              [&](const AssistFailedInput& m) -> ExplorerStep {
                if (m.message.request_id != state.request_id) return reject();
                s.mode = ExplorerMode::Finished;
                s.request_id.clear();
                return {s, {HoldPosition{}}};
              },
              [&](const auto&) -> ExplorerStep { return reject(); },
          },
          input);

    case ExplorerMode::ClearingStale:
      return std::visit(
          overloaded{
              [&](const VerdictInput& v) -> ExplorerStep {
                if (std::holds_alternative<ContinueVerdict>(v.verdict)) {
                  s.mode = ExplorerMode::Exploring;
                  s.target.reset();
                  s.arrived = false;
                  s.patience = 0;
                  return {s, {HoldPosition{}}};
                }
                if (std::holds_alternative<DoneVerdict>(v.verdict)) return finish(s);
                if (!s.arrived) return {s, {}};
                if (++s.patience > params.stale_patience) {
                  return {s, {HoldPosition{}, ReportStalled{"blocked region did not reopen after clearance"}}};
                }
                return {s, {}};
              },
              [&](const ArrivedInput&) -> ExplorerStep {
                s.arrived = true;
                return {s, {}};
              },
              [&](const PathBlockedInput&) -> ExplorerStep { return {s, {PlanTo{*s.target}}}; },
              [&](const OverrideInput& o) -> ExplorerStep { return go_to(s, o.goal); },
              [&](const auto&) -> ExplorerStep { return reject(); },
          },
          input);

    case ExplorerMode::Finished:
      return std::visit(
          overloaded{
              [&](const VerdictInput&) -> ExplorerStep { return {s, {}}; },
              [&](const ObstacleClearedInput&) -> ExplorerStep { return {s, {}}; },
              [&](const AssistFailedInput&) -> ExplorerStep { return {s, {}}; },
              [&](const auto&) -> ExplorerStep { return reject(); },
          },
          input);
  }
  return reject();
}

// ---------------------------------------------------------------------------
// Assistant

std::string_view to_string(AssistantMode m) {
  switch (m) {
    case AssistantMode::Idle: return "Idle";
    case AssistantMode::NavigatingToAccess: return "NavigatingToAccess";
    case AssistantMode::AwaitingGrasp: return "AwaitingGrasp";
    case AssistantMode::Removing: return "Removing";
    case AssistantMode::Reporting: return "Reporting";
  }
  return "Idle";
}

std::string_view assistant_input_name(const AssistantInput& in) {
  static constexpr std::string_view names[] = {"Assignment",       "Arrived",       "PathBlocked",
                                               "Grasp",            "RemovalSucceeded", "RemovalFailed",
                                               "CaptureDone",      "Unreachable"};
  return names[in.index()];
}

namespace {

AssistantStep give_up(AssistantState s, const std::string& agent_id, std::string reason) {
  AssistFailed msg{s.request_id, agent_id, std::move(reason)};
  s = AssistantState{};
  return {s, {HoldPosition{}, PublishFailed{msg}}};
}

}  // namespace

AssistantStep assistant_tick(const AssistantState& state, const AssistantInput& input, const std::string& agent_id,
                             const AssistantParams& params) {
  const std::string_view mode = to_string(state.mode);
  const std::string_view name = assistant_input_name(input);
  auto reject = [&]() -> AssistantStep { illegal("assistant", mode, name); };
  AssistantState s = state;

  switch (state.mode) {
    case AssistantMode::Idle:
      if (const auto* a = std::get_if<AssignmentInput>(&input)) {
        if (a->assignment.assignee != agent_id) return reject();
        s = AssistantState{};
        s.mode = AssistantMode::NavigatingToAccess;
        s.request_id = a->assignment.request_id;
        s.kind = a->assignment.kind;
        s.target = a->assignment.coordinates;
        return {s, {PlanTo{s.target}}};
      }
      return reject();

    case AssistantMode::NavigatingToAccess:
      return std::visit(
          overloaded{
              [&](const ArrivedInput&) -> AssistantStep {
                if (s.kind == HelpKind::ManipulationNeeded) {
                  s.mode = AssistantMode::AwaitingGrasp;
                  return {s, {QueryHuman{s.request_id, s.target}}};
                }
                s.mode = AssistantMode::Reporting;
                return {s, {CaptureAt{s.target}}};
              },
              [&](const PathBlockedInput&) -> AssistantStep {
                if (++s.replans > params.max_replans) return give_up(s, agent_id, "access point unreachable");
                return {s, {PlanTo{s.target}}};
              },
              [&](const UnreachableInput& u) -> AssistantStep { return give_up(s, agent_id, u.reason); },
              [&](const auto&) -> AssistantStep { return reject(); },
          },
          input);

    case AssistantMode::AwaitingGrasp:
      if (const auto* g = std::get_if<GraspInput>(&input)) {
        s.mode = AssistantMode::Removing;
        s.grasp = g->point;
        return {s, {RemoveAt{g->point}}};
      }
      return reject();

    case AssistantMode::Removing:
      return std::visit(
          overloaded{
              [&](const RemovalSucceededInput& r) -> AssistantStep {
                ObstacleCleared msg{s.request_id, agent_id, r.obstacle_id, s.target};
                s = AssistantState{};
                return {s, {PublishCleared{msg}}};
              },
              [&](const RemovalFailedInput& r) -> AssistantStep {
                if (r.code != ErrorCode::GraspMismatch) {
                  return give_up(s, agent_id, std::string("removal failed: ") + std::string(to_string(r.code)));
                }
                if (++s.grasp_failures > params.max_grasp_retries) {
                  return give_up(s, agent_id, "grasp retries exhausted");
                }
                s.mode = AssistantMode::AwaitingGrasp;
                s.grasp.reset();
                return {s, {QueryHuman{s.request_id, s.target}}};
              },
              [&](const auto&) -> AssistantStep { return reject(); },
          },
          input);

    case AssistantMode::Reporting:
      if (std::holds_alternative<CaptureDoneInput>(input)) {
        TaskComplete msg{s.request_id, agent_id, s.kind, s.target};
        s = AssistantState{};
        return {s, {PublishComplete{msg}}};
      }
      return reject();
  }
  return reject();
}

// ---------------------------------------------------------------------------
// Allocation

Allocation allocate_request(const HelpRequest& request, std::span<const RosterEntry> roster) {
  const Capability need = required_capability(request.kind);
  const RosterEntry* best = nullptr;
  double best_d = std::numeric_limits<double>::infinity();
  bool any_capable = false;
  for (const RosterEntry& e : roster) {
    if (e.profile.id == request.requester || !e.profile.has(need)) continue;
    any_capable = true;
    if (e.busy) continue;
    const double d = distance(e.position, request.coordinates);
    if (d < best_d || (d == best_d && best && e.profile.id < best->profile.id)) {
      best_d = d;
      best = &e;
    }
  }
  if (best) return AssignTo{best->profile.id};
  if (any_capable) return WaitForCapable{};
  return EscalateToHuman{};
}

// ---------------------------------------------------------------------------
// Human agent

std::string_view to_string(HumanMode m) {
  switch (m) {
    case HumanMode::Scripted: return "scripted";
    case HumanMode::Interactive: return "interactive";
    case HumanMode::Disabled: return "disabled";
  }
  return "scripted";
}

std::optional<HumanMode> human_mode_from_string(std::string_view s) {
  for (HumanMode m : {HumanMode::Scripted, HumanMode::Interactive, HumanMode::Disabled}) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

HumanChannel::HumanChannel(HumanMode mode, std::uint64_t delay_ticks) : mode_(mode), delay_(delay_ticks) {}

void HumanChannel::query(const std::string& request_id, std::uint64_t tick, std::optional<Point2> scripted_answer) {
  std::lock_guard lock(mutex_);
  queries_[request_id] = Query{tick, scripted_answer, std::nullopt};
}

void HumanChannel::deposit(const std::string& request_id, Point2 grasp) {
  std::lock_guard lock(mutex_);
  if (mode_ == HumanMode::Disabled) throw Error(ErrorCode::InvalidCommand, "human channel is disabled");
  const auto it = queries_.find(request_id);
  if (it == queries_.end()) throw Error(ErrorCode::UnknownRequest, "no open grasp query '" + request_id + "'");
  it->second.deposited = grasp;
}

HumanResponse HumanChannel::respond(const std::string& request_id, std::uint64_t tick) {
  std::lock_guard lock(mutex_);
  const auto it = queries_.find(request_id);
  if (it == queries_.end()) throw Error(ErrorCode::UnknownRequest, "no open grasp query '" + request_id + "'");
  const Query& q = it->second;
  std::optional<Point2> answer;
  if (q.deposited) {
    answer = q.deposited;
  } else if (mode_ == HumanMode::Scripted && q.scripted && tick >= q.asked_at + delay_) {
    answer = q.scripted;
  }
  if (!answer) return GraspPending{};
  queries_.erase(it);
  return *answer;
}

bool HumanChannel::is_open(const std::string& request_id) const {
  std::lock_guard lock(mutex_);
  return queries_.count(request_id) != 0;
}

std::vector<std::string> HumanChannel::open_requests() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [id, q] : queries_) out.push_back(id);
  return out;
}

void HumanChannel::close(const std::string& request_id) {
  std::lock_guard lock(mutex_);
  queries_.erase(request_id);
}

HumanResponse human_respond(HumanChannel& channel, const std::string& request_id, std::uint64_t tick) {
  return channel.respond(request_id, tick);
}

}  // namespace sitescout
