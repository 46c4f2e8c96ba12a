#include "sitescout/mission.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <mutex>
#include <set>

#include "sitescout/costmap.hpp"
#include "sitescout/documents.hpp"
#include "sitescout/error.hpp"
#include "sitescout/planner.hpp"
#include "sitescout/raytrace.hpp"

namespace sitescout {

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Running: return "Running";
    case Outcome::Done: return "Done";
    case Outcome::Aborted: return "Aborted";
  }
  return "Running";
}

std::string_view to_string(AbortReason r) {
  switch (r) {
    case AbortReason::None: return "None";
    case AbortReason::AssistFailed: return "AssistFailed";
    case AbortReason::MasterLost: return "MasterLost";
    case AbortReason::TickBudget: return "TickBudget";
    case AbortReason::OperatorStop: return "OperatorStop";
    case AbortReason::Stalled: return "Stalled";
    case AbortReason::EscalationUnserved: return "EscalationUnserved";
    case AbortReason::InternalError: return "InternalError";
  }
  return "None";
}

std::string_view to_string(OperatorCommand::Kind k) {
  switch (k) {
    case OperatorCommand::Kind::Start: return "Start";
    case OperatorCommand::Kind::Stop: return "Stop";
    case OperatorCommand::Kind::OverrideGoal: return "OverrideGoal";
    case OperatorCommand::Kind::Teleop: return "Teleop";
    case OperatorCommand::Kind::GraspPoint: return "GraspPoint";
  }
  return "Start";
}

std::optional<OperatorCommand::Kind> command_kind_from_string(std::string_view s) {
  using K = OperatorCommand::Kind;
  for (K k : {K::Start, K::Stop, K::OverrideGoal, K::Teleop, K::GraspPoint}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

ScanCoverage make_coverage(const GroundTruthMap& gt) {
  ScanCoverage c;
  c.geometry = gt.geometry();
  c.scanned.assign(c.geometry.cell_count(), 0);
  c.observed_cell.assign(c.geometry.cell_count(), 0);
  c.gt_free = gt.free_count();
  return c;
}

void update_coverage(ScanCoverage& coverage, Pose2 pose, const SensorConfig& payload, const World& world) {
  const GridGeometry& g = coverage.geometry;
  const GroundTruthMap& gt = world.ground_truth();
  if (!g.locate(pose.position)) return;
  const int n = std::max(1, static_cast<int>(std::lround(360.0 / payload.angular_resolution_deg)));
  for (int i = 0; i < n; ++i) {
    const double angle = pose.heading + 2.0 * std::numbers::pi * i / n;
    traverse_ray(g, pose.position, angle, payload.max_range, [&](Cell c, double, double) {
      const std::size_t k = g.index(c);
      if (world.occupied(c)) {
        if (!coverage.observed_cell[k]) {
          coverage.observed_cell[k] = 1;
          coverage.observed_points.push_back(g.center(c));
        }
        return false;
      }
      if (gt.label_at(k) == GtLabel::Free && !coverage.scanned[k]) {
        coverage.scanned[k] = 1;
        ++coverage.scanned_free;
      }
      return true;
    });
  }
}

namespace {

constexpr const char* kCoordinatorNode = "CMS";
constexpr const char* kHumanNode = "HA";

struct MasterDown {
  std::string what;
};

struct ExplorerCtx {
  std::string id;
  ExplorerState state;
  std::optional<Cell> goal_cell;
  std::set<Cell> blacklist;
  bool payload_on = true;
  std::optional<TopicHandle> help_pub;
  std::optional<TopicHandle> cleared_sub;
  std::optional<TopicHandle> failed_sub;
};

struct PendingAction {
  std::variant<RemoveAt, CaptureAt> action;
};

struct AssistantCtx {
  std::string id;
  AssistantState state;
  std::optional<PendingAction> action;
  std::optional<TopicHandle> assign_sub;
  std::optional<TopicHandle> cleared_pub;
  std::optional<TopicHandle> failed_pub;
  std::optional<TopicHandle> status_pub;
};

struct Escalation {
  std::string request_id;
  int failures = 0;
};

struct StaleTracker {
  std::string obstacle_id;
  std::uint64_t removed_at = 0;
  std::vector<Cell> cells;
  std::vector<int> observations;
  std::vector<bool> cleared;
  int worst = 0;
  bool done = false;
};

}  // namespace

struct Mission::Impl {
  Scenario sc;
  MissionOptions opts;
  std::uint64_t seed = 0;
  World world;
  std::map<std::string, AgentProfile> profiles;
  std::vector<ExplorerCtx> explorers;
  std::vector<AssistantCtx> assistants;
  std::map<std::string, OccupancyGrid> local;
  std::map<std::string, OccupancyGrid> shared;  // coordinator's copy via /map_share
  std::shared_ptr<const OccupancyGrid> merged;
  ScanCoverage coverage;
  PlannerParams planner;

  std::shared_ptr<MasterRegistry> master;
  std::map<std::string, TopicHandle> map_pubs;
  std::optional<TopicHandle> map_sub;
  std::optional<TopicHandle> help_sub;
  std::optional<TopicHandle> assign_pub;
  std::optional<TopicHandle> coord_cleared_sub;
  std::optional<TopicHandle> coord_failed_sub;
  std::optional<TopicHandle> status_sub;
  std::optional<TopicHandle> human_cleared_pub;
  std::optional<TopicHandle> human_status_pub;

  HumanChannel human;
  std::size_t scripted_grasp_index = 0;
  std::vector<PendingRequest> pending;
  std::set<std::string> reserved;
  std::vector<Escalation> escalations;
  std::vector<HelpLogEntry> help_log;
  std::vector<StaleTracker> stale;
  std::vector<AgentCommand> next_commands;

  std::uint64_t tick = 0;
  bool started = false;
  Outcome outcome = Outcome::Running;
  AbortReason reason = AbortReason::None;
  std::string diagnostic;
  double phi = 0.0;
  VerdictKind verdict = VerdictKind::Continue;
  EventCounters counters;
  std::vector<double> phi_history;
  std::optional<double> first_blocked_phi;
  std::uint64_t first_blocked_tick = 0;

  std::vector<MissionEvent> tick_events;
  std::vector<MissionEvent> all_events;
  std::vector<std::string> metrics;
  std::function<void(const MissionEvent&)> listener;

  mutable std::mutex mailbox_mutex;
  std::deque<OperatorCommand> mailbox;
  std::atomic<bool> finished_flag{false};
  std::atomic<bool> started_flag{false};
  mutable std::mutex snapshot_mutex;
  std::shared_ptr<const MissionSnapshot> latest;

  Impl(Scenario s, MissionOptions o)
      : sc(std::move(s)), opts(std::move(o)), seed(opts.seed.value_or(sc.seed)), world(build_world(sc, seed)),
        human(sc.human.mode, sc.human.delay) {
    planner.cost_scale = sc.exploration.cost_scale;
    coverage = make_coverage(world.ground_truth());
    started = opts.auto_start;
    started_flag = started;

    master = MasterRegistry::create();
    master->register_node(kCoordinatorNode);
    master->register_node(kHumanNode);
    map_sub = master->open_topic(kCoordinatorNode, std::string(topics::kMapShare), TopicRole::Subscriber);
    help_sub = master->open_topic(kCoordinatorNode, std::string(topics::kHelpRequests), TopicRole::Subscriber);
    assign_pub = master->open_topic(kCoordinatorNode, std::string(topics::kAssignments), TopicRole::Publisher);
    coord_cleared_sub =
        master->open_topic(kCoordinatorNode, std::string(topics::kObstacleCleared), TopicRole::Subscriber);
    coord_failed_sub = master->open_topic(kCoordinatorNode, std::string(topics::kAssistFailed), TopicRole::Subscriber);
    status_sub = master->open_topic(kCoordinatorNode, std::string(topics::kTaskStatus), TopicRole::Subscriber);
    human_cleared_pub = master->open_topic(kHumanNode, std::string(topics::kObstacleCleared), TopicRole::Publisher);
    human_status_pub = master->open_topic(kHumanNode, std::string(topics::kTaskStatus), TopicRole::Publisher);

    for (const AgentSpec& a : sc.agents) {
      AgentProfile p = profile_of(a);
      check_profile(p);
      profiles[a.id] = p;
    }
    for (const auto& [id, p] : profiles) {
      master->register_node(id);
      map_pubs.emplace(id, master->open_topic(id, std::string(topics::kMapShare), TopicRole::Publisher));
      local.emplace(id, OccupancyGrid(world.geometry()));
      if (p.role == Role::Explorer) {
        ExplorerCtx e;
        e.id = id;
        e.help_pub = master->open_topic(id, std::string(topics::kHelpRequests), TopicRole::Publisher);
        e.cleared_sub = master->open_topic(id, std::string(topics::kObstacleCleared), TopicRole::Subscriber);
        e.failed_sub = master->open_topic(id, std::string(topics::kAssistFailed), TopicRole::Subscriber);
        explorers.push_back(std::move(e));
      } else {
        AssistantCtx a;
        a.id = id;
        a.assign_sub = master->open_topic(id, std::string(topics::kAssignments), TopicRole::Subscriber);
        a.cleared_pub = master->open_topic(id, std::string(topics::kObstacleCleared), TopicRole::Publisher);
        a.failed_pub = master->open_topic(id, std::string(topics::kAssistFailed), TopicRole::Publisher);
        a.status_pub = master->open_topic(id, std::string(topics::kTaskStatus), TopicRole::Publisher);
        assistants.push_back(std::move(a));
      }
    }

    // Tick 0: initial scans only.
    for (const AgentBody& a : world.agents()) {
      apply_scan(local.at(a.id), world.raycast_scan(a.pose, a.sensor));
    }
    try {
      share_and_merge();
    } catch (const MasterDown& m) {
      abort(AbortReason::MasterLost, m.what);
    }
    phi = compute_phi(*merged, world.ground_truth()).phi;
    if (!explorers.empty()) {
      ExplorerCtx& e = explorers.front();
      verdict = kind_of(evaluate_for(e));
    }
    finish_tick();
  }

  // ------------------------------------------------------------------ events

  void emit(std::string type, std::vector<std::pair<std::string, FieldValue>> fields = {}) {
    tick_events.push_back(MissionEvent{tick, std::move(type), std::move(fields)});
  }

  void abort(AbortReason r, std::string why) {
    if (outcome != Outcome::Running) return;
    outcome = Outcome::Aborted;
    reason = r;
    diagnostic = std::move(why);
    emit("mission_aborted", {{"reason", std::string(to_string(r))}, {"diagnostic", diagnostic}});
  }

  DeliveryReceipt publish(const TopicHandle& h, Payload p) {
    try {
      auto receipt = h.publish(std::move(p));
      counters.messages_delivered += receipt.delivered;
      return receipt;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::MasterUnavailable) {
        throw MasterDown{"publish by '" + h.node() + "' on " + h.topic() + " failed: master unavailable"};
      }
      throw;
    }
  }

  // --------------------------------------------------------------- mapping

  void share_and_merge() {
    for (const auto& [id, grid] : local) {
      const GridGeometry& g = grid.geometry();
      MapShareChunk chunk;
      chunk.agent = id;
      chunk.tick = tick;
      chunk.width = g.width;
      chunk.row_begin = 0;
      chunk.row_count = g.height;
      chunk.logodds.assign(grid.values().begin(), grid.values().end());
      publish(map_pubs.at(id), std::move(chunk));
    }
    for (Envelope& env : map_sub->drain()) {
      const auto& chunk = std::get<MapShareChunk>(env.payload);
      auto it = shared.find(chunk.agent);
      if (it == shared.end()) it = shared.emplace(chunk.agent, OccupancyGrid(world.geometry())).first;
      const GridGeometry& g = it->second.geometry();
      for (int r = 0; r < chunk.row_count; ++r) {
        for (int c = 0; c < chunk.width; ++c) {
          it->second.set(Cell{c, chunk.row_begin + r},
                         chunk.logodds[static_cast<std::size_t>(r) * chunk.width + static_cast<std::size_t>(c)]);
        }
      }
      (void)g;
    }
    std::vector<OccupancyGrid> grids;
    for (const auto& [id, grid] : shared) grids.push_back(grid);
    if (grids.empty()) grids.emplace_back(world.geometry());
    merged = std::make_shared<const OccupancyGrid>(merge_grids(grids));
  }

  // Cells a scan crosses with a miss.
  static bool scan_misses(const GridGeometry& g, const Scan& scan, Cell target) {
    const Point2 o = scan.pose.position;
    const Point2 c = g.center(target);
    const double reach = distance(o, c) + g.resolution;
    for (const Ray& ray : scan.rays) {
      if (ray.range + g.resolution < distance(o, c) - g.resolution) continue;
      bool seen = false;
      const double range = ray.range;
      traverse_ray(g, o, scan.pose.heading + ray.bearing, std::min(range, reach + g.resolution),
                   [&](Cell cell, double, double t_exit) {
                     if (cell == target) {
                       seen = !(ray.hit && t_exit >= range);
                       return false;
                     }
                     return true;
                   });
      if (seen) return true;
    }
    return false;
  }

  void track_stale_observations(const std::vector<std::pair<std::string, Scan>>& scans) {
    for (StaleTracker& t : stale) {
      if (t.done) continue;
      for (std::size_t i = 0; i < t.cells.size(); ++i) {
        if (t.cleared[i]) continue;
        for (const auto& [id, scan] : scans) {
          if (scan_misses(world.geometry(), scan, t.cells[i])) {
            ++t.observations[i];
            break;
          }
        }
      }
    }
  }

  void update_stale_trackers() {
    for (StaleTracker& t : stale) {
      if (t.done) continue;
      bool all = true;
      for (std::size_t i = 0; i < t.cells.size(); ++i) {
        if (!t.cleared[i] && merged->state(t.cells[i]) != CellState::Occupied) {
          t.cleared[i] = true;
          t.worst = std::max(t.worst, t.observations[i]);
        }
        all = all && t.cleared[i];
      }
      if (all) {
        t.done = true;
        emit("stale_cleared", {{"obstacle", t.obstacle_id},
                               {"cells", static_cast<std::int64_t>(t.cells.size())},
                               {"max_reobservations", static_cast<std::int64_t>(t.worst)},
                               {"ticks", static_cast<std::int64_t>(tick - t.removed_at)}});
      }
    }
  }

  // -------------------------------------------------------------- planning

  Costmap costmap_for(const std::string& agent) const {
    const Costmap base = build_costmap(*merged, sc.exploration.inflation_radius);
    const std::vector<Cell> others = world.agent_cells(agent);
    return base.with_lethal(others);
  }

  struct PlanResult {
    std::vector<Cell> cells;
    Cell end;
    double offset = 0.0;  // distance from the end cell to the requested point
  };

  // Path to `target`, or to the reachable cell closest to it when the target
  // cell itself cannot be entered.
  std::optional<PlanResult> plan_for(const std::string& agent, Point2 target) const {
    const Costmap cm = costmap_for(agent);
    const GridGeometry& g = cm.geometry;
    const Cell start = world.agent(agent).cell;
    const auto goal = g.locate(target);
    if (goal && !cm.lethal(*goal)) {
      if (auto p = plan_path(cm, start, *goal, planner)) return PlanResult{p->cells, *goal, distance(g.center(*goal), target)};
    }
    const CostField field = cost_field(cm, start, planner);
    std::optional<Cell> best;
    double best_d = std::numeric_limits<double>::infinity();
    double best_cost = best_d;
    for (std::size_t i = 0; i < field.cost.size(); ++i) {
      if (field.cost[i] == std::numeric_limits<double>::infinity()) continue;
      const Cell c = g.cell_at(i);
      const double d = distance(g.center(c), target);
      if (d < best_d || (d == best_d && field.cost[i] < best_cost)) {
        best = c;
        best_d = d;
        best_cost = field.cost[i];
      }
    }
    if (!best) return std::nullopt;
    if (*best == start) return PlanResult{{start}, start, best_d};
    auto p = plan_path(cm, start, *best, planner);
    if (!p) return std::nullopt;
    return PlanResult{p->cells, *best, best_d};
  }

  MissionVerdict evaluate_for(ExplorerCtx& e) {
    const AgentBody& body = world.agent(e.id);
    const Costmap cm = costmap_for(e.id);
    std::vector<Frontier> frontiers = detect_frontiers(*merged, sc.exploration.min_frontier_size);
    std::erase_if(frontiers, [&](const Frontier& f) {
      for (const Cell& b : e.blacklist) {
        if (std::abs(b.col - f.centroid_cell.col) <= 1 && std::abs(b.row - f.centroid_cell.row) <= 1) return true;
      }
      return false;
    });
    const auto goal = select_goal(frontiers, body.pose.position, cm, planner);
    return evaluate(*merged, world.ground_truth(), sc.threshold, goal, sc.exploration.min_region_size, body.cell);
  }

  bool goal_open(const ExplorerCtx& e) const {
    if (!e.goal_cell) return false;
    const GridGeometry& g = merged->geometry();
    if (merged->state(*e.goal_cell) != CellState::Free) return false;
    for (int dr = -2; dr <= 2; ++dr) {
      for (int dc = -2; dc <= 2; ++dc) {
        const Cell c{e.goal_cell->col + dc, e.goal_cell->row + dr};
        if (g.contains(c) && merged->state(c) == CellState::Unknown) return true;
      }
    }
    return false;
  }

  // -------------------------------------------------------------- explorer

  static bool moving(const ExplorerState& s) {
    return s.mode == ExplorerMode::NavigatingToGoal || s.mode == ExplorerMode::ClearingStale;
  }

  void feed_explorer(ExplorerCtx& e, const ExplorerInput& input) {
    const ExplorerMode before = e.state.mode;
    ExplorerParams params;
    params.stale_patience = sc.exploration.stale_patience;
    ExplorerStep st = explorer_tick(e.state, input, e.id, params);
    e.state = st.state;
    if (e.state.mode != before) {
      emit("explorer_state", {{"agent", e.id},
                              {"from", std::string(to_string(before))},
                              {"to", std::string(to_string(e.state.mode))},
                              {"input", std::string(explorer_input_name(input))}});
    }
    for (const ExplorerCommand& cmd : st.commands) run_explorer_command(e, cmd);
  }

  void run_explorer_command(ExplorerCtx& e, const ExplorerCommand& cmd) {
    if (const auto* p = std::get_if<PlanTo>(&cmd)) {
      const auto plan = plan_for(e.id, p->goal);
      if (!plan) {
        if (e.state.mode == ExplorerMode::NavigatingToGoal) {
          if (auto c = world.geometry().locate(p->goal)) e.blacklist.insert(*c);
        }
        emit("plan_failed", {{"agent", e.id}, {"x", p->goal.x}, {"y", p->goal.y}});
        feed_explorer(e, PathBlockedInput{});
        return;
      }
      e.goal_cell = world.geometry().locate(p->goal);
      if (plan->cells.size() <= 1) {
        if (e.state.mode == ExplorerMode::NavigatingToGoal && e.goal_cell) e.blacklist.insert(*e.goal_cell);
        feed_explorer(e, ArrivedInput{});
        return;
      }
      next_commands.push_back(AgentCommand{e.id, FollowPath{plan->cells}});
    } else if (std::holds_alternative<HoldPosition>(cmd)) {
      next_commands.push_back(AgentCommand{e.id, StopMotion{}});
    } else if (std::holds_alternative<StopScan>(cmd)) {
      e.payload_on = false;
    } else if (const auto* h = std::get_if<PublishHelp>(&cmd)) {
      const HelpRequest& r = h->request;
      ++counters.help_requests;
      emit("help_request", {{"request_id", r.request_id},
                            {"requester", r.requester},
                            {"kind", std::string(to_string(r.kind))},
                            {"x", r.coordinates.x},
                            {"y", r.coordinates.y},
                            {"region", static_cast<std::int64_t>(r.region_ref.value_or(-1))},
                            {"phi", phi}});
      publish(*e.help_pub, r);
    } else if (const auto* s = std::get_if<ReportStalled>(&cmd)) {
      abort(AbortReason::Stalled, s->reason);
    }
  }

  void step_explorer(ExplorerCtx& e, const std::vector<WorldEvent>& world_events) {
    for (const WorldEvent& ev : world_events) {
      if (ev.agent != e.id || !moving(e.state)) continue;
      if (ev.kind == WorldEvent::Kind::Arrived) {
        if (e.state.mode == ExplorerMode::NavigatingToGoal && e.goal_cell) e.blacklist.insert(*e.goal_cell);
        feed_explorer(e, ArrivedInput{});
      } else {
        feed_explorer(e, PathBlockedInput{});
      }
    }
    for (Envelope& env : e.cleared_sub->drain()) {
      const auto& m = std::get<ObstacleCleared>(env.payload);
      const bool mine = e.state.mode == ExplorerMode::WaitingAssist && m.request_id == e.state.request_id;
      if (mine || e.state.mode == ExplorerMode::Finished) {
        if (mine) e.blacklist.clear();
        feed_explorer(e, ObstacleClearedInput{m});
      }
    }
    for (Envelope& env : e.failed_sub->drain()) {
      const auto& m = std::get<AssistFailed>(env.payload);
      const bool mine = e.state.mode == ExplorerMode::WaitingAssist && m.request_id == e.state.request_id;
      if (mine || e.state.mode == ExplorerMode::Finished) feed_explorer(e, AssistFailedInput{m});
    }
    if (outcome != Outcome::Running) return;
    const MissionVerdict v = evaluate_for(e);
    if (&e == &explorers.front()) {
      verdict = kind_of(v);
      if (verdict == VerdictKind::Blocked && !first_blocked_phi) {
        first_blocked_phi = phi;
        first_blocked_tick = tick;
        emit("first_blocked", {{"phi", phi}});
      }
    }
    feed_explorer(e, VerdictInput{v, goal_open(e)});
  }

  // ------------------------------------------------------------- assistant

  std::optional<Point2> scripted_answer(Point2 near) {
    if (scripted_grasp_index < sc.human.grasps.size()) return sc.human.grasps[scripted_grasp_index++];
    std::optional<Point2> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (const Obstacle& o : world.obstacles()) {
      if (!o.removable || !o.handle) continue;
      const double d = distance(*o.handle, near);
      if (d < best_d) {
        best_d = d;
        best = o.handle;
      }
    }
    return best ? best : std::optional<Point2>(near);
  }

  void feed_assistant(AssistantCtx& a, const AssistantInput& input) {
    const AssistantMode before = a.state.mode;
    AssistantParams params;
    params.max_grasp_retries = sc.exploration.max_grasp_retries;
    AssistantStep st = assistant_tick(a.state, input, a.id, params);
    a.state = st.state;
    if (a.state.mode != before) {
      emit("assistant_state", {{"agent", a.id},
                               {"from", std::string(to_string(before))},
                               {"to", std::string(to_string(a.state.mode))},
                               {"input", std::string(assistant_input_name(input))}});
    }
    for (const AssistantCommand& cmd : st.commands) run_assistant_command(a, cmd);
  }

  void run_assistant_command(AssistantCtx& a, const AssistantCommand& cmd) {
    std::visit(
        [&](const auto& c) {
          using T = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<T, PlanTo>) {
            const auto plan = plan_for(a.id, c.goal);
            if (!plan) {
              feed_assistant(a, UnreachableInput{"no path towards the access point"});
              return;
            }
            if (plan->offset > sc.exploration.manipulator_reach) {
              feed_assistant(a, UnreachableInput{"access point beyond reach from any reachable cell"});
              return;
            }
            if (plan->cells.size() <= 1) {
              feed_assistant(a, ArrivedInput{});
              return;
            }
            next_commands.push_back(AgentCommand{a.id, FollowPath{plan->cells}});
          } else if constexpr (std::is_same_v<T, HoldPosition>) {
            next_commands.push_back(AgentCommand{a.id, StopMotion{}});
          } else if constexpr (std::is_same_v<T, QueryHuman>) {
            ++counters.grasp_queries;
            human.query(c.request_id, tick, scripted_answer(c.near));
            emit("grasp_query", {{"request_id", c.request_id}, {"agent", a.id}});
          } else if constexpr (std::is_same_v<T, RemoveAt>) {
            a.action = PendingAction{c};
          } else if constexpr (std::is_same_v<T, CaptureAt>) {
            a.action = PendingAction{c};
          } else if constexpr (std::is_same_v<T, PublishCleared>) {
            publish(*a.cleared_pub, c.message);
          } else if constexpr (std::is_same_v<T, PublishFailed>) {
            emit("assist_failed", {{"request_id", c.message.request_id}, {"agent", a.id}, {"reason", c.message.reason}});
            publish(*a.failed_pub, c.message);
          } else if constexpr (std::is_same_v<T, PublishComplete>) {
            publish(*a.status_pub, c.message);
          }
        },
        cmd);
  }

  // Removal attempted at the tick boundary after the grasp arrived.
  void run_pending_actions() {
    for (AssistantCtx& a : assistants) {
      if (!a.action) continue;
      const PendingAction act = *a.action;
      a.action.reset();
      if (const auto* r = std::get_if<RemoveAt>(&act.action)) {
        attempt_removal(r->grasp, a.state.request_id, a.id, [&](const std::string& id) {
          feed_assistant(a, RemovalSucceededInput{id});
        }, [&](ErrorCode code) { feed_assistant(a, RemovalFailedInput{code}); });
      } else {
        const auto& cap = std::get<CaptureAt>(act.action);
        emit("high_res_capture", {{"agent", a.id}, {"x", cap.location.x}, {"y", cap.location.y}});
        feed_assistant(a, CaptureDoneInput{});
      }
    }
  }

  template <class OnOk, class OnFail>
  void attempt_removal(Point2 grasp, const std::string& request_id, const std::string& by, OnOk ok, OnFail fail) {
    try {
      const std::vector<Obstacle> before = world.obstacles();
      const std::string id = world.remove_obstacle(grasp, sc.grasp_tolerance);
      std::vector<Cell> footprint;
      for (const Obstacle& o : before) {
        if (o.id != id) continue;
        for (const Cell& c : o.footprint) {
          if (world.ground_truth().is_free(c)) footprint.push_back(c);
        }
      }
      ++counters.obstacles_removed;
      StaleTracker t;
      t.obstacle_id = id;
      t.removed_at = tick;
      t.cells = footprint;
      t.observations.assign(t.cells.size(), 0);
      t.cleared.assign(t.cells.size(), false);
      stale.push_back(std::move(t));
      emit("obstacle_removed", {{"obstacle", id}, {"request_id", request_id}, {"by", by}, {"x", grasp.x}, {"y", grasp.y}});
      ok(id);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::GraspMismatch && e.code() != ErrorCode::NotRemovable) throw;
      ++counters.grasp_failures;
      emit("grasp_failed", {{"request_id", request_id},
                            {"by", by},
                            {"code", std::string(to_string(e.code()))},
                            {"x", grasp.x},
                            {"y", grasp.y}});
      fail(e.code());
    }
  }

  void step_assistant(AssistantCtx& a, const std::vector<WorldEvent>& world_events) {
    for (const WorldEvent& ev : world_events) {
      if (ev.agent != a.id || a.state.mode != AssistantMode::NavigatingToAccess) continue;
      feed_assistant(a, ev.kind == WorldEvent::Kind::Arrived ? AssistantInput{ArrivedInput{}}
                                                             : AssistantInput{PathBlockedInput{}});
    }
    for (Envelope& env : a.assign_sub->drain()) {
      const auto& m = std::get<Assignment>(env.payload);
      if (m.assignee != a.id) continue;
      feed_assistant(a, AssignmentInput{m});
    }
    if (a.state.mode == AssistantMode::AwaitingGrasp && human.is_open(a.state.request_id)) {
      const HumanResponse r = human_respond(human, a.state.request_id, tick);
      if (const auto* p = std::get_if<Point2>(&r)) {
        emit("grasp_received", {{"request_id", a.state.request_id}, {"x", p->x}, {"y", p->y}});
        feed_assistant(a, GraspInput{*p});
      }
    }
  }

  // ----------------------------------------------------------- coordinator

  PendingRequest* find_pending(const std::string& id) {
    for (PendingRequest& p : pending) {
      if (p.request.request_id == id) return &p;
    }
    return nullptr;
  }

  HelpLogEntry* find_log(const std::string& id) {
    for (HelpLogEntry& h : help_log) {
      if (h.request.request_id == id) return &h;
    }
    return nullptr;
  }

  void resolve(const std::string& request_id, const std::string& resolution) {
    if (PendingRequest* p = find_pending(request_id)) {
      reserved.erase(p->assignee);
      std::erase_if(pending, [&](const PendingRequest& x) { return x.request.request_id == request_id; });
    }
    std::erase_if(escalations, [&](const Escalation& x) { return x.request_id == request_id; });
    if (HelpLogEntry* h = find_log(request_id)) {
      h->resolution = resolution;
      h->resolved_at = tick;
    }
  }

  void step_coordinator() {
    for (Envelope& env : help_sub->drain()) {
      const auto& r = std::get<HelpRequest>(env.payload);
      pending.push_back(PendingRequest{r, tick, {}, "queued"});
      help_log.push_back(HelpLogEntry{r, tick, {}, "open", 0});
    }
    for (Envelope& env : coord_cleared_sub->drain()) {
      const auto& m = std::get<ObstacleCleared>(env.payload);
      emit("obstacle_cleared", {{"request_id", m.request_id}, {"agent", m.agent}, {"obstacle", m.obstacle_id}});
      resolve(m.request_id, "cleared");
    }
    for (Envelope& env : status_sub->drain()) {
      const auto& m = std::get<TaskComplete>(env.payload);
      emit("task_complete", {{"request_id", m.request_id}, {"agent", m.agent}, {"kind", std::string(to_string(m.kind))}});
      resolve(m.request_id, "completed");
    }
    for (Envelope& env : coord_failed_sub->drain()) {
      const auto& m = std::get<AssistFailed>(env.payload);
      resolve(m.request_id, "failed");
      abort(AbortReason::AssistFailed, "request " + m.request_id + " failed: " + m.reason);
    }
    if (outcome != Outcome::Running) return;

    for (PendingRequest& p : pending) {
      if (p.status != "queued") continue;
      std::vector<RosterEntry> roster;
      for (const auto& [id, prof] : profiles) {
        roster.push_back(RosterEntry{prof, world.agent(id).pose.position, reserved.count(id) != 0});
      }
      const Allocation alloc = allocate_request(p.request, roster);
      if (const auto* to = std::get_if<AssignTo>(&alloc)) {
        p.assignee = to->agent;
        p.status = "assigned";
        reserved.insert(to->agent);
        ++counters.assignments;
        if (HelpLogEntry* h = find_log(p.request.request_id)) h->assignee = to->agent;
        emit("assignment", {{"request_id", p.request.request_id}, {"assignee", to->agent}});
        publish(*assign_pub, Assignment{p.request.request_id, to->agent, p.request.coordinates, p.request.kind});
      } else if (std::holds_alternative<EscalateToHuman>(alloc)) {
        ++counters.escalations;
        if (human.mode() == HumanMode::Disabled) {
          emit("escalation", {{"request_id", p.request.request_id}, {"served", false}});
          abort(AbortReason::EscalationUnserved,
                "no agent can serve " + p.request.request_id + " and the human channel is disabled");
          return;
        }
        p.assignee = kHumanNode;
        p.status = "escalated";
        if (HelpLogEntry* h = find_log(p.request.request_id)) h->assignee = kHumanNode;
        emit("escalation", {{"request_id", p.request.request_id}, {"served", true}});
        escalations.push_back(Escalation{p.request.request_id, 0});
        ++counters.grasp_queries;
        human.query(p.request.request_id, tick, scripted_answer(p.request.coordinates));
      }
    }
  }

  // Requests nobody could take, handled by the human agent directly.
  void step_escalations() {
    for (std::size_t i = 0; i < escalations.size(); ++i) {
      const std::string id = escalations[i].request_id;
      if (!human.is_open(id)) continue;
      const HumanResponse r = human_respond(human, id, tick);
      const auto* grasp = std::get_if<Point2>(&r);
      if (!grasp) continue;
      PendingRequest* p = find_pending(id);
      if (!p) continue;
      const HelpRequest req = p->request;
      emit("grasp_received", {{"request_id", id}, {"x", grasp->x}, {"y", grasp->y}});
      if (req.kind != HelpKind::ManipulationNeeded) {
        publish(*human_status_pub, TaskComplete{id, kHumanNode, req.kind, *grasp});
        continue;
      }
      attempt_removal(
          *grasp, id, kHumanNode,
          [&](const std::string& obstacle) {
            publish(*human_cleared_pub, ObstacleCleared{id, kHumanNode, obstacle, req.coordinates});
          },
          [&](ErrorCode) {
            Escalation& esc = escalations[i];
            if (++esc.failures > sc.exploration.max_grasp_retries) {
              resolve(id, "failed");
              abort(AbortReason::AssistFailed, "request " + id + " failed: grasp retries exhausted");
              return;
            }
            ++counters.grasp_queries;
            human.query(id, tick, scripted_answer(req.coordinates));
          });
      if (outcome != Outcome::Running) return;
    }
  }

  // ------------------------------------------------------------- commands

  void apply_command(const OperatorCommand& c) {
    ++counters.operator_commands;
    std::vector<std::pair<std::string, FieldValue>> f{{"kind", std::string(to_string(c.kind))}};
    if (c.point) {
      f.emplace_back("x", c.point->x);
      f.emplace_back("y", c.point->y);
    }
    if (!c.agent.empty()) f.emplace_back("agent", c.agent);
    if (c.kind == OperatorCommand::Kind::Teleop) {
      f.emplace_back("dcol", static_cast<std::int64_t>(c.dcol));
      f.emplace_back("drow", static_cast<std::int64_t>(c.drow));
    }
    if (!c.request_id.empty()) f.emplace_back("request_id", c.request_id);
    emit("operator_command", f);

    auto rejected = [&](const std::string& why) {
      emit("command_rejected", {{"kind", std::string(to_string(c.kind))}, {"reason", why}});
    };
    switch (c.kind) {
      case OperatorCommand::Kind::Start: break;
      case OperatorCommand::Kind::Stop: abort(AbortReason::OperatorStop, "operator stop"); break;
      case OperatorCommand::Kind::OverrideGoal: {
        ExplorerCtx* e = c.agent.empty() ? (explorers.empty() ? nullptr : &explorers.front()) : nullptr;
        for (ExplorerCtx& x : explorers) {
          if (x.id == c.agent) e = &x;
        }
        if (!e) return rejected("no such explorer");
        try {
          feed_explorer(*e, OverrideInput{*c.point});
        } catch (const Error& err) {
          if (err.code() != ErrorCode::IllegalTransition) throw;
          rejected(err.what());
        }
        break;
      }
      case OperatorCommand::Kind::Teleop: {
        if (!profiles.count(c.agent)) return rejected("no such agent");
        next_commands.push_back(AgentCommand{c.agent, TeleopStep{c.dcol, c.drow}});
        break;
      }
      case OperatorCommand::Kind::GraspPoint: {
        try {
          human.deposit(c.request_id, *c.point);
        } catch (const Error& err) {
          rejected(err.what());
        }
        break;
      }
    }
  }

  // After a teleop, moving agents replan from wherever they ended up.
  void replan_after_teleop(const std::vector<AgentCommand>& issued) {
    for (const AgentCommand& cmd : issued) {
      if (!std::holds_alternative<TeleopStep>(cmd.action)) continue;
      for (ExplorerCtx& e : explorers) {
        if (e.id == cmd.agent && moving(e.state)) feed_explorer(e, PathBlockedInput{});
      }
      for (AssistantCtx& a : assistants) {
        if (a.id == cmd.agent && a.state.mode == AssistantMode::NavigatingToAccess) feed_assistant(a, PathBlockedInput{});
      }
    }
  }

  void run_scheduled_events() {
    for (const ScheduledEvent& ev : sc.events) {
      if (ev.tick != tick) continue;
      if (ev.kind == ScheduledEvent::Kind::KillMaster) {
        if (master->kill_master()) emit("master_killed");
        continue;
      }
      ExplorerCtx* e = explorers.empty() ? nullptr : &explorers.front();
      for (ExplorerCtx& x : explorers) {
        if (x.id == ev.requester) e = &x;
      }
      if (!e) continue;
      ++e->state.requests_sent;
      HelpRequest r;
      r.request_id = e->id + "-req-" + std::to_string(e->state.requests_sent);
      r.requester = e->id;
      r.coordinates = ev.at;
      r.kind = ev.kind == ScheduledEvent::Kind::HighResScan ? HelpKind::HighResScan : HelpKind::LocalizationSupport;
      ++counters.help_requests;
      emit("help_request", {{"request_id", r.request_id},
                            {"requester", r.requester},
                            {"kind", std::string(to_string(r.kind))},
                            {"x", r.coordinates.x},
                            {"y", r.coordinates.y},
                            {"region", static_cast<std::int64_t>(-1)},
                            {"phi", phi}});
      publish(*e->help_pub, r);
    }
  }

  // ----------------------------------------------------------------- tick

  bool all_quiet() const {
    if (!pending.empty() || !escalations.empty()) return false;
    for (const AssistantCtx& a : assistants) {
      if (a.state.mode != AssistantMode::Idle || a.action) return false;
    }
    for (const ExplorerCtx& e : explorers) {
      if (e.state.mode != ExplorerMode::Finished) return false;
    }
    return true;
  }

  std::vector<OperatorCommand> take_commands() {
    std::vector<OperatorCommand> out;
    for (const TimedCommand& tc : opts.scripted_commands) {
      if (tc.tick == tick) out.push_back(tc.command);
    }
    std::lock_guard lock(mailbox_mutex);
    out.insert(out.end(), mailbox.begin(), mailbox.end());
    mailbox.clear();
    return out;
  }

  bool step() {
    if (outcome != Outcome::Running) return false;
    if (!started) {
      bool start = false;
      for (const TimedCommand& tc : opts.scripted_commands) {
        start = start || (tc.tick == tick + 1 && tc.command.kind == OperatorCommand::Kind::Start);
      }
      {
        std::lock_guard lock(mailbox_mutex);
        for (const OperatorCommand& c : mailbox) start = start || c.kind == OperatorCommand::Kind::Start;
      }
      if (!start) return false;
      started = true;
      started_flag = true;
    }

    ++tick;
    tick_events.clear();
    try {
      for (const OperatorCommand& c : take_commands()) apply_command(c);
      if (outcome == Outcome::Running) run_scheduled_events();
      if (outcome == Outcome::Running) {
        run_pending_actions();
        step_escalations();
      }
      if (outcome == Outcome::Running) {
        std::vector<AgentCommand> issued = std::move(next_commands);
        next_commands.clear();
        StepResult res = world.step(issued);
        track_stale_observations(res.scans);
        for (const auto& [id, scan] : res.scans) apply_scan(local.at(id), scan);
        for (const WorldEvent& ev : res.events) {
          if (ev.kind == WorldEvent::Kind::PathBlocked) {
            emit("path_blocked", {{"agent", ev.agent},
                                  {"col", static_cast<std::int64_t>(ev.blocked_cell.col)},
                                  {"row", static_cast<std::int64_t>(ev.blocked_cell.row)}});
          }
        }
        share_and_merge();
        phi = compute_phi(*merged, world.ground_truth()).phi;
        update_stale_trackers();
        for (const ExplorerCtx& e : explorers) {
          if (e.payload_on) update_coverage(coverage, world.agent(e.id).pose, profiles.at(e.id).payload_sensor, world);
        }

        replan_after_teleop(issued);
        for (ExplorerCtx& e : explorers) {
          if (outcome != Outcome::Running) break;
          step_explorer(e, res.events);
        }
        for (AssistantCtx& a : assistants) {
          if (outcome != Outcome::Running) break;
          step_assistant(a, res.events);
        }
        if (outcome == Outcome::Running) step_coordinator();
      }
      if (outcome == Outcome::Running && verdict == VerdictKind::Done && phi >= sc.threshold && all_quiet()) {
        outcome = Outcome::Done;
        emit("mission_done", {{"phi", phi}});
      }
      if (outcome == Outcome::Running && tick >= sc.tick_budget) {
        abort(AbortReason::TickBudget, "tick budget of " + std::to_string(sc.tick_budget) + " exhausted");
      }
    } catch (const MasterDown& m) {
      emit("master_lost", {{"diagnostic", m.what}});
      abort(AbortReason::MasterLost, m.what);
    } catch (const Error& e) {
      abort(AbortReason::InternalError, e.what());
    }
    finish_tick();
    return true;
  }

  MissionSnapshot make_snapshot() const {
    MissionSnapshot s;
    s.tick = tick;
    s.phi = phi;
    s.threshold = sc.threshold;
    s.verdict = verdict;
    for (const AgentBody& b : world.agents()) {
      AgentSnapshot a;
      a.id = b.id;
      a.role = profiles.at(b.id).role;
      a.pose = b.pose;
      a.cell = b.cell;
      a.distance = b.distance;
      for (const ExplorerCtx& e : explorers) {
        if (e.id == b.id) a.state = std::string(to_string(e.state.mode));
      }
      for (const AssistantCtx& x : assistants) {
        if (x.id == b.id) a.state = std::string(to_string(x.state.mode));
      }
      s.agents.push_back(std::move(a));
    }
    s.pending = pending;
    s.merged = merged;
    s.counters = counters;
    s.coverage = coverage.percent();
    s.started = started;
    s.master_alive = master->alive();
    s.outcome = outcome;
    s.abort_reason = reason;
    s.diagnostic = diagnostic;
    return s;
  }

  void finish_tick() {
    phi_history.resize(tick + 1, phi);
    phi_history[tick] = phi;
    auto snap = std::make_shared<const MissionSnapshot>(make_snapshot());
    metrics.push_back(metrics_line(*snap, tick_events));
    {
      std::lock_guard lock(snapshot_mutex);
      latest = snap;
    }
    if (outcome != Outcome::Running) finished_flag = true;
    for (const MissionEvent& e : tick_events) {
      all_events.push_back(e);
      if (listener) listener(e);
    }
  }

  MissionResult make_result() const {
    MissionResult r;
    r.outcome = outcome;
    r.abort_reason = reason;
    r.diagnostic = diagnostic;
    r.final_phi = phi;
    r.threshold = sc.threshold;
    r.ticks = tick;
    for (const AgentBody& b : world.agents()) r.distances.emplace_back(b.id, b.distance);
    r.help_log = help_log;
    r.coverage = coverage.percent();
    for (const StaleTracker& t : stale) {
      StaleReport s;
      s.obstacle_id = t.obstacle_id;
      s.removed_at = t.removed_at;
      s.cells = t.cells.size();
      s.cleared = t.done;
      s.max_reobservations = t.worst;
      if (!t.done) {
        for (std::size_t i = 0; i < t.cells.size(); ++i) {
          if (!t.cleared[i]) s.max_reobservations = std::max(s.max_reobservations, t.observations[i]);
        }
      }
      for (const MissionEvent& e : all_events) {
        if (e.type != "stale_cleared") continue;
        for (const auto& [k, v] : e.fields) {
          if (k == "obstacle" && std::get<std::string>(v) == t.obstacle_id) s.cleared_at = e.tick;
        }
      }
      r.stale.push_back(s);
    }
    r.phi_history = phi_history;
    r.first_blocked_phi = first_blocked_phi;
    r.first_blocked_tick = first_blocked_tick;
    r.seed = seed;
    return r;
  }
};

Mission::Mission(Scenario scenario, MissionOptions options)
    : impl_(std::make_unique<Impl>(std::move(scenario), std::move(options))) {}

Mission::~Mission() = default;

void Mission::submit(OperatorCommand command) {
  using K = OperatorCommand::Kind;
  if (command.point && (!std::isfinite(command.point->x) || !std::isfinite(command.point->y))) {
    throw Error(ErrorCode::InvalidCommand, "coordinates must be finite");
  }
  if ((command.kind == K::OverrideGoal || command.kind == K::GraspPoint) && !command.point) {
    throw Error(ErrorCode::InvalidCommand, std::string(to_string(command.kind)) + " needs a point");
  }
  if (command.kind == K::Teleop && (command.agent.empty() || std::abs(command.dcol) > 1 || std::abs(command.drow) > 1 ||
                                    (command.dcol == 0 && command.drow == 0))) {
    throw Error(ErrorCode::InvalidCommand, "Teleop needs an agent and a one-cell step");
  }
  if (command.kind == K::GraspPoint && command.request_id.empty()) {
    throw Error(ErrorCode::InvalidCommand, "GraspPoint needs a request_id");
  }
  if (impl_->finished_flag) throw Error(ErrorCode::IllegalTransition, "mission is over");
  if (command.kind == K::Start && impl_->started_flag) throw Error(ErrorCode::IllegalTransition, "already running");
  if (command.kind == K::GraspPoint && !impl_->human.is_open(command.request_id)) {
    throw Error(ErrorCode::UnknownRequest, "no open grasp query '" + command.request_id + "'");
  }
  std::lock_guard lock(impl_->mailbox_mutex);
  impl_->mailbox.push_back(std::move(command));
}

void Mission::submit_grasp(const std::string& request_id, Point2 grasp) {
  OperatorCommand c;
  c.kind = OperatorCommand::Kind::GraspPoint;
  c.request_id = request_id;
  c.point = grasp;
  submit(std::move(c));
}

bool Mission::step() { return impl_->step(); }

MissionResult Mission::run() {
  if (!impl_->started) {
    impl_->started = true;
    impl_->started_flag = true;
  }
  while (impl_->step()) {
  }
  return impl_->make_result();
}

bool Mission::finished() const { return impl_->finished_flag; }
bool Mission::started() const { return impl_->started_flag; }

std::shared_ptr<const MissionSnapshot> Mission::snapshot() const {
  std::lock_guard lock(impl_->snapshot_mutex);
  return impl_->latest;
}

MissionResult Mission::result() const { return impl_->make_result(); }

std::string Mission::metrics_log() const {
  std::string out;
  for (const std::string& line : impl_->metrics) {
    out += line;
    out += '\n';
  }
  return out;
}

const std::vector<MissionEvent>& Mission::events() const { return impl_->all_events; }
void Mission::set_listener(std::function<void(const MissionEvent&)> listener) { impl_->listener = std::move(listener); }
const Scenario& Mission::scenario() const { return impl_->sc; }
const World& Mission::world() const { return impl_->world; }
const GroundTruthMap& Mission::ground_truth() const { return impl_->world.ground_truth(); }
const OccupancyGrid& Mission::merged_grid() const { return *impl_->merged; }

const OccupancyGrid& Mission::local_grid(const std::string& agent) const {
  const auto it = impl_->local.find(agent);
  if (it == impl_->local.end()) throw Error(ErrorCode::UnknownAgent, "no agent '" + agent + "'");
  return it->second;
}

const ScanCoverage& Mission::coverage() const { return impl_->coverage; }
MasterRegistry& Mission::master() { return *impl_->master; }
HumanChannel& Mission::human() { return impl_->human; }

MissionResult run_mission(const Scenario& scenario, std::optional<std::uint64_t> seed) {
  MissionOptions o;
  o.seed = seed;
  Mission m(scenario, o);
  return m.run();
}

}  // namespace sitescout
