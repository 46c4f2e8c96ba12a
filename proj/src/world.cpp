#include "sitescout/world.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

#include "sitescout/error.hpp"
#include "sitescout/raytrace.hpp"

namespace sitescout {

std::string_view to_string(WorldEvent::Kind k) {
  switch (k) {
    case WorldEvent::Kind::Arrived: return "arrived";
    case WorldEvent::Kind::PathBlocked: return "path_blocked";
  }
  return "arrived";
}

World::World(GroundTruthMap gt, std::vector<Obstacle> obstacles, std::uint64_t seed)
    : gt_(std::move(gt)), obstacles_(std::move(obstacles)), rng_(seed) {
  for (const Obstacle& o : obstacles_) {
    for (const Cell& c : o.footprint) {
      if (!geometry().contains(c)) {
        throw Error(ErrorCode::ObstacleOutOfBounds, "obstacle '" + o.id + "' leaves the map");
      }
    }
    if (o.removable && !o.handle) {
      throw Error(ErrorCode::InvalidScenario, "removable obstacle '" + o.id + "' has no handle");
    }
  }
  rebuild_true_map();
}

void World::rebuild_true_map() {
  const GridGeometry& g = geometry();
  true_map_.assign(g.cell_count(), 0);
  for (std::size_t i = 0; i < true_map_.size(); ++i) true_map_[i] = gt_.label_at(i) == GtLabel::Free ? 0 : 1;
  for (const Obstacle& o : obstacles_) {
    for (const Cell& c : o.footprint) true_map_[g.index(c)] = 1;
  }
}

void World::add_agent(const std::string& id, Pose2 start, int speed, SensorConfig sensor) {
  const auto cell = geometry().locate(start.position);
  if (!cell || occupied(*cell)) {
    throw Error(ErrorCode::AgentSpawnOnOccupied, "agent '" + id + "' starts on an occupied or outside cell");
  }
  if (blocked_by_agent(*cell, id)) {
    throw Error(ErrorCode::AgentSpawnOnOccupied, "agent '" + id + "' starts on another agent");
  }
  for (const AgentBody& a : agents_) {
    if (a.id == id) throw Error(ErrorCode::DuplicateId, "agent '" + id + "' declared twice");
  }
  AgentBody a;
  a.id = id;
  a.pose = start;
  a.cell = *cell;
  a.speed = std::max(1, speed);
  a.sensor = sensor;
  agents_.push_back(std::move(a));
  std::sort(agents_.begin(), agents_.end(), [](const AgentBody& x, const AgentBody& y) { return x.id < y.id; });
}

const AgentBody& World::agent(const std::string& id) const {
  for (const AgentBody& a : agents_) {
    if (a.id == id) return a;
  }
  throw Error(ErrorCode::UnknownAgent, "no agent '" + id + "'");
}

AgentBody& World::body(const std::string& id) { return const_cast<AgentBody&>(std::as_const(*this).agent(id)); }

std::vector<Cell> World::agent_cells(const std::string& except) const {
  std::vector<Cell> out;
  for (const AgentBody& a : agents_) {
    if (a.id != except) out.push_back(a.cell);
  }
  return out;
}

bool World::blocked_by_agent(Cell c, const std::string& self) const {
  return std::any_of(agents_.begin(), agents_.end(), [&](const AgentBody& a) { return a.id != self && a.cell == c; });
}

Scan World::raycast_scan(Pose2 pose, const SensorConfig& sensor) {
  const GridGeometry& g = geometry();
  const auto cell = g.locate(pose.position);
  if (!cell) throw Error(ErrorCode::PoseOutOfBounds, "scan pose outside the map");
  if (occupied(*cell)) throw Error(ErrorCode::PoseInOccupied, "scan pose inside an occupied cell");
  if (!(sensor.max_range > 0.0) || !(sensor.angular_resolution_deg > 0.0)) {
    throw Error(ErrorCode::InvalidScenario, "sensor needs positive range and angular resolution");
  }

  const int n = std::max(1, static_cast<int>(std::lround(360.0 / sensor.angular_resolution_deg)));
  Scan scan;
  scan.pose = pose;
  scan.max_range = sensor.max_range;
  scan.rays.reserve(n);
  std::normal_distribution<double> noise(0.0, sensor.noise_stddev > 0.0 ? sensor.noise_stddev : 1.0);
  for (int i = 0; i < n; ++i) {
    Ray ray;
    ray.bearing = 2.0 * std::numbers::pi * i / n;
    ray.range = sensor.max_range;
    traverse_ray(g, pose.position, pose.heading + ray.bearing, sensor.max_range,
                 [&](Cell c, double t_enter, double t_exit) {
                   if (!occupied(c)) return true;
                   ray.hit = true;
                   ray.range = std::min(0.5 * (t_enter + t_exit), sensor.max_range);
                   return false;
                 });
    if (ray.hit && sensor.noise_stddev > 0.0) {
      ray.range = std::clamp(ray.range + noise(rng_), 0.0, sensor.max_range);
    }
    scan.rays.push_back(ray);
  }
  return scan;
}

void World::move(AgentBody& a, Cell next) {
  const bool diagonal = next.col != a.cell.col && next.row != a.cell.row;
  a.distance += (diagonal ? std::numbers::sqrt2 : 1.0) * geometry().resolution;
  const Point2 from = geometry().center(a.cell);
  const Point2 to = geometry().center(next);
  a.pose = Pose2{to, std::atan2(to.y - from.y, to.x - from.x)};
  a.cell = next;
}

StepResult World::step(std::span<const AgentCommand> commands) {
  StepResult out;
  std::vector<std::pair<std::string, TeleopStep>> teleops;
  for (const AgentCommand& cmd : commands) {
    AgentBody& a = body(cmd.agent);
    if (const auto* f = std::get_if<FollowPath>(&cmd.action)) {
      a.path = f->cells;
      if (!a.path.empty() && a.path.front() == a.cell) a.path.erase(a.path.begin());
    } else if (std::holds_alternative<StopMotion>(cmd.action)) {
      a.path.clear();
    } else {
      a.path.clear();
      teleops.emplace_back(cmd.agent, std::get<TeleopStep>(cmd.action));
    }
  }

  for (const auto& [id, t] : teleops) {
    AgentBody& a = body(id);
    const Cell next{a.cell.col + std::clamp(t.dcol, -1, 1), a.cell.row + std::clamp(t.drow, -1, 1)};
    if (next == a.cell) continue;
    if (!geometry().contains(next) || occupied(next) || blocked_by_agent(next, id)) {
      out.events.push_back(WorldEvent{WorldEvent::Kind::PathBlocked, id, a.cell, next});
    } else {
      move(a, next);
    }
  }

  for (AgentBody& a : agents_) {
    if (a.path.empty()) continue;
    bool blocked = false;
    for (int s = 0; s < a.speed && !a.path.empty(); ++s) {
      const Cell next = a.path.front();
      const bool adjacent = std::abs(next.col - a.cell.col) <= 1 && std::abs(next.row - a.cell.row) <= 1;
      if (!geometry().contains(next) || !adjacent || occupied(next) || blocked_by_agent(next, a.id)) {
        out.events.push_back(WorldEvent{WorldEvent::Kind::PathBlocked, a.id, a.cell, next});
        a.path.clear();
        blocked = true;
        break;
      }
      move(a, next);
      a.path.erase(a.path.begin());
    }
    if (!blocked && a.path.empty()) {
      out.events.push_back(WorldEvent{WorldEvent::Kind::Arrived, a.id, a.cell, a.cell});
    }
  }

  for (const AgentBody& a : agents_) out.scans.emplace_back(a.id, raycast_scan(a.pose, a.sensor));
  ++tick_;
  return out;
}

std::string World::remove_obstacle(Point2 grasp, double tolerance) {
  if (!std::isfinite(grasp.x) || !std::isfinite(grasp.y)) {
    throw Error(ErrorCode::NonFiniteValue, "grasp point is not finite");
  }
  if (!(tolerance > 0.0)) throw Error(ErrorCode::InvalidCommand, "grasp tolerance must be positive");

  std::size_t best = obstacles_.size();
  double best_d = tolerance;
  for (std::size_t i = 0; i < obstacles_.size(); ++i) {
    const Obstacle& o = obstacles_[i];
    if (!o.removable || !o.handle) continue;
    const double d = distance(*o.handle, grasp);
    if (d < best_d || (d == best_d && (best == obstacles_.size() || o.id < obstacles_[best].id))) {
      best_d = d;
      best = i;
    }
  }
  if (best < obstacles_.size()) {
    std::string id = obstacles_[best].id;
    obstacles_.erase(obstacles_.begin() + static_cast<std::ptrdiff_t>(best));
    rebuild_true_map();
    return id;
  }

  const auto cell = geometry().locate(grasp);
  bool fixed = cell && gt_.label(*cell) == GtLabel::Occupied;
  for (const Obstacle& o : obstacles_) {
    if (o.removable) continue;
    if (o.handle && distance(*o.handle, grasp) <= tolerance) fixed = true;
    if (cell && std::find(o.footprint.begin(), o.footprint.end(), *cell) != o.footprint.end()) fixed = true;
  }
  if (fixed) throw Error(ErrorCode::NotRemovable, "grasp point lies on a fixed structure");
  throw Error(ErrorCode::GraspMismatch, "no removable handle within tolerance of the grasp point");
}

}  // namespace sitescout
