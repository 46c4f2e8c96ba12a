#pragma once

#include <optional>
#include <vector>

#include "sitescout/costmap.hpp"
#include "sitescout/geometry.hpp"

namespace sitescout {

// Moving into a cell costs its step length (1 or sqrt 2) plus
// cost_scale * (cell cost). With cost_scale 0.01 a cell right next to an
// obstacle adds about two steps.
struct PlannerParams {
  double cost_scale = 0.01;
};

struct Path {
  std::vector<Cell> cells;  // start first, goal last
  double cost = 0.0;
};

double step_cost(const Costmap& cm, Cell from, Cell to, const PlannerParams& params = {});

// Least-cost 8-connected path (A* with the octile heuristic). Open-list ties
// are broken by (f, h, row-major index). Returns nullopt when the goal is
// lethal, out of bounds, or disconnected from the start.
std::optional<Path> plan_path(const Costmap& cm, Cell start, Cell goal, const PlannerParams& params = {});

// Least cost from `start` to every cell (Dijkstra under the same cost model);
// unreachable and lethal cells hold +inf.
struct CostField {
  GridGeometry geometry;
  std::vector<double> cost;

  double at(Cell c) const { return cost[geometry.index(c)]; }
  bool reachable(Cell c) const;
};

CostField cost_field(const Costmap& cm, Cell start, const PlannerParams& params = {});

}  // namespace sitescout
