#include "sitescout/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <tuple>

namespace sitescout {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSqrt2 = 1.41421356237309504880;

double octile(Cell a, Cell b) {
  const double dx = std::abs(a.col - b.col);
  const double dy = std::abs(a.row - b.row);
  return (dx + dy) + (kSqrt2 - 2.0) * std::min(dx, dy);
}

}  // namespace

double step_cost(const Costmap& cm, Cell from, Cell to, const PlannerParams& params) {
  const bool diagonal = from.col != to.col && from.row != to.row;
  return (diagonal ? kSqrt2 : 1.0) + params.cost_scale * cm.at(to);
}

std::optional<Path> plan_path(const Costmap& cm, Cell start, Cell goal, const PlannerParams& params) {
  const GridGeometry& g = cm.geometry;
  if (!g.contains(start) || !g.contains(goal) || cm.lethal(goal)) return std::nullopt;

  const std::size_t n = g.cell_count();
  std::vector<double> best(n, kInf);
  std::vector<std::size_t> parent(n, n);
  std::vector<bool> closed(n, false);

  // (f, h, index); smallest first
  using Entry = std::tuple<double, double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  const std::size_t s = g.index(start);
  const std::size_t t = g.index(goal);
  best[s] = 0.0;
  open.emplace(octile(start, goal), octile(start, goal), s);

  while (!open.empty()) {
    const auto [f, h, i] = open.top();
    open.pop();
    if (closed[i]) continue;
    closed[i] = true;
    if (i == t) break;
    const Cell c = g.cell_at(i);
    for (const auto& off : kNeighborOffsets8) {
      const Cell nb{c.col + off[0], c.row + off[1]};
      if (!g.contains(nb) || cm.lethal(nb)) continue;
      const std::size_t j = g.index(nb);
      if (closed[j]) continue;
      const double cand = best[i] + step_cost(cm, c, nb, params);
      if (cand < best[j]) {
        best[j] = cand;
        parent[j] = i;
        const double hj = octile(nb, goal);
        open.emplace(cand + hj, hj, j);
      }
    }
  }
  if (best[t] == kInf) return std::nullopt;

  Path path;
  path.cost = best[t];
  for (std::size_t i = t; i != n; i = parent[i]) {
    path.cells.push_back(g.cell_at(i));
    if (i == s) break;
  }
  std::reverse(path.cells.begin(), path.cells.end());
  return path;
}

bool CostField::reachable(Cell c) const { return geometry.contains(c) && at(c) < kInf; }

CostField cost_field(const Costmap& cm, Cell start, const PlannerParams& params) {
  const GridGeometry& g = cm.geometry;
  CostField field{g, std::vector<double>(g.cell_count(), kInf)};
  if (!g.contains(start)) return field;

  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  field.cost[g.index(start)] = 0.0;
  open.emplace(0.0, g.index(start));
  while (!open.empty()) {
    const auto [d, i] = open.top();
    open.pop();
    if (d > field.cost[i]) continue;
    const Cell c = g.cell_at(i);
    for (const auto& off : kNeighborOffsets8) {
      const Cell nb{c.col + off[0], c.row + off[1]};
      if (!g.contains(nb) || cm.lethal(nb)) continue;
      const std::size_t j = g.index(nb);
      const double cand = d + step_cost(cm, c, nb, params);
      if (cand < field.cost[j]) {
        field.cost[j] = cand;
        open.emplace(cand, j);
      }
    }
  }
  return field;
}

}  // namespace sitescout
