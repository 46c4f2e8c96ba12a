#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "sitescout/geometry.hpp"

namespace sitescout {

// Walks every cell crossed by the ray origin + t*(cos angle, sin angle) for
// t in [0, length], in order, calling visit(cell, t_enter, t_exit). The walk
// stops when visit returns false, when t reaches `length`, or when the ray
// leaves the grid.
//
// Corner crossings closer than 1e-9 cells are stepped diagonally, so every
// visited cell except possibly the first has a strictly positive span.
template <class Visitor>
void traverse_ray(const GridGeometry& g, Point2 origin, double angle, double length, Visitor&& visit) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  Cell cell = g.to_cell(origin);
  if (!g.contains(cell)) return;

  const double dx = std::cos(angle);
  const double dy = std::sin(angle);
  const int step_x = dx > 0 ? 1 : (dx < 0 ? -1 : 0);
  const int step_y = dy > 0 ? 1 : (dy < 0 ? -1 : 0);

  double t_max_x = kInf;
  double t_max_y = kInf;
  double t_delta_x = kInf;
  double t_delta_y = kInf;
  if (step_x != 0) {
    const double edge = step_x > 0 ? g.col_edge(cell.col + 1) : g.col_edge(cell.col);
    t_max_x = (edge - origin.x) / dx;
    t_delta_x = g.resolution / std::abs(dx);
  }
  if (step_y != 0) {
    const double edge = step_y > 0 ? g.row_edge(cell.row + 1) : g.row_edge(cell.row);
    t_max_y = (edge - origin.y) / dy;
    t_delta_y = g.resolution / std::abs(dy);
  }

  const double tie = 1e-9 * g.resolution;
  double t_enter = 0.0;
  while (true) {
    const double t_next = std::min(t_max_x, t_max_y);
    const double t_exit = std::min(t_next, length);
    if (!visit(cell, t_enter, t_exit)) return;
    if (t_next >= length) return;

    if (std::abs(t_max_x - t_max_y) <= tie) {
      cell.col += step_x;
      cell.row += step_y;
      t_max_x += t_delta_x;
      t_max_y += t_delta_y;
    } else if (t_max_x < t_max_y) {
      cell.col += step_x;
      t_max_x += t_delta_x;
    } else {
      cell.row += step_y;
      t_max_y += t_delta_y;
    }
    t_enter = t_next;
    if (!g.contains(cell)) return;
  }
}

}  // namespace sitescout
