#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sitescout/geometry.hpp"

namespace sitescout {

class OccupancyGrid;

inline constexpr std::uint8_t kLethal = 254;

// Planning raster. Occupied and Unknown cells are lethal; free cells carry a
// linear inflation cost that decays to zero at `inflation_radius`.
struct Costmap {
  GridGeometry geometry;
  std::vector<std::uint8_t> cost;
  double inflation_radius = 0.0;

  std::uint8_t at(Cell c) const { return cost[geometry.index(c)]; }
  bool lethal(Cell c) const { return at(c) >= kLethal; }

  // Copy with the given cells forced lethal (other agents at plan time).
  Costmap with_lethal(std::span<const Cell> cells) const;
};

// Exact squared Euclidean distance (in cells, between cell centers) from each
// cell to the nearest seed cell. Cells with no seed anywhere get +inf.
std::vector<double> squared_distance_transform(const GridGeometry& g, std::span<const std::uint8_t> seeds);

// Distance from a cell center to the nearest lethal cell surface is taken as
// the center-to-center distance minus half a cell.
Costmap build_costmap(const OccupancyGrid& grid, double inflation_radius);

}  // namespace sitescout
