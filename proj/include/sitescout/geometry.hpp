#pragma once

#include <cmath>
#include <cstddef>
#include <optional>

namespace sitescout {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct Pose2 {
  Point2 position;
  double heading = 0.0;  // radians, counter-clockwise from +x
};

// Integer grid coordinate. col grows with +x, row grows with +y.
struct Cell {
  int col = 0;
  int row = 0;

  friend bool operator==(const Cell&, const Cell&) = default;
  friend auto operator<=>(const Cell& a, const Cell& b) {
    // row-major order
    if (auto c = a.row <=> b.row; c != 0) return c;
    return a.col <=> b.col;
  }
};

// Shape and placement of a raster in the world frame. Cell (0,0) has its
// lower-left corner at `origin`.
struct GridGeometry {
  int width = 1;
  int height = 1;
  double resolution = 1.0;  // meters per cell
  Point2 origin;

  friend bool operator==(const GridGeometry&, const GridGeometry&) = default;

  std::size_t cell_count() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }

  bool contains(Cell c) const { return c.col >= 0 && c.row >= 0 && c.col < width && c.row < height; }

  std::size_t index(Cell c) const {
    return static_cast<std::size_t>(c.row) * static_cast<std::size_t>(width) + static_cast<std::size_t>(c.col);
  }

  Cell cell_at(std::size_t index) const {
    return Cell{static_cast<int>(index % static_cast<std::size_t>(width)),
                static_cast<int>(index / static_cast<std::size_t>(width))};
  }

  // Cell containing the world point; may be out of bounds.
  Cell to_cell(Point2 p) const {
    return Cell{static_cast<int>(std::floor((p.x - origin.x) / resolution)),
                static_cast<int>(std::floor((p.y - origin.y) / resolution))};
  }

  std::optional<Cell> locate(Point2 p) const {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) return std::nullopt;
    Cell c = to_cell(p);
    if (!contains(c)) return std::nullopt;
    return c;
  }

  Point2 center(Cell c) const {
    return Point2{origin.x + (c.col + 0.5) * resolution, origin.y + (c.row + 0.5) * resolution};
  }

  // World coordinate of the lower edge of column `col` (or row).
  double col_edge(int col) const { return origin.x + col * resolution; }
  double row_edge(int row) const { return origin.y + row * resolution; }
};

// Validates resolution/size; throws Error(InvalidScenario) otherwise.
void check_geometry(const GridGeometry& g);

inline constexpr int kNeighborOffsets8[8][2] = {{-1, -1}, {0, -1}, {1, -1}, {-1, 0},
                                                {1, 0},   {-1, 1}, {0, 1},  {1, 1}};

}  // namespace sitescout
