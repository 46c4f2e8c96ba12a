#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sitescout/geometry.hpp"

namespace sitescout {

enum class CellState : std::uint8_t { Unknown, Free, Occupied };

std::string_view to_string(CellState s);

// Evidence model. The defaults make a saturated obstacle (+3.5) stop being
// Occupied after 8 consecutive misses.
struct LogOddsParams {
  double hit = 0.85;
  double miss = -0.4;
  double min = -2.0;
  double max = 3.5;
  double occupied_above = 0.5;
  double free_below = -0.5;

  friend bool operator==(const LogOddsParams&, const LogOddsParams&) = default;
};

class OccupancyGrid {
 public:
  // All cells start at log-odds 0 (Unknown).
  explicit OccupancyGrid(GridGeometry geometry, LogOddsParams params = {});

  const GridGeometry& geometry() const { return geometry_; }
  const LogOddsParams& params() const { return params_; }

  double logodds(Cell c) const { return logodds_[geometry_.index(c)]; }
  double logodds_at(std::size_t i) const { return logodds_[i]; }
  CellState state(Cell c) const;
  CellState state_at(std::size_t i) const;

  // Adds `delta` and clamps to [params.min, params.max].
  void add(Cell c, double delta);
  void set(Cell c, double value);

  std::span<const double> values() const { return logodds_; }

  std::size_t count(CellState s) const;

  friend bool operator==(const OccupancyGrid&, const OccupancyGrid&) = default;

 private:
  GridGeometry geometry_;
  LogOddsParams params_;
  std::vector<double> logodds_;
};

struct Ray {
  double bearing = 0.0;  // radians, relative to sensor heading
  double range = 0.0;    // meters
  bool hit = false;
};

struct Scan {
  Pose2 pose;
  std::vector<Ray> rays;
  double max_range = 0.0;
};

struct PhiReport {
  double phi = 0.0;  // percent, may exceed 100
  std::size_t explored_free = 0;
  std::size_t gt_free = 0;
};

class GroundTruthMap;

// Classification with the default thresholds.
CellState classify_cell(double logodds);
CellState classify_cell(double logodds, const LogOddsParams& params);

// Walks each ray from the sensor: cells before the endpoint get a miss, the
// endpoint cell gets a hit (or a miss when the ray did not hit anything).
// The sensor's own cell counts as the first traversed cell. Rays are clipped
// at the grid border.
void apply_scan(OccupancyGrid& grid, const Scan& scan);

// Explored-area ratio: 100 * (Free cells in grid) / (free cells in gt).
PhiReport compute_phi(const OccupancyGrid& grid, const GroundTruthMap& gt);

// Cell-wise sum of log-odds, clamped. Throws EmptyList / GridMismatch.
OccupancyGrid merge_grids(std::span<const OccupancyGrid> grids);

inline constexpr std::uint8_t kPgmFree = 254;
inline constexpr std::uint8_t kPgmUnknown = 205;
inline constexpr std::uint8_t kPgmOccupied = 0;

std::uint8_t pgm_value(CellState s);

// Binary P5 graymap, top row first.
std::string export_map(const OccupancyGrid& grid);

// Decoded graymap: states in row-major order with row 0 at the bottom (the
// same indexing as GridGeometry).
struct StateRaster {
  int width = 0;
  int height = 0;
  std::vector<CellState> states;
  std::vector<std::uint8_t> pixels;
};

// Parses a P5 graymap written by export_map. Pixels outside the palette are
// reported as Unknown.
StateRaster parse_map(std::string_view bytes);

}  // namespace sitescout
