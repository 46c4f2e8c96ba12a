#include "sitescout/gridmap.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "sitescout/error.hpp"
#include "sitescout/floorplan.hpp"
#include "sitescout/raytrace.hpp"

namespace sitescout {

std::string_view to_string(CellState s) {
  switch (s) {
    case CellState::Unknown: return "unknown";
    case CellState::Free: return "free";
    case CellState::Occupied: return "occupied";
  }
  return "unknown";
}

OccupancyGrid::OccupancyGrid(GridGeometry geometry, LogOddsParams params)
    : geometry_(geometry), params_(params) {
  check_geometry(geometry_);
  logodds_.assign(geometry_.cell_count(), 0.0);
}

CellState OccupancyGrid::state(Cell c) const { return classify_cell(logodds(c), params_); }

CellState OccupancyGrid::state_at(std::size_t i) const { return classify_cell(logodds_[i], params_); }

void OccupancyGrid::add(Cell c, double delta) {
  double& v = logodds_[geometry_.index(c)];
  v = std::clamp(v + delta, params_.min, params_.max);
}

void OccupancyGrid::set(Cell c, double value) {
  logodds_[geometry_.index(c)] = std::clamp(value, params_.min, params_.max);
}

std::size_t OccupancyGrid::count(CellState s) const {
  std::size_t n = 0;
  for (double v : logodds_) {
    if (classify_cell(v, params_) == s) ++n;
  }
  return n;
}

CellState classify_cell(double logodds) { return classify_cell(logodds, LogOddsParams{}); }

CellState classify_cell(double logodds, const LogOddsParams& params) {
  if (!std::isfinite(logodds)) {
    throw Error(ErrorCode::NonFiniteValue, "log-odds value is not finite");
  }
  if (logodds > params.occupied_above) return CellState::Occupied;
  if (logodds < params.free_below) return CellState::Free;
  return CellState::Unknown;
}

void apply_scan(OccupancyGrid& grid, const Scan& scan) {
  const GridGeometry& g = grid.geometry();
  const Point2 origin = scan.pose.position;
  if (!g.locate(origin)) {
    throw Error(ErrorCode::PoseOutOfBounds, "sensor pose lies outside the grid");
  }
  const LogOddsParams& p = grid.params();
  for (const Ray& ray : scan.rays) {
    if (!std::isfinite(ray.range) || !std::isfinite(ray.bearing)) {
      throw Error(ErrorCode::NonFiniteValue, "ray with non-finite range or bearing");
    }
    const double range = ray.range;
    traverse_ray(g, origin, scan.pose.heading + ray.bearing, range, [&](Cell c, double, double t_exit) {
      const bool endpoint = t_exit >= range;
      grid.add(c, endpoint && ray.hit ? p.hit : p.miss);
      return true;
    });
  }
}

PhiReport compute_phi(const OccupancyGrid& grid, const GroundTruthMap& gt) {
  if (!(grid.geometry() == gt.geometry())) {
    throw Error(ErrorCode::GridMismatch, "exploration grid and ground truth differ in shape, resolution or origin");
  }
  PhiReport r;
  r.gt_free = gt.free_count();
  if (r.gt_free == 0) {
    throw Error(ErrorCode::EmptyGroundTruth, "ground truth has no free cells");
  }
  r.explored_free = grid.count(CellState::Free);
  r.phi = 100.0 * static_cast<double>(r.explored_free) / static_cast<double>(r.gt_free);
  return r;
}

OccupancyGrid merge_grids(std::span<const OccupancyGrid> grids) {
  if (grids.empty()) {
    throw Error(ErrorCode::EmptyList, "nothing to merge");
  }
  const OccupancyGrid& first = grids.front();
  for (const OccupancyGrid& g : grids) {
    if (!(g.geometry() == first.geometry())) {
      throw Error(ErrorCode::GridMismatch, "grids to merge differ in shape, resolution or origin");
    }
  }
  if (grids.size() == 1) return first;

  OccupancyGrid merged(first.geometry(), first.params());
  const std::size_t n = first.geometry().cell_count();
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (const OccupancyGrid& g : grids) sum += g.logodds_at(i);
    merged.set(first.geometry().cell_at(i), sum);
  }
  return merged;
}

std::uint8_t pgm_value(CellState s) {
  switch (s) {
    case CellState::Free: return kPgmFree;
    case CellState::Occupied: return kPgmOccupied;
    case CellState::Unknown: return kPgmUnknown;
  }
  return kPgmUnknown;
}

std::string export_map(const OccupancyGrid& grid) {
  const GridGeometry& g = grid.geometry();
  std::string out = "P5\n" + std::to_string(g.width) + " " + std::to_string(g.height) + "\n255\n";
  out.reserve(out.size() + g.cell_count());
  for (int row = g.height - 1; row >= 0; --row) {
    for (int col = 0; col < g.width; ++col) {
      out.push_back(static_cast<char>(pgm_value(grid.state(Cell{col, row}))));
    }
  }
  return out;
}

namespace {

// Reads the next whitespace-delimited header token, skipping `#` comments.
std::string next_token(std::string_view bytes, std::size_t& pos) {
  while (pos < bytes.size()) {
    const char ch = bytes[pos];
    if (ch == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(ch))) {
      ++pos;
    } else {
      break;
    }
  }
  std::string tok;
  while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) tok.push_back(bytes[pos++]);
  return tok;
}

int parse_positive(const std::string& tok, const char* what) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size() || v <= 0) throw std::invalid_argument(what);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::ParseError, std::string("bad graymap ") + what + " '" + tok + "'");
  }
}

}  // namespace

StateRaster parse_map(std::string_view bytes) {
  std::size_t pos = 0;
  if (next_token(bytes, pos) != "P5") throw Error(ErrorCode::ParseError, "not a P5 graymap");
  StateRaster r;
  r.width = parse_positive(next_token(bytes, pos), "width");
  r.height = parse_positive(next_token(bytes, pos), "height");
  const int maxval = parse_positive(next_token(bytes, pos), "maxval");
  if (maxval > 255) throw Error(ErrorCode::ParseError, "16-bit graymaps are not supported");
  ++pos;  // single whitespace after maxval
  const std::size_t n = static_cast<std::size_t>(r.width) * static_cast<std::size_t>(r.height);
  if (bytes.size() < pos + n) throw Error(ErrorCode::ParseError, "graymap pixel data truncated");

  r.states.resize(n);
  r.pixels.resize(n);
  for (int img_row = 0; img_row < r.height; ++img_row) {
    const int row = r.height - 1 - img_row;
    for (int col = 0; col < r.width; ++col) {
      const auto px = static_cast<std::uint8_t>(bytes[pos + static_cast<std::size_t>(img_row) * r.width + col]);
      const std::size_t i = static_cast<std::size_t>(row) * r.width + col;
      r.pixels[i] = px;
      r.states[i] = px == kPgmFree ? CellState::Free : px == kPgmOccupied ? CellState::Occupied : CellState::Unknown;
    }
  }
  return r;
}

}  // namespace sitescout
