#include "sitescout/explore.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <queue>

#include "sitescout/error.hpp"

namespace sitescout {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSqrt2 = 1.41421356237309504880;

// 8-connected components of `mask`, each listed in row-major order, the
// components themselves ordered by their first cell.
std::vector<std::vector<Cell>> components(const GridGeometry& g, const std::vector<std::uint8_t>& mask) {
  std::vector<std::vector<Cell>> out;
  std::vector<std::uint8_t> seen(mask.size(), 0);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i] || seen[i]) continue;
    std::vector<Cell> comp;
    std::deque<std::size_t> queue{i};
    seen[i] = 1;
    while (!queue.empty()) {
      const std::size_t j = queue.front();
      queue.pop_front();
      const Cell c = g.cell_at(j);
      comp.push_back(c);
      for (const auto& off : kNeighborOffsets8) {
        const Cell n{c.col + off[0], c.row + off[1]};
        if (!g.contains(n)) continue;
        const std::size_t k = g.index(n);
        if (mask[k] && !seen[k]) {
          seen[k] = 1;
          queue.push_back(k);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    out.push_back(std::move(comp));
  }
  return out;
}

}  // namespace

bool is_frontier_cell(const OccupancyGrid& grid, Cell c) {
  const GridGeometry& g = grid.geometry();
  if (grid.state(c) != CellState::Free) return false;
  for (const auto& off : kNeighborOffsets8) {
    const Cell n{c.col + off[0], c.row + off[1]};
    if (g.contains(n) && grid.state(n) == CellState::Unknown) return true;
  }
  return false;
}

std::vector<Frontier> detect_frontiers(const OccupancyGrid& grid, std::size_t min_frontier_size) {
  const GridGeometry& g = grid.geometry();
  std::vector<std::uint8_t> mask(g.cell_count(), 0);
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = is_frontier_cell(grid, g.cell_at(i)) ? 1 : 0;

  std::vector<Frontier> out;
  for (auto& cells : components(g, mask)) {
    if (cells.size() < min_frontier_size) continue;
    Frontier f;
    f.id = static_cast<int>(out.size());
    double sx = 0.0;
    double sy = 0.0;
    for (const Cell& c : cells) {
      const Point2 p = g.center(c);
      sx += p.x;
      sy += p.y;
    }
    const Point2 mean{sx / cells.size(), sy / cells.size()};
    const auto mean_cell = g.locate(mean);
    if (mean_cell && grid.state(*mean_cell) == CellState::Free) {
      f.centroid = mean;
      f.centroid_cell = *mean_cell;
    } else {
      double best = kInf;
      for (const Cell& c : cells) {
        const double d = distance(g.center(c), mean);
        if (d < best) {
          best = d;
          f.centroid_cell = c;
        }
      }
      f.centroid = g.center(f.centroid_cell);
    }
    f.cells = std::move(cells);
    out.push_back(std::move(f));
  }
  return out;
}

std::optional<Goal> NearestFrontierStrategy::select(std::span<const Frontier> frontiers, Point2 pose,
                                                    const Costmap& costmap) const {
  const auto start = costmap.geometry.locate(pose);
  if (!start || frontiers.empty()) return std::nullopt;
  const CostField field = cost_field(costmap, *start, params_);

  std::optional<Goal> best;
  for (const Frontier& f : frontiers) {
    const double c = field.at(f.centroid_cell);
    if (c == kInf) continue;
    const bool better = !best || c < best->cost ||
                        (c == best->cost && (f.size() > best->frontier_size ||
                                             (f.size() == best->frontier_size && f.id < best->frontier_id)));
    if (better) best = Goal{f.id, f.centroid_cell, f.centroid, c, f.size()};
  }
  return best;
}

std::optional<Goal> select_goal(std::span<const Frontier> frontiers, Point2 pose, const Costmap& costmap,
                                const PlannerParams& params) {
  return NearestFrontierStrategy(params).select(frontiers, pose, costmap);
}

VerdictKind kind_of(const MissionVerdict& v) {
  if (std::holds_alternative<ContinueVerdict>(v)) return VerdictKind::Continue;
  if (std::holds_alternative<DoneVerdict>(v)) return VerdictKind::Done;
  return VerdictKind::Blocked;
}

double phi_of(const MissionVerdict& v) {
  return std::visit([](const auto& x) { return x.phi; }, v);
}

std::string_view to_string(VerdictKind k) {
  switch (k) {
    case VerdictKind::Continue: return "continue";
    case VerdictKind::Done: return "done";
    case VerdictKind::Blocked: return "blocked";
  }
  return "continue";
}

AccessPoint find_access_point(std::span<const Cell> region, const GroundTruthMap& gt, const OccupancyGrid& grid,
                              std::optional<Cell> from) {
  if (region.empty()) throw Error(ErrorCode::NoAccessExists, "empty region");
  const GridGeometry& g = gt.geometry();
  if (!(g == grid.geometry())) throw Error(ErrorCode::GridMismatch, "grid and ground truth differ");

  std::vector<std::uint8_t> in_region(g.cell_count(), 0);
  for (const Cell& c : region) in_region[g.index(c)] = 1;
  auto explored = [&](Cell c) { return grid.state(c) == CellState::Free; };

  auto within2 = [&](Cell center, auto&& pred) {
    for (int dr = -2; dr <= 2; ++dr) {
      for (int dc = -2; dc <= 2; ++dc) {
        const Cell n{center.col + dc, center.row + dr};
        if (g.contains(n) && pred(n)) return true;
      }
    }
    return false;
  };

  // Annotated openings first.
  const Opening* best_opening = nullptr;
  double best_dist = kInf;
  for (const Opening& o : gt.openings()) {
    const auto c = g.locate(o.center);
    if (!c) continue;
    if (!within2(*c, [&](Cell n) { return in_region[g.index(n)] != 0; })) continue;
    if (!within2(*c, explored)) continue;
    double d = kInf;
    for (const Cell& r : region) d = std::min(d, distance(g.center(r), o.center));
    if (d < best_dist || (d == best_dist && best_opening && o.id < best_opening->id)) {
      best_dist = d;
      best_opening = &o;
    }
  }
  if (best_opening) {
    return AccessPoint{best_opening->center, *g.locate(best_opening->center), AccessPoint::Via::Opening,
                       best_opening->id};
  }

  // Region cells that touch explored free space.
  std::vector<Cell> boundary;
  for (const Cell& c : region) {
    for (const auto& off : kNeighborOffsets8) {
      const Cell n{c.col + off[0], c.row + off[1]};
      if (g.contains(n) && !in_region[g.index(n)] && explored(n)) {
        boundary.push_back(c);
        break;
      }
    }
  }
  if (boundary.empty()) throw Error(ErrorCode::NoAccessExists, "region does not border explored space");

  // Distance over explored cells, from `from` when it is explored, else from
  // every explored cell at once.
  std::vector<double> dist(g.cell_count(), kInf);
  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  auto seed_all = [&] {
    for (std::size_t i = 0; i < dist.size(); ++i) {
      if (grid.state_at(i) == CellState::Free && !in_region[i]) {
        dist[i] = 0.0;
        open.emplace(0.0, i);
      }
    }
  };
  if (from && g.contains(*from) && explored(*from)) {
    dist[g.index(*from)] = 0.0;
    open.emplace(0.0, g.index(*from));
  } else {
    seed_all();
  }
  while (!open.empty()) {
    const auto [d, i] = open.top();
    open.pop();
    if (d > dist[i]) continue;
    const Cell c = g.cell_at(i);
    for (const auto& off : kNeighborOffsets8) {
      const Cell n{c.col + off[0], c.row + off[1]};
      if (!g.contains(n)) continue;
      const std::size_t j = g.index(n);
      if (in_region[j] || !explored(n)) continue;
      const double cand = d + ((off[0] != 0 && off[1] != 0) ? kSqrt2 : 1.0);
      if (cand < dist[j]) {
        dist[j] = cand;
        open.emplace(cand, j);
      }
    }
  }

  auto boundary_cost = [&](Cell b) {
    double best = kInf;
    for (const auto& off : kNeighborOffsets8) {
      const Cell n{b.col + off[0], b.row + off[1]};
      if (!g.contains(n)) continue;
      const std::size_t j = g.index(n);
      if (in_region[j] || dist[j] == kInf) continue;
      best = std::min(best, dist[j] + ((off[0] != 0 && off[1] != 0) ? kSqrt2 : 1.0));
    }
    return best;
  };

  std::sort(boundary.begin(), boundary.end());
  Cell chosen = boundary.front();
  double chosen_cost = kInf;
  for (const Cell& b : boundary) {
    const double c = boundary_cost(b);
    if (c < chosen_cost) {
      chosen_cost = c;
      chosen = b;
    }
  }
  if (chosen_cost == kInf && from) return find_access_point(region, gt, grid, std::nullopt);
  return AccessPoint{g.center(chosen), chosen, AccessPoint::Via::BoundaryCell, {}};
}

std::vector<BlockedRegion> identify_blocked_regions(const OccupancyGrid& grid, const GroundTruthMap& gt,
                                                    std::size_t min_region_size, std::optional<Cell> from) {
  const GridGeometry& g = gt.geometry();
  if (!(g == grid.geometry())) throw Error(ErrorCode::GridMismatch, "grid and ground truth differ");
  std::vector<std::uint8_t> mask(g.cell_count(), 0);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = (gt.label_at(i) == GtLabel::Free && grid.state_at(i) != CellState::Free) ? 1 : 0;
  }
  std::vector<BlockedRegion> out;
  for (auto& cells : components(g, mask)) {
    if (cells.size() < min_region_size) continue;
    try {
      AccessPoint access = find_access_point(cells, gt, grid, from);
      out.push_back(BlockedRegion{static_cast<int>(out.size()), std::move(cells), std::move(access)});
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoAccessExists) throw;
    }
  }
  return out;
}

MissionVerdict evaluate(const OccupancyGrid& grid, const GroundTruthMap& gt, double threshold,
                        const std::optional<Goal>& frontier_goal, std::size_t min_region_size,
                        std::optional<Cell> from) {
  const PhiReport report = compute_phi(grid, gt);
  if (report.phi >= threshold) return DoneVerdict{report.phi};
  if (frontier_goal) return ContinueVerdict{report.phi, *frontier_goal};
  return BlockedVerdict{report.phi, identify_blocked_regions(grid, gt, min_region_size, from)};
}

}  // namespace sitescout
