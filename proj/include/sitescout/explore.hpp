#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sitescout/costmap.hpp"
#include "sitescout/floorplan.hpp"
#include "sitescout/geometry.hpp"
#include "sitescout/gridmap.hpp"
#include "sitescout/planner.hpp"

namespace sitescout {

struct Frontier {
  int id = 0;
  std::vector<Cell> cells;  // row-major order
  Point2 centroid;
  Cell centroid_cell;
  std::size_t size() const { return cells.size(); }
};

// A Free cell with at least one Unknown 8-neighbor.
bool is_frontier_cell(const OccupancyGrid& grid, Cell c);

// Frontier cells clustered by 8-connectivity; clusters smaller than
// `min_frontier_size` are dropped and the rest numbered 0.. in row-major order
// of their first cell. The centroid is the mean of member centers, snapped to
// the nearest member when the mean lands on a non-Free cell.
std::vector<Frontier> detect_frontiers(const OccupancyGrid& grid, std::size_t min_frontier_size = 3);

struct Goal {
  int frontier_id = -1;
  Cell cell;
  Point2 point;
  double cost = 0.0;
  std::size_t frontier_size = 0;
};

// Pluggable goal scoring. The shipped strategy picks the cheapest reachable
// frontier centroid.
class GoalStrategy {
 public:
  virtual ~GoalStrategy() = default;
  virtual std::optional<Goal> select(std::span<const Frontier> frontiers, Point2 pose, const Costmap& costmap) const = 0;
};

class NearestFrontierStrategy final : public GoalStrategy {
 public:
  explicit NearestFrontierStrategy(PlannerParams params = {}) : params_(params) {}
  std::optional<Goal> select(std::span<const Frontier> frontiers, Point2 pose, const Costmap& costmap) const override;

 private:
  PlannerParams params_;
};

// Minimal path cost; ties go to the larger frontier, then the lower id.
std::optional<Goal> select_goal(std::span<const Frontier> frontiers, Point2 pose, const Costmap& costmap,
                                const PlannerParams& params = {});

struct AccessPoint {
  enum class Via { Opening, BoundaryCell };
  Point2 location;
  Cell cell;
  Via via = Via::BoundaryCell;
  std::string opening_id;  // set when via == Opening
};

struct BlockedRegion {
  int id = 0;
  std::vector<Cell> cells;
  AccessPoint access;
};

struct ContinueVerdict {
  double phi = 0.0;
  Goal goal;
};
struct DoneVerdict {
  double phi = 0.0;
};
struct BlockedVerdict {
  double phi = 0.0;
  std::vector<BlockedRegion> regions;
};

using MissionVerdict = std::variant<ContinueVerdict, DoneVerdict, BlockedVerdict>;

enum class VerdictKind { Continue, Done, Blocked };
VerdictKind kind_of(const MissionVerdict& v);
double phi_of(const MissionVerdict& v);
std::string_view to_string(VerdictKind k);

// Picks the access point of a region of ground-truth free space that the
// exploration grid has not covered. An annotated opening within 2 cells of
// both the region and explored Free space wins (nearest to the region, then
// lowest id); otherwise the region cell bordering explored Free space that is
// cheapest to reach from `from` (or from any explored cell when `from` is not
// given). Throws NoAccessExists when the region borders no explored cell.
AccessPoint find_access_point(std::span<const Cell> region, const GroundTruthMap& gt, const OccupancyGrid& grid,
                              std::optional<Cell> from = std::nullopt);

// Clusters {gt free} minus {grid Free}; regions without any access point are
// left out.
std::vector<BlockedRegion> identify_blocked_regions(const OccupancyGrid& grid, const GroundTruthMap& gt,
                                                    std::size_t min_region_size = 4,
                                                    std::optional<Cell> from = std::nullopt);

// Done when phi >= threshold, whatever frontiers remain; Continue when a goal
// exists; Blocked otherwise.
MissionVerdict evaluate(const OccupancyGrid& grid, const GroundTruthMap& gt, double threshold,
                        const std::optional<Goal>& frontier_goal, std::size_t min_region_size = 4,
                        std::optional<Cell> from = std::nullopt);

}  // namespace sitescout
