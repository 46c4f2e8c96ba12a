#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "sitescout/costmap.hpp"
#include "sitescout/error.hpp"
#include "sitescout/explore.hpp"

using namespace sitescout;

namespace {

GridGeometry rect(int w, int h) {
  GridGeometry g;
  g.width = w;
  g.height = h;
  g.resolution = 0.1;
  return g;
}

std::set<Cell> members(const std::vector<Frontier>& fs) {
  std::set<Cell> out;
  for (const Frontier& f : fs) out.insert(f.cells.begin(), f.cells.end());
  return out;
}

Frontier make_frontier(int id, const GridGeometry& g, Cell centroid, std::size_t size) {
  Frontier f;
  f.id = id;
  for (std::size_t i = 0; i < size; ++i) f.cells.push_back(centroid);
  f.centroid_cell = centroid;
  f.centroid = g.center(centroid);
  return f;
}

// Ground truth with two rooms: A on the left, B on the right, a one-cell gap
// in the dividing wall at row 3.
const std::vector<std::string> kTwoRooms{
    "#############",
    "#.....#.....#",
    "#.....#.....#",
    "#...........#",
    "#.....#.....#",
    "#.....#.....#",
    "#############",
};

// Exploration grid where only room A (and its walls) is known.
OccupancyGrid room_a_explored() {
  std::vector<std::string> rows = kTwoRooms;
  for (std::string& r : rows) {
    for (std::size_t c = 6; c < r.size(); ++c) r[c] = '?';
  }
  // The dividing wall is mapped except the gap, which is blocked.
  for (std::size_t r = 0; r < rows.size(); ++r) rows[r][6] = '#';
  return oracle::grid_from_rows(rows);
}

}  // namespace

TEST(DetectFrontiers, TrivialGrids) {
  const GridGeometry g = rect(10, 8);
  EXPECT_TRUE(detect_frontiers(OccupancyGrid(g), 1).empty());
  OccupancyGrid free(g);
  for (std::size_t i = 0; i < g.cell_count(); ++i) free.set(g.cell_at(i), -1.0);
  EXPECT_TRUE(detect_frontiers(free, 1).empty());
}

TEST(DetectFrontiers, SingleFreeCellAmidUnknown) {
  const GridGeometry g = rect(7, 7);
  OccupancyGrid grid(g);
  grid.set(Cell{3, 2}, -1.0);
  const auto fs = detect_frontiers(grid, 1);
  ASSERT_EQ(fs.size(), 1u);
  EXPECT_EQ(fs[0].size(), 1u);
  EXPECT_EQ(fs[0].cells[0], (Cell{3, 2}));
  EXPECT_EQ(fs[0].centroid_cell, (Cell{3, 2}));
  EXPECT_EQ(fs[0].centroid, g.center(Cell{3, 2}));
  EXPECT_TRUE(detect_frontiers(grid, 2).empty());
}

// Members are exactly the brute-force predicate set, clusters match a
// union-find oracle, ids are dense in row-major order of the first cell and
// every centroid cell is a Free member.
TEST(DetectFrontiersProperty, BruteForceEquivalence) {
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const GridGeometry g = rect(20, 20);
    const OccupancyGrid grid = oracle::random_grid(g, rng, u(rng), 0.3 * u(rng));
    const std::set<Cell> truth = oracle::frontier_cells(grid);
    ASSERT_EQ(members(detect_frontiers(grid, 1)), truth) << "trial " << trial;
    for (std::size_t min : {1u, 3u}) {
      const auto fs = detect_frontiers(grid, min);
      auto want = oracle::clusters(truth, min);
      std::vector<std::set<Cell>> got;
      for (std::size_t i = 0; i < fs.size(); ++i) {
        ASSERT_EQ(fs[i].id, static_cast<int>(i));
        if (i > 0) ASSERT_LT(fs[i - 1].cells.front(), fs[i].cells.front());
        ASSERT_GE(fs[i].size(), min);
        ASSERT_EQ(grid.state(fs[i].centroid_cell), CellState::Free);
        ASSERT_TRUE(std::find(fs[i].cells.begin(), fs[i].cells.end(), fs[i].centroid_cell) != fs[i].cells.end() ||
                    g.to_cell(fs[i].centroid) == fs[i].centroid_cell);
        got.emplace_back(fs[i].cells.begin(), fs[i].cells.end());
      }
      std::sort(got.begin(), got.end());
      std::sort(want.begin(), want.end());
      ASSERT_EQ(got, want) << "trial " << trial << " min " << min;
    }
  }
}

TEST(DetectFrontiers, CentroidSnapsToMemberWhenMeanIsNotFree) {
  // An L-shaped band of free cells around an occupied corner.
  const std::vector<std::string> rows{
      "?????",
      "?...?",
      "?.##?",
      "?.##?",
      "?????",
  };
  const OccupancyGrid grid = oracle::grid_from_rows(rows);
  const auto fs = detect_frontiers(grid, 1);
  ASSERT_EQ(fs.size(), 1u);
  const Frontier& f = fs[0];
  EXPECT_EQ(f.size(), 5u);
  EXPECT_EQ(grid.state(f.centroid_cell), CellState::Free);
  EXPECT_EQ(f.centroid, grid.geometry().center(f.centroid_cell));
  // The mean of the five centers falls inside the occupied block.
  double mx = 0, my = 0;
  for (const Cell& c : f.cells) {
    mx += grid.geometry().center(c).x / 5;
    my += grid.geometry().center(c).y / 5;
  }
  EXPECT_NE(grid.state(grid.geometry().to_cell(Point2{mx, my})), CellState::Free);
}

TEST(SelectGoal, PicksCheapestReachableFrontier) {
  const GridGeometry g = rect(12, 3);
  OccupancyGrid grid(g);
  for (std::size_t i = 0; i < g.cell_count(); ++i) grid.set(g.cell_at(i), -1.0);
  const Costmap cm = build_costmap(grid, 0.0);
  const Point2 pose = g.center(Cell{0, 1});
  const std::vector<Frontier> fs{make_frontier(0, g, Cell{7, 1}, 4), make_frontier(1, g, Cell{3, 1}, 4)};
  ASSERT_NEAR(*oracle::uniform_cost(cm, Cell{0, 1}, Cell{3, 1}, 0.01), 3.0, 1e-12);
  ASSERT_NEAR(*oracle::uniform_cost(cm, Cell{0, 1}, Cell{7, 1}, 0.01), 7.0, 1e-12);
  const auto goal = select_goal(fs, pose, cm);
  ASSERT_TRUE(goal);
  EXPECT_EQ(goal->frontier_id, 1);
  EXPECT_DOUBLE_EQ(goal->cost, 3.0);
  EXPECT_EQ(goal->cell, (Cell{3, 1}));
}

TEST(SelectGoal, EqualCostPrefersLargerFrontier) {
  const GridGeometry g = rect(12, 3);
  OccupancyGrid grid(g);
  for (std::size_t i = 0; i < g.cell_count(); ++i) grid.set(g.cell_at(i), -1.0);
  const Costmap cm = build_costmap(grid, 0.0);
  const Point2 pose = g.center(Cell{0, 1});
  const std::vector<Frontier> fs{make_frontier(0, g, Cell{3, 0}, 5), make_frontier(1, g, Cell{3, 2}, 9)};
  const auto goal = select_goal(fs, pose, cm);
  ASSERT_TRUE(goal);
  EXPECT_EQ(goal->frontier_id, 1);
  EXPECT_EQ(goal->frontier_size, 9u);
  const std::vector<Frontier> same{make_frontier(0, g, Cell{3, 0}, 5), make_frontier(1, g, Cell{3, 2}, 5)};
  EXPECT_EQ(select_goal(same, pose, cm)->frontier_id, 0);
}

TEST(SelectGoal, NoGoal) {
  const GridGeometry g = rect(12, 3);
  OccupancyGrid grid(g);
  for (std::size_t i = 0; i < g.cell_count(); ++i) grid.set(g.cell_at(i), -1.0);
  for (int r = 0; r < 3; ++r) grid.set(Cell{5, r}, 3.5);
  const Costmap cm = build_costmap(grid, 0.0);
  const Point2 pose = g.center(Cell{0, 1});
  EXPECT_FALSE(select_goal({}, pose, cm));
  const std::vector<Frontier> fs{make_frontier(0, g, Cell{9, 1}, 4)};
  EXPECT_FALSE(select_goal(fs, pose, cm));
}

TEST(SelectGoalProperty, DeterministicAndMinimal) {
  std::mt19937_64 rng(59);
  for (int trial = 0; trial < 60; ++trial) {
    const GridGeometry g = rect(16, 16);
    const OccupancyGrid grid = oracle::random_grid(g, rng, 0.7, 0.1);
    const auto fs = detect_frontiers(grid, 1);
    const Costmap cm = build_costmap(grid, 0.0);
    Cell start{-1, -1};
    for (std::size_t i = 0; i < g.cell_count(); ++i) {
      if (grid.state_at(i) == CellState::Free) {
        start = g.cell_at(i);
        break;
      }
    }
    if (start.col < 0) continue;
    const auto a = select_goal(fs, g.center(start), cm);
    const auto b = select_goal(fs, g.center(start), cm);
    ASSERT_EQ(a.has_value(), b.has_value());
    if (!a) continue;
    ASSERT_EQ(a->frontier_id, b->frontier_id);
    for (const Frontier& f : fs) {
      const auto c = oracle::uniform_cost(cm, start, f.centroid_cell, 0.01);
      if (c) ASSERT_LE(a->cost, *c + 1e-9);
    }
  }
}

TEST(Evaluate, PaperThresholdExamples) {
  // 99.24 % explored against a 99 % threshold with frontiers left: Done.
  const GridGeometry g = rect(50, 50);
  const GroundTruthMap gt(g, std::vector<GtLabel>(g.cell_count(), GtLabel::Free));
  OccupancyGrid grid(g);
  for (std::size_t i = 0; i < 2481; ++i) grid.set(g.cell_at(i), -1.0);
  ASSERT_FALSE(detect_frontiers(grid, 1).empty());
  Goal goal;
  goal.frontier_id = 0;
  const MissionVerdict done = evaluate(grid, gt, 99.0, goal);
  EXPECT_EQ(kind_of(done), VerdictKind::Done);
  EXPECT_NEAR(phi_of(done), 99.24, 1e-9);

  // 84.53 % with no goal: Blocked.
  const GridGeometry big = rect(100, 100);
  const GroundTruthMap gt_big(big, std::vector<GtLabel>(big.cell_count(), GtLabel::Free));
  OccupancyGrid partial(big);
  for (std::size_t i = 0; i < 8453; ++i) partial.set(big.cell_at(i), -1.0);
  const MissionVerdict blocked = evaluate(partial, gt_big, 95.0, std::nullopt);
  EXPECT_EQ(kind_of(blocked), VerdictKind::Blocked);
  EXPECT_NEAR(phi_of(blocked), 84.53, 1e-9);

  // 50 % with a reachable goal: Continue.
  OccupancyGrid half(g);
  for (std::size_t i = 0; i < 1250; ++i) half.set(g.cell_at(i), -1.0);
  const MissionVerdict cont = evaluate(half, gt, 95.0, goal);
  EXPECT_EQ(kind_of(cont), VerdictKind::Continue);
  EXPECT_DOUBLE_EQ(phi_of(cont), 50.0);
}

TEST(Evaluate, OverHundredIsDone) {
  const GridGeometry g = rect(10, 10);
  std::vector<GtLabel> labels(100, GtLabel::Occupied);
  for (std::size_t i = 0; i < 50; ++i) labels[i] = GtLabel::Free;
  const GroundTruthMap gt(g, labels);
  OccupancyGrid grid(g);
  for (std::size_t i = 0; i < 55; ++i) grid.set(g.cell_at(i), -1.0);
  const MissionVerdict v = evaluate(grid, gt, 95.0, std::nullopt);
  EXPECT_EQ(kind_of(v), VerdictKind::Done);
  EXPECT_GT(phi_of(v), 100.0);
}

TEST(EvaluateProperty, TrichotomyAndDoneDominance) {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const GridGeometry g = rect(12, 12);
    const OccupancyGrid grid = oracle::random_grid(g, rng, u(rng), 0.2);
    const GroundTruthMap gt = oracle::random_ground_truth(g, rng, 0.3 + 0.6 * u(rng));
    const double threshold = 1.0 + 150.0 * u(rng);
    std::optional<Goal> goal;
    if (u(rng) < 0.5) goal = Goal{};
    const MissionVerdict v = evaluate(grid, gt, threshold, goal);
    const double phi = oracle::phi_count_and_divide(grid.values(), gt.labels());
    const int kinds = std::holds_alternative<DoneVerdict>(v) + std::holds_alternative<ContinueVerdict>(v) +
                      std::holds_alternative<BlockedVerdict>(v);
    ASSERT_EQ(kinds, 1);
    if (phi >= threshold) {
      ASSERT_EQ(kind_of(v), VerdictKind::Done);
    } else if (goal) {
      ASSERT_EQ(kind_of(v), VerdictKind::Continue);
    } else {
      ASSERT_EQ(kind_of(v), VerdictKind::Blocked);
    }
  }
}

TEST(IdentifyBlockedRegions, RoomBWhenOnlyRoomAExplored) {
  const GroundTruthMap gt = oracle::gt_from_rows(kTwoRooms);
  const OccupancyGrid grid = room_a_explored();
  const auto regions = identify_blocked_regions(grid, gt, 4);
  ASSERT_EQ(regions.size(), 1u);
  // Set-difference oracle: gt Free and not Free in the grid.
  std::set<Cell> expect;
  for (std::size_t i = 0; i < gt.geometry().cell_count(); ++i) {
    if (gt.label_at(i) == GtLabel::Free && grid.state_at(i) != CellState::Free) expect.insert(gt.geometry().cell_at(i));
  }
  EXPECT_EQ(std::set<Cell>(regions[0].cells.begin(), regions[0].cells.end()), expect);
  EXPECT_EQ(expect.size(), 26u);  // room B plus the gap cell
}

TEST(IdentifyBlockedRegions, FullyExploredAndSmallResiduals) {
  const GroundTruthMap gt = oracle::gt_from_rows(kTwoRooms);
  std::vector<std::string> rows = kTwoRooms;
  EXPECT_TRUE(identify_blocked_regions(oracle::grid_from_rows(rows), gt, 4).empty());
  rows[1][10] = '?';
  rows[1][11] = '?';
  EXPECT_TRUE(identify_blocked_regions(oracle::grid_from_rows(rows), gt, 4).empty());
  EXPECT_EQ(identify_blocked_regions(oracle::grid_from_rows(rows), gt, 2).size(), 1u);
}

TEST(FindAccessPoint, AnnotatedDoorWins) {
  GroundTruthMap gt = oracle::gt_from_rows(kTwoRooms);
  const Point2 door_center = gt.geometry().center(Cell{6, 3});
  gt = attach_openings(gt, {Opening{"door", door_center, OpeningKind::Door, HingeSide::Right, Actuation::Push}});
  const auto regions = identify_blocked_regions(room_a_explored(), gt, 4);
  ASSERT_EQ(regions.size(), 1u);
  EXPECT_EQ(regions[0].access.via, AccessPoint::Via::Opening);
  EXPECT_EQ(regions[0].access.opening_id, "door");
  EXPECT_EQ(regions[0].access.location, door_center);
}

TEST(FindAccessPoint, GapCellWithoutAnnotations) {
  const GroundTruthMap gt = oracle::gt_from_rows(kTwoRooms);
  const auto regions = identify_blocked_regions(room_a_explored(), gt, 4);
  ASSERT_EQ(regions.size(), 1u);
  EXPECT_EQ(regions[0].access.via, AccessPoint::Via::BoundaryCell);
  EXPECT_EQ(regions[0].access.cell, (Cell{6, 3}));
}

TEST(FindAccessPoint, FarOpeningFallsBackToBoundaryCell) {
  // Long room A so an opening on its far wall is 10+ cells from room B.
  const std::vector<std::string> rows{
      "##################",
      "#..........#.....#",
      "#..........#.....#",
      "#................#",
      "#..........#.....#",
      "##################",
  };
  GroundTruthMap gt = oracle::gt_from_rows(rows);
  gt = attach_openings(gt, {Opening{"far", gt.geometry().center(Cell{0, 2}), OpeningKind::Passage, HingeSide::None,
                                    Actuation::None}});
  std::vector<std::string> seen = rows;
  for (std::string& r : seen) {
    for (std::size_t c = 11; c < r.size(); ++c) r[c] = '?';
    r[11] = '#';
  }
  const auto regions = identify_blocked_regions(oracle::grid_from_rows(seen), gt, 4);
  ASSERT_EQ(regions.size(), 1u);
  EXPECT_EQ(regions[0].access.via, AccessPoint::Via::BoundaryCell);
  EXPECT_EQ(regions[0].access.cell, (Cell{11, 2}));
}

TEST(FindAccessPoint, WalledInRegionHasNoAccess) {
  const std::vector<std::string> rows{
      "#########",
      "#...#...#",
      "#...#...#",
      "#########",
  };
  const GroundTruthMap gt = oracle::gt_from_rows(rows);
  std::vector<std::string> seen = rows;
  for (std::string& r : seen) {
    for (std::size_t c = 5; c < 8; ++c) r[c] = '?';
  }
  std::vector<Cell> region;
  for (int r = 1; r <= 2; ++r) {
    for (int c = 5; c <= 7; ++c) region.push_back(Cell{c, r});
  }
  try {
    find_access_point(region, gt, oracle::grid_from_rows(seen));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoAccessExists);
  }
  EXPECT_TRUE(identify_blocked_regions(oracle::grid_from_rows(seen), gt, 4).empty());
}
