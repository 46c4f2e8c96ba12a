#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "oracles.hpp"
#include "sitescout/error.hpp"
#include "sitescout/gridmap.hpp"
#include "sitescout/raytrace.hpp"

using namespace sitescout;

namespace {

GridGeometry square(int n, double res = 0.1) {
  GridGeometry g;
  g.width = n;
  g.height = n;
  g.resolution = res;
  return g;
}

Pose2 at_center(const GridGeometry& g, Cell c, double heading = 0.0) { return Pose2{g.center(c), heading}; }

}  // namespace

TEST(ClassifyCell, ThresholdExamples) {
  EXPECT_EQ(classify_cell(0.0), CellState::Unknown);
  EXPECT_EQ(classify_cell(3.5), CellState::Occupied);
  EXPECT_EQ(classify_cell(-0.4), CellState::Unknown);
  EXPECT_EQ(classify_cell(-0.8), CellState::Free);
  EXPECT_EQ(classify_cell(0.5), CellState::Unknown);
  EXPECT_EQ(classify_cell(-0.5), CellState::Unknown);
}

TEST(ClassifyCell, RejectsNonFinite) {
  for (double v : {std::nan(""), std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()}) {
    try {
      classify_cell(v);
      FAIL() << "accepted " << v;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::NonFiniteValue);
    }
  }
}

TEST(ApplyScan, ForwardRayHittingAtFiveCells) {
  const GridGeometry g = square(21);
  OccupancyGrid grid(g);
  Scan scan;
  scan.pose = at_center(g, Cell{10, 10});
  scan.max_range = 5.0;
  // Endpoint is the fifth cell along +x, counting the sensor cell.
  scan.rays.push_back(Ray{0.0, 0.4, true});
  apply_scan(grid, scan);
  for (int c = 10; c <= 13; ++c) EXPECT_DOUBLE_EQ(grid.logodds(Cell{c, 10}), -0.4) << c;
  EXPECT_DOUBLE_EQ(grid.logodds(Cell{14, 10}), 0.85);
  std::size_t touched = 0;
  for (double v : grid.values()) touched += v != 0.0;
  EXPECT_EQ(touched, 5u);
}

TEST(ApplyScan, EmptyRayListIsNoOp) {
  const GridGeometry g = square(9);
  std::mt19937_64 rng(1);
  OccupancyGrid grid = oracle::random_grid(g, rng);
  const OccupancyGrid before = grid;
  Scan scan;
  scan.pose = at_center(g, Cell{4, 4});
  scan.max_range = 2.0;
  apply_scan(grid, scan);
  EXPECT_EQ(grid, before);
}

TEST(ApplyScan, TenHitsClampAtMax) {
  const GridGeometry g = square(21);
  OccupancyGrid grid(g);
  Scan scan;
  scan.pose = at_center(g, Cell{10, 10});
  scan.max_range = 5.0;
  scan.rays.push_back(Ray{0.0, 0.4, true});
  for (int i = 0; i < 10; ++i) apply_scan(grid, scan);
  EXPECT_DOUBLE_EQ(grid.logodds(Cell{14, 10}), 3.5);
  EXPECT_DOUBLE_EQ(grid.logodds(Cell{10, 10}), -2.0);
}

TEST(ApplyScan, NoHitRayMissesEveryCellItCrosses) {
  const GridGeometry g = square(21);
  OccupancyGrid grid(g);
  Scan scan;
  scan.pose = at_center(g, Cell{10, 10});
  scan.max_range = 0.4;
  scan.rays.push_back(Ray{std::numbers::pi / 2, 0.4, false});
  apply_scan(grid, scan);
  for (int r = 10; r <= 14; ++r) EXPECT_DOUBLE_EQ(grid.logodds(Cell{10, r}), -0.4) << r;
  EXPECT_DOUBLE_EQ(grid.logodds(Cell{10, 15}), 0.0);
}

TEST(ApplyScan, PoseOutsideGridThrows) {
  const GridGeometry g = square(5);
  OccupancyGrid grid(g);
  Scan scan;
  scan.pose = Pose2{Point2{-1.0, 0.2}, 0.0};
  scan.max_range = 1.0;
  scan.rays.push_back(Ray{0.0, 0.5, true});
  try {
    apply_scan(grid, scan);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PoseOutOfBounds);
  }
}

// Every cell ends inside the clamp range and only cells on some ray path
// change.
TEST(ApplyScanProperty, ClampingAndLocality) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const GridGeometry g = square(24);
    OccupancyGrid grid(g);
    std::vector<std::uint8_t> on_path(g.cell_count(), 0);
    for (int s = 0; s < 20; ++s) {
      Scan scan;
      scan.pose = Pose2{Point2{0.2 + 2.0 * u(rng), 0.2 + 2.0 * u(rng)}, 6.28 * u(rng)};
      scan.max_range = 1.5;
      double bearing = 0.0;
      const int rays = 1 + static_cast<int>(u(rng) * 8);
      for (int k = 0; k < rays; ++k) {
        bearing += 0.05 + 0.7 * u(rng);
        const double range = 0.05 + 1.45 * u(rng);
        scan.rays.push_back(Ray{bearing, range, u(rng) < 0.5});
        traverse_ray(g, scan.pose.position, scan.pose.heading + bearing, range, [&](Cell c, double, double) {
          on_path[g.index(c)] = 1;
          return true;
        });
      }
      apply_scan(grid, scan);
    }
    for (std::size_t i = 0; i < g.cell_count(); ++i) {
      const double v = grid.logodds_at(i);
      ASSERT_GE(v, -2.0);
      ASSERT_LE(v, 3.5);
      if (!on_path[i]) ASSERT_EQ(v, 0.0);
    }
  }
}

// A saturated obstacle stops being Occupied after 8 misses and turns Free
// after 11; the reference is a plain loop over the declared constants.
TEST(ApplyScan, StaleObstacleFlipBound) {
  const GridGeometry g = square(21);
  OccupancyGrid grid(g);
  const Cell target{14, 10};
  grid.set(target, 3.5);
  Scan miss;
  miss.pose = at_center(g, Cell{10, 10});
  miss.max_range = 1.0;
  miss.rays.push_back(Ray{0.0, 1.0, false});

  double ref = 3.5;
  int first_not_occupied = -1;
  int first_free = -1;
  for (int k = 1; k <= 15; ++k) {
    apply_scan(grid, miss);
    ref = std::clamp(ref - 0.4, -2.0, 3.5);
    ASSERT_DOUBLE_EQ(grid.logodds(target), ref);
    if (first_not_occupied < 0 && !(ref > 0.5)) first_not_occupied = k;
    if (first_free < 0 && ref < -0.5) first_free = k;
    if (first_not_occupied == k) EXPECT_NE(grid.state(target), CellState::Occupied);
    if (first_free == k) EXPECT_EQ(grid.state(target), CellState::Free);
  }
  EXPECT_EQ(first_not_occupied, 8);
  EXPECT_EQ(first_free, 11);
}

TEST(ComputePhi, Examples) {
  GridGeometry g = square(10);
  std::vector<GtLabel> labels(100, GtLabel::Occupied);
  for (int i = 0; i < 50; ++i) labels[static_cast<std::size_t>(i)] = GtLabel::Free;
  const GroundTruthMap gt(g, labels);

  OccupancyGrid forty(g);
  for (int i = 0; i < 40; ++i) forty.set(g.cell_at(static_cast<std::size_t>(i)), -1.0);
  EXPECT_DOUBLE_EQ(compute_phi(forty, gt).phi, 80.0);

  OccupancyGrid same(g);
  for (int i = 0; i < 50; ++i) same.set(g.cell_at(static_cast<std::size_t>(i)), -1.0);
  EXPECT_DOUBLE_EQ(compute_phi(same, gt).phi, 100.0);

  OccupancyGrid over(g);
  for (int i = 0; i < 55; ++i) over.set(g.cell_at(static_cast<std::size_t>(i)), -1.0);
  const PhiReport r = compute_phi(over, gt);
  EXPECT_DOUBLE_EQ(r.phi, 110.0);
  EXPECT_EQ(r.explored_free, 55u);
  EXPECT_EQ(r.gt_free, 50u);
}

TEST(ComputePhi, Errors) {
  const GridGeometry g = square(4);
  const GroundTruthMap gt(g, std::vector<GtLabel>(16, GtLabel::Free));
  try {
    compute_phi(OccupancyGrid(square(5)), gt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::GridMismatch);
  }
  GridGeometry shifted = g;
  shifted.origin = Point2{0.05, 0.0};
  try {
    compute_phi(OccupancyGrid(shifted), gt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::GridMismatch);
  }
  try {
    const GroundTruthMap empty(g, std::vector<GtLabel>(16, GtLabel::Occupied));
    compute_phi(OccupancyGrid(g), empty);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyGroundTruth);
  }
}

TEST(ComputePhiProperty, MatchesCountAndDivide) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> dim(1, 64);
  std::uniform_real_distribution<double> p(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    GridGeometry g;
    g.width = dim(rng);
    g.height = dim(rng);
    g.resolution = 0.05 + p(rng);
    const OccupancyGrid grid = oracle::random_grid(g, rng, p(rng), p(rng) * 0.5);
    const GroundTruthMap gt = oracle::random_ground_truth(g, rng, 0.05 + 0.9 * p(rng));
    const double expect = oracle::phi_count_and_divide(grid.values(), gt.labels());
    ASSERT_NEAR(compute_phi(grid, gt).phi, expect, 1e-12);
  }
}

TEST(MergeGrids, Examples) {
  const GridGeometry g = square(6);
  std::mt19937_64 rng(3);
  const OccupancyGrid a = oracle::random_grid(g, rng);
  const std::vector<OccupancyGrid> one{a};
  EXPECT_EQ(merge_grids(one), a);

  OccupancyGrid x(g);
  OccupancyGrid y(g);
  x.set(Cell{2, 2}, 1.0);
  y.set(Cell{2, 2}, -1.0);
  const std::vector<OccupancyGrid> pair{x, y};
  const OccupancyGrid m = merge_grids(pair);
  EXPECT_DOUBLE_EQ(m.logodds(Cell{2, 2}), 0.0);
  EXPECT_EQ(m.state(Cell{2, 2}), CellState::Unknown);

  try {
    merge_grids(std::vector<OccupancyGrid>{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyList);
  }
  try {
    merge_grids(std::vector<OccupancyGrid>{OccupancyGrid(square(3)), OccupancyGrid(square(4))});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::GridMismatch);
  }
}

TEST(MergeGridsProperty, CellWiseSumAndCommutativity) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const GridGeometry g = square(12);
    OccupancyGrid a(g);
    OccupancyGrid b(g);
    for (std::size_t i = 0; i < g.cell_count(); ++i) {
      const double v = -2.0 + 5.5 * u(rng);
      // Disjoint supports: each cell observed by at most one grid.
      (u(rng) < 0.5 ? a : b).set(g.cell_at(i), u(rng) < 0.3 ? 0.0 : v);
    }
    const OccupancyGrid ab = merge_grids(std::vector<OccupancyGrid>{a, b});
    const OccupancyGrid ba = merge_grids(std::vector<OccupancyGrid>{b, a});
    ASSERT_EQ(ab, ba);
    for (std::size_t i = 0; i < g.cell_count(); ++i) {
      const double sum = std::clamp(a.logodds_at(i) + b.logodds_at(i), -2.0, 3.5);
      ASSERT_EQ(ab.logodds_at(i), sum);
    }
  }
}

TEST(ExportMap, PaletteExamples) {
  GridGeometry g;
  g.width = 2;
  g.height = 2;
  g.resolution = 0.1;
  OccupancyGrid grid(g);
  // Top row (row 1): Free, Unknown. Bottom row (row 0): Occupied, Free.
  grid.set(Cell{0, 1}, -1.0);
  grid.set(Cell{0, 0}, 1.0);
  grid.set(Cell{1, 0}, -1.0);
  const std::string bytes = export_map(grid);
  const std::string header = "P5\n2 2\n255\n";
  ASSERT_EQ(bytes.substr(0, header.size()), header);
  const std::string px = bytes.substr(header.size());
  ASSERT_EQ(px.size(), 4u);
  EXPECT_EQ(static_cast<unsigned char>(px[0]), 254);
  EXPECT_EQ(static_cast<unsigned char>(px[1]), 205);
  EXPECT_EQ(static_cast<unsigned char>(px[2]), 0);
  EXPECT_EQ(static_cast<unsigned char>(px[3]), 254);

  GridGeometry one;
  one.width = 1;
  one.height = 1;
  one.resolution = 1.0;
  const std::string single = export_map(OccupancyGrid(one));
  EXPECT_EQ(single, std::string("P5\n1 1\n255\n") + static_cast<char>(205));
}

TEST(ExportMapProperty, RoundTrip) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> dim(1, 40);
  for (int trial = 0; trial < 100; ++trial) {
    GridGeometry g;
    g.width = dim(rng);
    g.height = dim(rng);
    g.resolution = 0.1;
    const OccupancyGrid grid = oracle::random_grid(g, rng);
    const StateRaster r = parse_map(export_map(grid));
    ASSERT_EQ(r.width, g.width);
    ASSERT_EQ(r.height, g.height);
    for (std::size_t i = 0; i < g.cell_count(); ++i) ASSERT_EQ(r.states[i], grid.state_at(i));
  }
}
