#include <gtest/gtest.h>

#include <cmath>
#include <deque>
#include <random>

#include "oracles.hpp"
#include "sitescout/error.hpp"
#include "sitescout/floorplan.hpp"

using namespace sitescout;

namespace {

const char* kUnitCube = R"(# unit cube
v 0 0 0
v 1 0 0
v 1 1 0
v 0 1 0
v 0 0 1
v 1 0 1
v 1 1 1
v 0 1 1
f 1 3 2
f 1 4 3
f 5 6 7
f 5 7 8
f 1 2 6
f 1 6 5
f 2 3 7
f 2 7 6
f 3 4 8
f 3 8 7
f 4 1 5
f 4 5 8
)";

bool same_segment(const Segment& s, const Segment& t, double tol) {
  auto close = [&](Point2 p, Point2 q) { return distance(p, q) <= tol; };
  return (close(s.a, t.a) && close(s.b, t.b)) || (close(s.a, t.b) && close(s.b, t.a));
}

bool same_set(const SegmentSet& x, const SegmentSet& y, double tol) {
  if (x.size() != y.size()) return false;
  std::vector<bool> used(y.size(), false);
  for (const Segment& s : x) {
    bool found = false;
    for (std::size_t i = 0; i < y.size() && !found; ++i) {
      if (!used[i] && same_segment(s, y[i], tol)) found = used[i] = true;
    }
    if (!found) return false;
  }
  return true;
}

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::InvalidScenario;
}

OccupiedMask ring_mask() {
  const SegmentSet square{{{0, 0}, {1, 0}}, {{1, 0}, {1, 1}}, {{1, 1}, {0, 1}}, {{0, 1}, {0, 0}}};
  return rasterize(square, 0.25, Bounds{{0, 0}, {1, 1}});
}

}  // namespace

TEST(LoadMesh, UnitCube) {
  const TriangleMesh m = load_mesh(kUnitCube);
  EXPECT_EQ(m.vertices.size(), 8u);
  EXPECT_EQ(m.triangles.size(), 12u);
}

TEST(LoadMesh, EmptyFileIsParseError) { EXPECT_EQ(code_of([] { load_mesh(""); }), ErrorCode::ParseError); }

TEST(LoadMesh, QuadSplitsIntoTwoTriangles) {
  const TriangleMesh m = load_mesh("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n");
  ASSERT_EQ(m.triangles.size(), 2u);
  EXPECT_EQ(m.triangles[0], (std::array<std::size_t, 3>{0, 1, 2}));
  EXPECT_EQ(m.triangles[1], (std::array<std::size_t, 3>{0, 2, 3}));
}

TEST(LoadMesh, IndexOutOfRangeAndBadRecords) {
  EXPECT_EQ(code_of([] { load_mesh("v 0 0 0\nv 1 0 0\nf 1 2 3\n"); }), ErrorCode::IndexOutOfRange);
  EXPECT_EQ(code_of([] { load_mesh("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n"); }), ErrorCode::IndexOutOfRange);
  EXPECT_EQ(code_of([] { load_mesh("v 0 zero 0\n"); }), ErrorCode::ParseError);
  try {
    load_mesh("v 0 0 0\nv 1 0 0\nv 0 1 0\nbogus 1 2\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
  }
}

TEST(SliceMesh, UnitCubeMidHeightIsSquareOutline) {
  const SegmentSet s = slice_mesh(load_mesh(kUnitCube), 0.5);
  const SegmentSet expect{{{0, 0}, {1, 0}}, {{1, 0}, {1, 1}}, {{1, 1}, {0, 1}}, {{0, 1}, {0, 0}}};
  EXPECT_TRUE(same_set(s, expect, 1e-12)) << s.size() << " segments";
}

TEST(SliceMesh, AboveCubeIsEmpty) { EXPECT_TRUE(slice_mesh(load_mesh(kUnitCube), 2.0).empty()); }

TEST(SliceMesh, SingleTriangleEdgeInterpolation) {
  const TriangleMesh m = load_mesh("v 0 0 0\nv 1 0 0\nv 0 0 1\nf 1 2 3\n");
  const SegmentSet s = slice_mesh(m, 0.5);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_TRUE(same_segment(s[0], Segment{{0, 0}, {0.5, 0}}, 1e-12));
}

TEST(SliceMesh, VertexTouchContributesNothing) {
  const TriangleMesh m = load_mesh("v 0 0 0\nv 1 0 0\nv 0 1 1\nf 1 2 3\n");
  EXPECT_TRUE(slice_mesh(m, 1.0).empty());
}

TEST(SliceMesh, CoplanarTriangleContributesEdges) {
  const TriangleMesh m = load_mesh("v 0 0 1\nv 2 0 1\nv 0 2 1\nf 1 2 3\n");
  const SegmentSet s = slice_mesh(m, 1.0);
  const SegmentSet expect{{{0, 0}, {2, 0}}, {{2, 0}, {0, 2}}, {{0, 2}, {0, 0}}};
  EXPECT_TRUE(same_set(s, expect, 1e-12));
}

TEST(SliceMeshProperty, MirrorSymmetry) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const double z0 = 0.75;
  for (int trial = 0; trial < 200; ++trial) {
    TriangleMesh m;
    TriangleMesh mirrored;
    const int tris = 1 + trial % 6;
    for (int t = 0; t < tris; ++t) {
      for (int k = 0; k < 3; ++k) {
        const Vec3 v{u(rng), u(rng), z0 + u(rng) / 3.0};
        m.vertices.push_back(v);
        mirrored.vertices.push_back(Vec3{v.x, v.y, 2 * z0 - v.z});
      }
      const std::size_t b = static_cast<std::size_t>(3 * t);
      m.triangles.push_back({b, b + 1, b + 2});
      mirrored.triangles.push_back({b, b + 1, b + 2});
    }
    const SegmentSet a = slice_mesh(m, z0);
    const SegmentSet b = slice_mesh(mirrored, z0);
    ASSERT_TRUE(same_set(a, b, 1e-9)) << "trial " << trial << ": " << a.size() << " vs " << b.size();
  }
}

TEST(Rasterize, UnitSquareRing) {
  const OccupiedMask mask = ring_mask();
  ASSERT_EQ(mask.geometry.width, 4);
  ASSERT_EQ(mask.geometry.height, 4);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      const bool interior = c >= 1 && c <= 2 && r >= 1 && r <= 2;
      EXPECT_EQ(mask.at(Cell{c, r}), !interior) << c << "," << r;
    }
  }
}

TEST(Rasterize, EmptySegmentSetIsClear) {
  const OccupiedMask mask = rasterize({}, 0.1, Bounds{{0, 0}, {1, 1}});
  for (auto v : mask.occupied) EXPECT_EQ(v, 0);
}

TEST(Rasterize, AlignedHorizontalSegmentMatchesBoxOracle) {
  const SegmentSet seg{{{0.5, 1.0}, {1.5, 1.0}}};
  const OccupiedMask mask = rasterize(seg, 0.5, Bounds{{0, 0}, {2, 2}});
  const GridGeometry& g = mask.geometry;
  std::size_t count = 0;
  for (std::size_t i = 0; i < g.cell_count(); ++i) {
    const Cell c = g.cell_at(i);
    const Point2 lo{g.col_edge(c.col), g.row_edge(c.row)};
    const Point2 hi{g.col_edge(c.col + 1), g.row_edge(c.row + 1)};
    EXPECT_EQ(mask.at(c), oracle::segment_meets_box(seg[0].a, seg[0].b, lo, hi)) << c.col << "," << c.row;
    count += mask.at(c);
  }
  // Cols 0..3 on both rows that share the edge y = 1; the endpoints touch
  // the edges of cols 0 and 3.
  EXPECT_EQ(count, 8u);
}

// Exact agreement with Liang-Barsky, every point sample lands on a marked
// cell, and the marked cells form one 8-connected chain.
TEST(RasterizeProperty, SupercoverAgainstOracles) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.05, 3.95);
  for (int trial = 0; trial < 300; ++trial) {
    const Segment s{{u(rng), u(rng)}, {u(rng), u(rng)}};
    const OccupiedMask mask = rasterize(SegmentSet{s}, 0.1, Bounds{{0, 0}, {4, 4}});
    const GridGeometry& g = mask.geometry;
    std::set<Cell> marked;
    for (std::size_t i = 0; i < g.cell_count(); ++i) {
      const Cell c = g.cell_at(i);
      const Point2 lo{g.col_edge(c.col), g.row_edge(c.row)};
      const Point2 hi{g.col_edge(c.col + 1), g.row_edge(c.row + 1)};
      ASSERT_EQ(mask.at(c), oracle::segment_meets_box(s.a, s.b, lo, hi)) << "trial " << trial;
      if (mask.at(c)) marked.insert(c);
    }
    const double len = distance(s.a, s.b);
    const int samples = std::max(1, static_cast<int>(std::ceil(len / g.resolution * 100)));
    for (int k = 0; k <= samples; ++k) {
      const double t = static_cast<double>(k) / samples;
      const Point2 p{s.a.x + t * (s.b.x - s.a.x), s.a.y + t * (s.b.y - s.a.y)};
      ASSERT_TRUE(marked.count(g.to_cell(p))) << "trial " << trial << " sample " << k;
    }
    ASSERT_EQ(oracle::clusters(marked, 1).size(), 1u) << "trial " << trial;
  }
}

TEST(FloodFree, RingWithSeedAtCenter) {
  const SegmentSet square{{{0.5, 0.5}, {1.5, 0.5}}, {{1.5, 0.5}, {1.5, 1.5}}, {{1.5, 1.5}, {0.5, 1.5}}, {{0.5, 1.5}, {0.5, 0.5}}};
  const OccupiedMask mask = rasterize(square, 0.25, Bounds{{0, 0}, {2, 2}});
  const GroundTruthMap gt = flood_free(mask, Point2{1.0, 1.0});
  const GridGeometry& g = gt.geometry();
  for (std::size_t i = 0; i < g.cell_count(); ++i) {
    const Cell c = g.cell_at(i);
    const bool interior = c.col >= 3 && c.col <= 4 && c.row >= 3 && c.row <= 4;
    const GtLabel expect = mask.at(c) ? GtLabel::Occupied : interior ? GtLabel::Free : GtLabel::Outside;
    EXPECT_EQ(gt.label(c), expect) << c.col << "," << c.row;
  }
  EXPECT_EQ(gt.free_count(), 4u);
}

TEST(FloodFree, SeedErrors) {
  const OccupiedMask mask = ring_mask();
  EXPECT_EQ(code_of([&] { flood_free(mask, Point2{0.1, 0.1}); }), ErrorCode::SeedOnOccupied);
  EXPECT_EQ(code_of([&] { flood_free(mask, Point2{5.0, 0.5}); }), ErrorCode::SeedOutOfBounds);
}

// Two walled rooms: BFS oracle confirms only the seeded room is Free, and
// the three labels partition the grid.
TEST(FloodFree, TwoWalledRoomsMatchesBfs) {
  const std::vector<std::string> rows{
      "###########",
      "#....#....#",
      "#....#....#",
      "#....#....#",
      "###########",
  };
  const OccupiedMask mask = mask_from_rows(rows, 0.1, Point2{0, 0});
  const GroundTruthMap gt = flood_free(mask, Point2{0.25, 0.25});
  const GridGeometry& g = gt.geometry();

  std::vector<bool> seen(g.cell_count(), false);
  std::deque<Cell> q{g.to_cell(Point2{0.25, 0.25})};
  seen[g.index(q.front())] = true;
  while (!q.empty()) {
    const Cell c = q.front();
    q.pop_front();
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        const Cell n{c.col + dc, c.row + dr};
        if (!g.contains(n) || seen[g.index(n)] || mask.at(n)) continue;
        seen[g.index(n)] = true;
        q.push_back(n);
      }
    }
  }
  std::size_t free = 0, occ = 0, outside = 0;
  for (std::size_t i = 0; i < g.cell_count(); ++i) {
    const Cell c = g.cell_at(i);
    const GtLabel expect = mask.at(c) ? GtLabel::Occupied : seen[i] ? GtLabel::Free : GtLabel::Outside;
    ASSERT_EQ(gt.label(c), expect);
    free += expect == GtLabel::Free;
    occ += expect == GtLabel::Occupied;
    outside += expect == GtLabel::Outside;
  }
  EXPECT_EQ(free, 12u);
  EXPECT_EQ(outside, 12u);
  EXPECT_EQ(free + occ + outside, g.cell_count());
}

TEST(FloodFreeProperty, DeterministicPartition) {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    SegmentSet segs;
    for (int k = 0; k < 6; ++k) segs.push_back(Segment{{4 * u(rng), 4 * u(rng)}, {4 * u(rng), 4 * u(rng)}});
    const OccupiedMask mask = rasterize(segs, 0.1, Bounds{{0, 0}, {4, 4}});
    Point2 seed;
    bool found = false;
    for (std::size_t i = 0; i < mask.geometry.cell_count() && !found; ++i) {
      if (!mask.occupied[i]) {
        seed = mask.geometry.center(mask.geometry.cell_at(i));
        found = true;
      }
    }
    ASSERT_TRUE(found);
    const GroundTruthMap a = flood_free(mask, seed);
    const GroundTruthMap b = flood_free(mask, seed);
    ASSERT_TRUE(a == b);
    for (std::size_t i = 0; i < mask.geometry.cell_count(); ++i) {
      ASSERT_EQ(a.label_at(i) == GtLabel::Occupied, mask.occupied[i] != 0);
    }
    std::set<Cell> free;
    for (std::size_t i = 0; i < mask.geometry.cell_count(); ++i) {
      if (a.label_at(i) == GtLabel::Free) free.insert(mask.geometry.cell_at(i));
    }
    ASSERT_GE(free.size(), 1u);
    ASSERT_EQ(oracle::clusters(free, 1).size(), 1u);
  }
}

TEST(AttachOpenings, DoorInWallGapIsStored) {
  const std::vector<std::string> rows{
      "###########",
      "#....#....#",
      "#.........#",
      "#....#....#",
      "###########",
  };
  const GroundTruthMap gt = flood_free(mask_from_rows(rows, 0.1, Point2{0, 0}), Point2{0.25, 0.25});
  Opening door;
  door.id = "d1";
  door.center = Point2{0.55, 0.25};
  door.kind = OpeningKind::Door;
  door.hinge_side = HingeSide::Left;
  door.actuation = Actuation::Pull;
  const GroundTruthMap with = attach_openings(gt, {door});
  ASSERT_EQ(with.openings().size(), 1u);
  EXPECT_EQ(with.openings()[0].kind, OpeningKind::Door);
  EXPECT_EQ(with.openings()[0].hinge_side, HingeSide::Left);
  EXPECT_EQ(with.openings()[0].actuation, Actuation::Pull);
}

TEST(AttachOpenings, OffWallAndDuplicate) {
  std::vector<std::string> rows(15, "#" + std::string(13, '.') + "#");
  rows.front() = rows.back() = std::string(15, '#');
  const GroundTruthMap gt = flood_free(mask_from_rows(rows, 0.1, Point2{0, 0}), Point2{0.75, 0.75});
  Opening open_space{"o1", Point2{0.75, 0.75}, OpeningKind::Passage, HingeSide::None, Actuation::None};
  EXPECT_EQ(code_of([&] { attach_openings(gt, {open_space}); }), ErrorCode::OpeningOffWall);
  Opening a{"dup", Point2{0.15, 0.75}, OpeningKind::Door, HingeSide::None, Actuation::None};
  Opening b{"dup", Point2{1.35, 0.75}, OpeningKind::Door, HingeSide::None, Actuation::None};
  EXPECT_EQ(code_of([&] { attach_openings(gt, {a, b}); }), ErrorCode::DuplicateId);
}

TEST(ExportGroundTruth, Palette) {
  const std::vector<std::string> rows{"#.", " #"};
  const GroundTruthMap gt = oracle::gt_from_rows(rows);
  const std::string bytes = export_groundtruth(gt);
  const std::string px = bytes.substr(std::string("P5\n2 2\n255\n").size());
  ASSERT_EQ(px.size(), 4u);
  EXPECT_EQ(static_cast<unsigned char>(px[0]), 0);
  EXPECT_EQ(static_cast<unsigned char>(px[1]), 254);
  EXPECT_EQ(static_cast<unsigned char>(px[2]), 205);
  EXPECT_EQ(static_cast<unsigned char>(px[3]), 0);
}
