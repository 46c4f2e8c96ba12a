#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sitescout/geometry.hpp"

namespace sitescout {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::size_t, 3>> triangles;  // 0-based
};

struct Segment {
  Point2 a;
  Point2 b;

  friend bool operator==(const Segment&, const Segment&) = default;
};

using SegmentSet = std::vector<Segment>;

struct Bounds {
  Point2 min;
  Point2 max;
};

// Occupied/clear raster produced by rasterize().
struct OccupiedMask {
  GridGeometry geometry;
  std::vector<std::uint8_t> occupied;  // 1 = occupied, row-major

  bool at(Cell c) const { return occupied[geometry.index(c)] != 0; }
};

enum class GtLabel : std::uint8_t { Outside, Free, Occupied };

enum class OpeningKind : std::uint8_t { Door, Passage };
enum class HingeSide : std::uint8_t { None, Left, Right };
enum class Actuation : std::uint8_t { None, Push, Pull };

std::string_view to_string(OpeningKind k);
std::string_view to_string(HingeSide h);
std::string_view to_string(Actuation a);

struct Opening {
  std::string id;
  Point2 center;
  OpeningKind kind = OpeningKind::Door;
  HingeSide hinge_side = HingeSide::None;
  Actuation actuation = Actuation::None;
};

class GroundTruthMap {
 public:
  GroundTruthMap(GridGeometry geometry, std::vector<GtLabel> labels);

  const GridGeometry& geometry() const { return geometry_; }
  GtLabel label(Cell c) const { return labels_[geometry_.index(c)]; }
  GtLabel label_at(std::size_t i) const { return labels_[i]; }
  bool is_free(Cell c) const { return label(c) == GtLabel::Free; }
  std::span<const GtLabel> labels() const { return labels_; }
  std::size_t free_count() const { return free_count_; }

  const std::vector<Opening>& openings() const { return openings_; }
  void set_openings(std::vector<Opening> openings) { openings_ = std::move(openings); }

  friend bool operator==(const GroundTruthMap& a, const GroundTruthMap& b) {
    return a.geometry_ == b.geometry_ && a.labels_ == b.labels_;
  }

 private:
  GridGeometry geometry_;
  std::vector<GtLabel> labels_;
  std::size_t free_count_ = 0;
  std::vector<Opening> openings_;
};

// ASCII mesh: `v x y z` and `f i j k [l]` records with 1-based indices.
// `#` starts a comment; common OBJ records (vn, vt, o, g, s, usemtl, mtllib)
// are ignored and face indices may use the `i/t/n` form. Quads are split
// along the first diagonal (i,j,k)+(i,k,l).
TriangleMesh load_mesh(std::string_view text);

// Intersection of the mesh with the horizontal plane at height z, projected
// to (x, y). Collinear pieces that meet end to end are joined, so a box
// sliced through its side faces yields its four outline edges.
SegmentSet slice_mesh(const TriangleMesh& mesh, double z);

// Marks every cell whose closed square touches a segment.
OccupiedMask rasterize(std::span<const Segment> segments, double resolution, Bounds bounds);

// Cells 8-connected to the seed without crossing occupied cells become Free.
GroundTruthMap flood_free(const OccupiedMask& mask, Point2 seed);

// Openings farther than 2 cells (Chebyshev) from every Occupied cell are
// rejected with OpeningOffWall; repeated ids with DuplicateId.
GroundTruthMap attach_openings(GroundTruthMap map, std::vector<Opening> annotations);

// Graymap of the ground truth: Free 254, Occupied 0, Outside 205.
std::string export_groundtruth(const GroundTruthMap& gt);

// Mask from text rows (first row is the top of the map); '#' is occupied,
// anything else clear.
OccupiedMask mask_from_rows(std::span<const std::string> rows, double resolution, Point2 origin);

}  // namespace sitescout
