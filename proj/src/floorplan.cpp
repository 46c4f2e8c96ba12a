#include "sitescout/floorplan.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>
#include <map>
#include <set>
#include <sstream>
#include <utility>

#include "sitescout/error.hpp"
#include "sitescout/gridmap.hpp"

namespace sitescout {

std::string_view to_string(OpeningKind k) { return k == OpeningKind::Door ? "door" : "passage"; }

std::string_view to_string(HingeSide h) {
  switch (h) {
    case HingeSide::Left: return "left";
    case HingeSide::Right: return "right";
    case HingeSide::None: return "none";
  }
  return "none";
}

std::string_view to_string(Actuation a) {
  switch (a) {
    case Actuation::Push: return "push";
    case Actuation::Pull: return "pull";
    case Actuation::None: return "none";
  }
  return "none";
}

GroundTruthMap::GroundTruthMap(GridGeometry geometry, std::vector<GtLabel> labels)
    : geometry_(geometry), labels_(std::move(labels)) {
  check_geometry(geometry_);
  if (labels_.size() != geometry_.cell_count()) {
    throw Error(ErrorCode::GridMismatch, "label count does not match grid size");
  }
  free_count_ = static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), GtLabel::Free));
}

// ---------------------------------------------------------------------------
// Mesh loading

namespace {

[[noreturn]] void parse_fail(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + what);
}

double parse_double(std::string_view tok, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v)) {
    parse_fail(line, "bad coordinate '" + std::string(tok) + "'");
  }
  return v;
}

long parse_index(std::string_view tok, std::size_t line) {
  // OBJ allows "i/t/n"; only the vertex index matters here.
  tok = tok.substr(0, tok.find('/'));
  long v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    parse_fail(line, "bad face index '" + std::string(tok) + "'");
  }
  return v;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

TriangleMesh load_mesh(std::string_view text) {
  struct RawFace {
    std::vector<long> idx;
    std::size_t line;
  };
  TriangleMesh mesh;
  std::vector<RawFace> faces;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto tok = split_ws(line);
    if (tok.empty()) {
      if (eol == text.size()) break;
      continue;
    }
    const std::string_view kind = tok[0];
    if (kind == "v") {
      if (tok.size() < 4) parse_fail(line_no, "vertex needs three coordinates");
      mesh.vertices.push_back(Vec3{parse_double(tok[1], line_no), parse_double(tok[2], line_no),
                                   parse_double(tok[3], line_no)});
    } else if (kind == "f") {
      if (tok.size() < 4) parse_fail(line_no, "face needs at least three indices");
      RawFace f{{}, line_no};
      for (std::size_t i = 1; i < tok.size(); ++i) {
        long idx = parse_index(tok[i], line_no);
        if (idx < 0) idx = static_cast<long>(mesh.vertices.size()) + idx + 1;  // relative index
        f.idx.push_back(idx);
      }
      faces.push_back(std::move(f));
    } else if (kind == "vn" || kind == "vt" || kind == "o" || kind == "g" || kind == "s" || kind == "usemtl" ||
               kind == "mtllib") {
      // not needed for slicing
    } else {
      parse_fail(line_no, "unknown record '" + std::string(kind) + "'");
    }
    if (eol == text.size()) break;
  }

  if (mesh.vertices.empty() || faces.empty()) {
    throw Error(ErrorCode::ParseError, "mesh has no vertices or no faces");
  }
  const long nv = static_cast<long>(mesh.vertices.size());
  for (const RawFace& f : faces) {
    for (long idx : f.idx) {
      if (idx < 1 || idx > nv) {
        throw Error(ErrorCode::IndexOutOfRange,
                    "line " + std::to_string(f.line) + ": vertex index " + std::to_string(idx) + " out of range");
      }
    }
    // Fan split; for a quad this is the first-diagonal rule.
    for (std::size_t k = 1; k + 1 < f.idx.size(); ++k) {
      mesh.triangles.push_back({static_cast<std::size_t>(f.idx[0] - 1), static_cast<std::size_t>(f.idx[k] - 1),
                                static_cast<std::size_t>(f.idx[k + 1] - 1)});
    }
  }
  return mesh;
}

// ---------------------------------------------------------------------------
// Slicing

namespace {

bool point_less(Point2 a, Point2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); }

Segment canonical(Segment s) {
  if (point_less(s.b, s.a)) std::swap(s.a, s.b);
  return s;
}

bool segment_less(const Segment& s, const Segment& t) {
  if (s.a != t.a) return point_less(s.a, t.a);
  return point_less(s.b, t.b);
}

// Joins collinear segments that meet end to end at a point shared by exactly
// two segments.
SegmentSet join_collinear(SegmentSet segs) {
  using Key = std::pair<double, double>;
  auto key = [](Point2 p) { return Key{p.x, p.y}; };
  std::vector<bool> alive(segs.size(), true);
  std::map<Key, std::vector<std::size_t>> incidence;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    incidence[key(segs[i].a)].push_back(i);
    incidence[key(segs[i].b)].push_back(i);
  }

  for (auto& [pt, list] : incidence) {
    std::vector<std::size_t> live;
    for (std::size_t i : list) {
      if (alive[i]) live.push_back(i);
    }
    if (live.size() != 2) continue;
    const Point2 p{pt.first, pt.second};
    const Segment& s1 = segs[live[0]];
    const Segment& s2 = segs[live[1]];
    const Point2 f1 = (s1.a == p) ? s1.b : s1.a;
    const Point2 f2 = (s2.a == p) ? s2.b : s2.a;
    const double ux = p.x - f1.x, uy = p.y - f1.y;
    const double vx = f2.x - p.x, vy = f2.y - p.y;
    const double cross = ux * vy - uy * vx;
    const double dot = ux * vx + uy * vy;
    const double scale = std::hypot(ux, uy) * std::hypot(vx, vy);
    if (dot <= 0.0 || std::abs(cross) > 1e-9 * scale) continue;

    alive[live[0]] = false;
    alive[live[1]] = false;
    const std::size_t merged = segs.size();
    segs.push_back(canonical(Segment{f1, f2}));
    alive.push_back(true);
    for (Point2 far : {f1, f2}) {
      auto& far_list = incidence[key(far)];
      for (std::size_t& idx : far_list) {
        if (idx == live[0] || idx == live[1]) idx = merged;
      }
    }
  }

  SegmentSet out;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    if (alive[i]) out.push_back(segs[i]);
  }
  std::sort(out.begin(), out.end(), segment_less);
  return out;
}

}  // namespace

SegmentSet slice_mesh(const TriangleMesh& mesh, double z) {
  SegmentSet raw;
  if (!std::isfinite(z)) return raw;

  auto add = [&](Point2 a, Point2 b) {
    if (a == b) return;
    raw.push_back(canonical(Segment{a, b}));
  };

  for (const auto& tri : mesh.triangles) {
    double d[3];
    for (int k = 0; k < 3; ++k) d[k] = mesh.vertices[tri[k]].z - z;

    if (d[0] == 0.0 && d[1] == 0.0 && d[2] == 0.0) {
      for (int k = 0; k < 3; ++k) {
        const Vec3& a = mesh.vertices[tri[k]];
        const Vec3& b = mesh.vertices[tri[(k + 1) % 3]];
        add(Point2{a.x, a.y}, Point2{b.x, b.y});
      }
      continue;
    }

    std::vector<Point2> pts;
    auto push_unique = [&](Point2 p) {
      if (std::find(pts.begin(), pts.end(), p) == pts.end()) pts.push_back(p);
    };
    for (int k = 0; k < 3; ++k) {
      if (d[k] == 0.0) push_unique(Point2{mesh.vertices[tri[k]].x, mesh.vertices[tri[k]].y});
    }
    for (int k = 0; k < 3; ++k) {
      std::size_t ia = tri[k];
      std::size_t ib = tri[(k + 1) % 3];
      double da = d[k];
      double db = d[(k + 1) % 3];
      if (!((da < 0.0 && db > 0.0) || (da > 0.0 && db < 0.0))) continue;
      // Interpolate in a fixed vertex order so both triangles sharing this
      // edge produce the same point bit for bit.
      if (ib < ia) {
        std::swap(ia, ib);
        std::swap(da, db);
      }
      const Vec3& a = mesh.vertices[ia];
      const Vec3& b = mesh.vertices[ib];
      const double t = da / (da - db);
      push_unique(Point2{a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)});
    }
    if (pts.size() == 2) add(pts[0], pts[1]);
  }

  std::sort(raw.begin(), raw.end(), segment_less);
  raw.erase(std::unique(raw.begin(), raw.end()), raw.end());
  return join_collinear(std::move(raw));
}

// ---------------------------------------------------------------------------
// Rasterization

OccupiedMask rasterize(std::span<const Segment> segments, double resolution, Bounds bounds) {
  if (!(resolution > 0.0)) throw Error(ErrorCode::InvalidScenario, "resolution must be positive");
  const double span_x = bounds.max.x - bounds.min.x;
  const double span_y = bounds.max.y - bounds.min.y;
  if (!(span_x > 0.0) || !(span_y > 0.0)) throw Error(ErrorCode::InvalidScenario, "degenerate bounds");

  OccupiedMask mask;
  mask.geometry.resolution = resolution;
  mask.geometry.origin = bounds.min;
  mask.geometry.width = std::max(1, static_cast<int>(std::ceil(span_x / resolution - 1e-9)));
  mask.geometry.height = std::max(1, static_cast<int>(std::ceil(span_y / resolution - 1e-9)));
  mask.occupied.assign(mask.geometry.cell_count(), 0);
  const GridGeometry& g = mask.geometry;

  for (const Segment& s : segments) {
    const double xlo = std::min(s.a.x, s.b.x);
    const double xhi = std::max(s.a.x, s.b.x);
    const int c0 = std::max(0, static_cast<int>(std::floor((xlo - g.origin.x) / resolution)) - 1);
    const int c1 = std::min(g.width - 1, static_cast<int>(std::floor((xhi - g.origin.x) / resolution)) + 1);
    for (int col = c0; col <= c1; ++col) {
      const double cx0 = std::max(g.col_edge(col), xlo);
      const double cx1 = std::min(g.col_edge(col + 1), xhi);
      if (cx0 > cx1) continue;
      double ylo = 0.0;
      double yhi = 0.0;
      if (s.a.x == s.b.x) {
        ylo = std::min(s.a.y, s.b.y);
        yhi = std::max(s.a.y, s.b.y);
      } else {
        const double slope = (s.b.y - s.a.y) / (s.b.x - s.a.x);
        const double y0 = s.a.y + (cx0 - s.a.x) * slope;
        const double y1 = s.a.y + (cx1 - s.a.x) * slope;
        ylo = std::min(y0, y1);
        yhi = std::max(y0, y1);
      }
      const int r0 = std::max(0, static_cast<int>(std::floor((ylo - g.origin.y) / resolution)) - 1);
      const int r1 = std::min(g.height - 1, static_cast<int>(std::floor((yhi - g.origin.y) / resolution)) + 1);
      for (int row = r0; row <= r1; ++row) {
        if (g.row_edge(row) <= yhi && g.row_edge(row + 1) >= ylo) {
          mask.occupied[g.index(Cell{col, row})] = 1;
        }
      }
    }
  }
  return mask;
}

// ---------------------------------------------------------------------------
// Free-space flood fill

GroundTruthMap flood_free(const OccupiedMask& mask, Point2 seed) {
  const GridGeometry& g = mask.geometry;
  const auto start = g.locate(seed);
  if (!start) throw Error(ErrorCode::SeedOutOfBounds, "flood seed lies outside the map");
  if (mask.at(*start)) throw Error(ErrorCode::SeedOnOccupied, "flood seed lies on an occupied cell");

  std::vector<GtLabel> labels(g.cell_count(), GtLabel::Outside);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (mask.occupied[i]) labels[i] = GtLabel::Occupied;
  }
  std::deque<Cell> queue{*start};
  labels[g.index(*start)] = GtLabel::Free;
  while (!queue.empty()) {
    const Cell c = queue.front();
    queue.pop_front();
    for (const auto& off : kNeighborOffsets8) {
      const Cell n{c.col + off[0], c.row + off[1]};
      if (!g.contains(n)) continue;
      GtLabel& l = labels[g.index(n)];
      if (l != GtLabel::Outside) continue;
      l = GtLabel::Free;
      queue.push_back(n);
    }
  }
  return GroundTruthMap(g, std::move(labels));
}

GroundTruthMap attach_openings(GroundTruthMap map, std::vector<Opening> annotations) {
  std::set<std::string> seen;
  for (const Opening& o : map.openings()) seen.insert(o.id);
  for (const Opening& o : annotations) {
    if (!seen.insert(o.id).second) throw Error(ErrorCode::DuplicateId, "opening id '" + o.id + "' repeated");
  }

  const GridGeometry& g = map.geometry();
  std::vector<std::string> off_wall;
  for (const Opening& o : annotations) {
    const auto c = g.locate(o.center);
    bool near_wall = false;
    if (c) {
      for (int dr = -2; dr <= 2 && !near_wall; ++dr) {
        for (int dc = -2; dc <= 2 && !near_wall; ++dc) {
          const Cell n{c->col + dc, c->row + dr};
          near_wall = g.contains(n) && map.label(n) == GtLabel::Occupied;
        }
      }
    }
    if (!near_wall) off_wall.push_back(o.id);
  }
  if (!off_wall.empty()) {
    std::string ids;
    for (const auto& id : off_wall) ids += (ids.empty() ? "" : ", ") + id;
    throw Error(ErrorCode::OpeningOffWall, "opening(s) not within 2 cells of a wall: " + ids);
  }

  std::vector<Opening> all = map.openings();
  all.insert(all.end(), std::make_move_iterator(annotations.begin()), std::make_move_iterator(annotations.end()));
  map.set_openings(std::move(all));
  return map;
}

std::string export_groundtruth(const GroundTruthMap& gt) {
  const GridGeometry& g = gt.geometry();
  std::string out = "P5\n" + std::to_string(g.width) + " " + std::to_string(g.height) + "\n255\n";
  for (int row = g.height - 1; row >= 0; --row) {
    for (int col = 0; col < g.width; ++col) {
      const GtLabel l = gt.label(Cell{col, row});
      const std::uint8_t v = l == GtLabel::Free ? kPgmFree : l == GtLabel::Occupied ? kPgmOccupied : kPgmUnknown;
      out.push_back(static_cast<char>(v));
    }
  }
  return out;
}

OccupiedMask mask_from_rows(std::span<const std::string> rows, double resolution, Point2 origin) {
  if (rows.empty()) throw Error(ErrorCode::InvalidScenario, "raster has no rows");
  std::size_t width = 0;
  for (const auto& r : rows) width = std::max(width, r.size());
  if (width == 0) throw Error(ErrorCode::InvalidScenario, "raster rows are empty");

  OccupiedMask mask;
  mask.geometry = GridGeometry{static_cast<int>(width), static_cast<int>(rows.size()), resolution, origin};
  check_geometry(mask.geometry);
  mask.occupied.assign(mask.geometry.cell_count(), 0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const int row = static_cast<int>(rows.size() - 1 - i);
    for (std::size_t col = 0; col < rows[i].size(); ++col) {
      if (rows[i][col] == '#') mask.occupied[mask.geometry.index(Cell{static_cast<int>(col), row})] = 1;
    }
  }
  return mask;
}

}  // namespace sitescout
