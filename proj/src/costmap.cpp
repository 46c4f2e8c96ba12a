#include "sitescout/costmap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sitescout/gridmap.hpp"

namespace sitescout {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1D squared distance transform of a sampled function (lower envelope of
// parabolas), Felzenszwalb & Huttenlocher.
void dt_1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& v, std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  int k = 0;
  int first = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] < kInf) {
      first = q;
      break;
    }
  }
  if (first < 0) {
    std::fill(d.begin(), d.end(), kInf);
    return;
  }
  v[0] = first;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = first + 1; q < n; ++q) {
    if (f[q] == kInf) continue;
    double s = 0.0;
    while (true) {
      const int p = v[k];
      s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * q - 2.0 * p);
      if (s <= z[k] && k > 0) {
        --k;
        continue;
      }
      break;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    d[q] = dq * dq + f[v[k]];
  }
}

}  // namespace

std::vector<double> squared_distance_transform(const GridGeometry& g, std::span<const std::uint8_t> seeds) {
  const int w = g.width;
  const int h = g.height;
  std::vector<double> out(g.cell_count(), kInf);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (seeds[i]) out[i] = 0.0;
  }

  const int n = std::max(w, h);
  std::vector<double> f(n), d(n), z(n + 1);
  std::vector<int> v(n);

  // columns
  f.resize(h);
  d.resize(h);
  for (int col = 0; col < w; ++col) {
    for (int row = 0; row < h; ++row) f[row] = out[g.index(Cell{col, row})];
    dt_1d(f, d, v, z);
    for (int row = 0; row < h; ++row) out[g.index(Cell{col, row})] = d[row];
  }
  // rows
  f.resize(w);
  d.resize(w);
  for (int row = 0; row < h; ++row) {
    for (int col = 0; col < w; ++col) f[col] = out[g.index(Cell{col, row})];
    dt_1d(f, d, v, z);
    for (int col = 0; col < w; ++col) out[g.index(Cell{col, row})] = d[col];
  }
  return out;
}

Costmap build_costmap(const OccupancyGrid& grid, double inflation_radius) {
  const GridGeometry& g = grid.geometry();
  Costmap cm;
  cm.geometry = g;
  cm.inflation_radius = inflation_radius;
  cm.cost.assign(g.cell_count(), 0);

  std::vector<std::uint8_t> lethal(g.cell_count(), 0);
  bool any = false;
  for (std::size_t i = 0; i < lethal.size(); ++i) {
    if (grid.state_at(i) != CellState::Free) {
      lethal[i] = 1;
      cm.cost[i] = kLethal;
      any = true;
    }
  }
  if (!any || !(inflation_radius > 0.0)) return cm;

  const auto sq = squared_distance_transform(g, lethal);
  for (std::size_t i = 0; i < sq.size(); ++i) {
    if (lethal[i] || sq[i] == kInf) continue;
    const double d = std::max(0.0, (std::sqrt(sq[i]) - 0.5) * g.resolution);
    if (d < inflation_radius) {
      const double c = std::floor(kLethal * (1.0 - d / inflation_radius));
      cm.cost[i] = static_cast<std::uint8_t>(std::min(c, double(kLethal - 1)));
    }
  }
  return cm;
}

Costmap Costmap::with_lethal(std::span<const Cell> cells) const {
  Costmap out = *this;
  for (const Cell& c : cells) {
    if (geometry.contains(c)) out.cost[geometry.index(c)] = kLethal;
  }
  return out;
}

}  // namespace sitescout
