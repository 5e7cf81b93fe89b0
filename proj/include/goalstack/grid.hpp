// Copyright 2026 The goalstack Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef GOALSTACK__GRID_HPP_
#define GOALSTACK__GRID_HPP_

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "goalstack/common.hpp"
#include "goalstack/geometry.hpp"

namespace goalstack
{

/// Dense real matrix: rows are tokens/queries/cells, columns are channels.
using FeatureMat = Eigen::MatrixXd;

/// Geometry of an axis-aligned BEV raster. Cell (ix, iy) covers
/// [x_min + ix*dx, x_min + (ix+1)*dx) x [y_min + iy*dy, y_min + (iy+1)*dy).
/// Flattened cell index is iy * width + ix.
struct GridSpec
{
  int height = 200;
  int width = 200;
  double x_min = -51.2;
  double x_max = 51.2;
  double y_min = -51.2;
  double y_max = 51.2;

  double cell_dx() const { return (x_max - x_min) / width; }
  double cell_dy() const { return (y_max - y_min) / height; }
  int cells() const { return height * width; }

  /// Same cell size and shape, translated so that (cx, cy) is the extent center.
  GridSpec centered_at(double cx, double cy) const
  {
    GridSpec g = *this;
    const double hx = 0.5 * (x_max - x_min);
    const double hy = 0.5 * (y_max - y_min);
    g.x_min = cx - hx;
    g.x_max = cx + hx;
    g.y_min = cy - hy;
    g.y_max = cy + hy;
    return g;
  }

  /// Integer downscale; cell size grows by `factor`.
  GridSpec downscaled(int factor) const
  {
    GridSpec g = *this;
    g.height = height / factor;
    g.width = width / factor;
    return g;
  }

  bool operator==(const GridSpec &) const = default;
};

inline bool grid_spec_valid(const GridSpec & g)
{
  return g.height > 0 && g.width > 0 && g.x_max > g.x_min && g.y_max > g.y_min;
}

/// Fractional cell coordinates; integer values are cell centers, the grid corner
/// sits at (-0.5, -0.5).
struct CellCoord
{
  double ix = 0.0;
  double iy = 0.0;
};

inline CellCoord world_to_cell(const GridSpec & g, const Vec2 & p)
{
  return {(p.x() - g.x_min) / g.cell_dx() - 0.5, (p.y() - g.y_min) / g.cell_dy() - 0.5};
}

inline Vec2 cell_to_world(const GridSpec & g, const CellCoord & c)
{
  return {g.x_min + (c.ix + 0.5) * g.cell_dx(), g.y_min + (c.iy + 0.5) * g.cell_dy()};
}

inline Vec2 cell_center(const GridSpec & g, int ix, int iy)
{
  return cell_to_world(g, {static_cast<double>(ix), static_cast<double>(iy)});
}

/// H x W x C real raster stored as a (H*W) x C matrix.
struct BevGrid
{
  GridSpec spec;
  FeatureMat data;

  BevGrid() = default;
  BevGrid(const GridSpec & s, int channels) : spec(s), data(FeatureMat::Zero(s.cells(), channels)) {}

  int channels() const { return static_cast<int>(data.cols()); }
  auto cell(int ix, int iy) { return data.row(static_cast<Eigen::Index>(iy) * spec.width + ix); }
  auto cell(int ix, int iy) const
  {
    return data.row(static_cast<Eigen::Index>(iy) * spec.width + ix);
  }
};

/// Integer label raster (instance ids, class ids); 0 means free.
struct LabelGrid
{
  GridSpec spec;
  std::vector<std::int32_t> labels;

  LabelGrid() = default;
  explicit LabelGrid(const GridSpec & s) : spec(s), labels(static_cast<std::size_t>(s.cells()), 0) {}

  std::int32_t & at(int ix, int iy) { return labels[static_cast<std::size_t>(iy) * spec.width + ix]; }
  std::int32_t at(int ix, int iy) const
  {
    return labels[static_cast<std::size_t>(iy) * spec.width + ix];
  }

  bool operator==(const LabelGrid &) const = default;
};

/// Binary raster.
using MaskGrid = LabelGrid;

/// Inclusive index window of cells whose centers may fall inside a circle/box of
/// radius `r` around `p`, clipped to the grid.
struct CellWindow
{
  int ix0, ix1, iy0, iy1;
};

inline CellWindow cell_window(const GridSpec & g, const Vec2 & p, double r)
{
  const CellCoord lo = world_to_cell(g, p - Vec2(r, r));
  const CellCoord hi = world_to_cell(g, p + Vec2(r, r));
  return {
    std::max(0, static_cast<int>(std::floor(lo.ix))),
    std::min(g.width - 1, static_cast<int>(std::ceil(hi.ix))),
    std::max(0, static_cast<int>(std::floor(lo.iy))),
    std::min(g.height - 1, static_cast<int>(std::ceil(hi.iy)))};
}

/// Label every cell whose center lies inside a box with that box's id. Boxes are
/// painted in list order, so on overlap the later entry wins.
inline LabelGrid rasterize_boxes(
  const GridSpec & g, const std::vector<Box2d> & boxes, const std::vector<std::int32_t> & ids)
{
  require(boxes.size() == ids.size(), "bev-scene", "rasterize_boxes", "boxes/ids size mismatch");
  LabelGrid out(g);
  for (std::size_t k = 0; k < boxes.size(); ++k) {
    require(ids[k] > 0, "bev-scene", "rasterize_boxes", "ids must be positive");
    const Box2d & b = boxes[k];
    const CellWindow win = cell_window(g, b.center(), 0.5 * std::hypot(b.w, b.l));
    for (int iy = win.iy0; iy <= win.iy1; ++iy) {
      for (int ix = win.ix0; ix <= win.ix1; ++ix) {
        if (box_contains_half_open(b, cell_center(g, ix, iy))) {
          out.at(ix, iy) = ids[k];
        }
      }
    }
  }
  return out;
}

inline double point_segment_distance(const Vec2 & p, const Vec2 & a, const Vec2 & b)
{
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

using Polyline = std::vector<Vec2>;

/// Mark cells whose center lies within `half_width` of any polyline segment.
inline void paint_polylines(
  MaskGrid & out, const std::vector<Polyline> & lines, double half_width, std::int32_t value = 1)
{
  const GridSpec & g = out.spec;
  for (const auto & line : lines) {
    for (std::size_t s = 0; s + 1 < line.size(); ++s) {
      const Vec2 mid = 0.5 * (line[s] + line[s + 1]);
      const double r = 0.5 * (line[s + 1] - line[s]).norm() + half_width;
      const CellWindow win = cell_window(g, mid, r);
      for (int iy = win.iy0; iy <= win.iy1; ++iy) {
        for (int ix = win.ix0; ix <= win.ix1; ++ix) {
          if (point_segment_distance(cell_center(g, ix, iy), line[s], line[s + 1]) <= half_width) {
            out.at(ix, iy) = value;
          }
        }
      }
    }
  }
}

/// Keep only the cells whose centers fall in the axis-aligned square of side
/// `side` around (cx, cy); the rest become free.
inline LabelGrid crop_square(const LabelGrid & in, double cx, double cy, double side)
{
  LabelGrid out(in.spec);
  const double h = 0.5 * side;
  for (int iy = 0; iy < in.spec.height; ++iy) {
    for (int ix = 0; ix < in.spec.width; ++ix) {
      const Vec2 c = cell_center(in.spec, ix, iy);
      if (std::abs(c.x() - cx) <= h && std::abs(c.y() - cy) <= h) {
        out.at(ix, iy) = in.at(ix, iy);
      }
    }
  }
  return out;
}

}  // namespace goalstack

#endif  // GOALSTACK__GRID_HPP_
