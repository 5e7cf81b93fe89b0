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

#ifndef GOALSTACK__GEOMETRY_HPP_
#define GOALSTACK__GEOMETRY_HPP_

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "goalstack/common.hpp"

namespace goalstack
{

using Vec2 = Eigen::Vector2d;
/// Sequence of planar points, one per row.
using Trajectory = Eigen::Matrix<double, Eigen::Dynamic, 2>;

/// Planar oriented box. `l` runs along the heading, `w` across it.
struct Box2d
{
  double x = 0.0;
  double y = 0.0;
  double w = 1.0;
  double l = 1.0;
  double yaw = 0.0;

  Vec2 center() const { return {x, y}; }

  bool operator==(const Box2d &) const = default;
};

inline bool box_valid(const Box2d & b)
{
  return b.w > 0.0 && b.l > 0.0 && std::isfinite(b.x) && std::isfinite(b.y) &&
         std::isfinite(b.yaw);
}

/// Corners in counter-clockwise order.
inline std::array<Vec2, 4> box_corners(const Box2d & b)
{
  const double c = std::cos(b.yaw);
  const double s = std::sin(b.yaw);
  const Vec2 ax(c * b.l * 0.5, s * b.l * 0.5);
  const Vec2 ay(-s * b.w * 0.5, c * b.w * 0.5);
  const Vec2 ctr = b.center();
  return {ctr - ax - ay, ctr + ax - ay, ctr + ax + ay, ctr - ax + ay};
}

/// Express a world point in the box frame (u along heading, v lateral).
inline Vec2 to_box_frame(const Box2d & b, const Vec2 & p)
{
  const double c = std::cos(b.yaw);
  const double s = std::sin(b.yaw);
  const Vec2 d = p - b.center();
  return {c * d.x() + s * d.y(), -s * d.x() + c * d.y()};
}

/// Closed containment test.
inline bool box_contains(const Box2d & b, const Vec2 & p)
{
  const Vec2 q = to_box_frame(b, p);
  return std::abs(q.x()) <= b.l * 0.5 && std::abs(q.y()) <= b.w * 0.5;
}

/// Half-open containment, [-l/2, l/2) x [-w/2, w/2) in the box frame with a 1e-9
/// tolerance on both edges. Rasterization uses this so that boxes tiling the
/// plane label every cell exactly once.
inline bool box_contains_half_open(const Box2d & b, const Vec2 & p)
{
  constexpr double eps = 1e-9;
  const Vec2 q = to_box_frame(b, p);
  return q.x() >= -b.l * 0.5 - eps && q.x() < b.l * 0.5 - eps && q.y() >= -b.w * 0.5 - eps &&
         q.y() < b.w * 0.5 - eps;
}

inline double cross2(const Vec2 & a, const Vec2 & b) { return a.x() * b.y() - a.y() * b.x(); }

inline double polygon_area(const std::vector<Vec2> & poly)
{
  double a = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    a += cross2(poly[i], poly[(i + 1) % n]);
  }
  return 0.5 * std::abs(a);
}

/// Sutherland-Hodgman clip of `subject` against a convex CCW `clip` polygon.
inline std::vector<Vec2> clip_convex(std::vector<Vec2> subject, const std::vector<Vec2> & clip)
{
  const std::size_t m = clip.size();
  for (std::size_t e = 0; e < m && !subject.empty(); ++e) {
    const Vec2 & a = clip[e];
    const Vec2 & b = clip[(e + 1) % m];
    const Vec2 edge = b - a;
    auto side = [&](const Vec2 & p) { return cross2(edge, p - a); };
    std::vector<Vec2> out;
    out.reserve(subject.size() + 2);
    const std::size_t n = subject.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 & cur = subject[i];
      const Vec2 & prev = subject[(i + n - 1) % n];
      const double sc = side(cur);
      const double sp = side(prev);
      if (sc >= 0.0) {
        if (sp < 0.0) {
          out.push_back(prev + (cur - prev) * (sp / (sp - sc)));
        }
        out.push_back(cur);
      } else if (sp >= 0.0) {
        out.push_back(prev + (cur - prev) * (sp / (sp - sc)));
      }
    }
    subject = std::move(out);
  }
  return subject;
}

inline double box_intersection_area(const Box2d & a, const Box2d & b)
{
  const auto ca = box_corners(a);
  const auto cb = box_corners(b);
  const std::vector<Vec2> pa(ca.begin(), ca.end());
  const std::vector<Vec2> pb(cb.begin(), cb.end());
  const auto inter = clip_convex(pa, pb);
  return inter.size() < 3 ? 0.0 : polygon_area(inter);
}

/// Bird's-eye-view IoU of two oriented boxes via convex polygon clipping.
inline double rotated_iou(const Box2d & a, const Box2d & b)
{
  // Cheap reject on bounding circles.
  const double ra = 0.5 * std::hypot(a.w, a.l);
  const double rb = 0.5 * std::hypot(b.w, b.l);
  if ((a.center() - b.center()).norm() > ra + rb) {
    return 0.0;
  }
  if (a == b) {
    return 1.0;
  }
  const double inter = box_intersection_area(a, b);
  const double uni = a.w * a.l + b.w * b.l - inter;
  if (uni <= 0.0) {
    return 0.0;
  }
  return std::clamp(inter / uni, 0.0, 1.0);
}

/// Heading of each waypoint from finite differences. `start` is the position
/// before the first waypoint; stationary steps fall back to the previous heading
/// (or `fallback_yaw` at the start).
inline std::vector<double> waypoint_headings(
  const std::vector<Vec2> & path, const Vec2 & start, double fallback_yaw)
{
  std::vector<double> yaw(path.size(), fallback_yaw);
  Vec2 prev = start;
  double last = fallback_yaw;
  for (std::size_t t = 0; t < path.size(); ++t) {
    const Vec2 d = path[t] - prev;
    if (d.norm() > 1e-6) {
      last = std::atan2(d.y(), d.x());
    }
    yaw[t] = last;
    prev = path[t];
  }
  return yaw;
}

}  // namespace goalstack

#endif  // GOALSTACK__GEOMETRY_HPP_
